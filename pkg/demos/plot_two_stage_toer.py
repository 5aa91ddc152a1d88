"""
Type I error of a two-stage basket trial
========================================

Three baskets, 20 patients each with an interim look after 10.  Baskets
stop early when the posterior predictive probability of a final rejection
drops below 0.1 (futility) or exceeds 0.9 (efficacy).
"""

from basketoc import CPP, DesignSpec, InterimConfig, StageLayout, TrueScenario, WeightConfig, evaluate, toer

design = DesignSpec(k=3, p0=0.2)
layout = StageLayout(n=20, n1=10)
config = WeightConfig(CPP(a=1, b=1))
interim = InterimConfig("postpred", prob_futstop=0.1, prob_effstop=0.9)

# global null: every basket has response rate p0
result = toer(design, layout, 0.95, config, interim=interim)
print("basket-wise TOER:", result["rejection_probabilities"])
print("FWER:", result["fwer"])

###############################################################################
# One active basket.  The two null baskets borrow from it, which inflates
# their error rates, while the early stopping keeps sample sizes down.

oc = evaluate(design, layout, 0.95, config, TrueScenario((0.2, 0.2, 0.5)), interim)
print("rejection probabilities:", oc.rejection_prob)
print("expected sample size per basket:", oc.ess)
print("expected number of correct decisions:", oc.ecd)
