"""
Checking exact results by simulation
====================================

The simulator draws trial data at random but makes every decision with the
same functions as the exact engine, so the two must agree up to Monte
Carlo error.
"""

import numpy as np

from basketoc import CPP, DesignSpec, InterimConfig, StageLayout, TrueScenario, WeightConfig, evaluate, simulate_oc

design = DesignSpec(k=3, p0=0.2)
layout = StageLayout(n=20, n1=10)
config = WeightConfig(CPP(1, 1))
interim = InterimConfig("postpred", 0.1, 0.9)
scenario = TrueScenario((0.2, 0.2, 0.5))

exact = evaluate(design, layout, 0.95, config, scenario, interim)
sim = simulate_oc(design, layout, 0.95, config, scenario, interim, replicates=200_000, seed=2024)

for field in ("rejection_prob", "ess", "mean_posterior_mean"):
    z = (getattr(sim.oc, field) - getattr(exact, field)) / getattr(sim.se, field)
    print(f"{field:>20}: z-scores {np.round(z, 2)}")
print(f"FWER exact {exact.fwer:.5f}, simulated {sim.oc.fwer:.5f} +/- {sim.se.fwer:.5f}")
