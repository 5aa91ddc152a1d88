"""
Calibrating the posterior threshold
===================================

Find the smallest threshold on a 3-decimal grid that keeps the
family-wise error rate under the global null at 5%.
"""

from basketoc import CPP, DesignSpec, InterimConfig, StageLayout, WeightConfig, adjust_lambda
from basketoc.calibration import null_fwer

design = DesignSpec(k=3, p0=0.2)
layout = StageLayout(n=20, n1=10)
config = WeightConfig(CPP(a=1, b=1))
interim = InterimConfig("postpred", 0.1, 0.9)

cal = adjust_lambda(design, layout, config, interim, alpha=0.05, prec_digits=3)
print(f"lambda = {cal.lam}, FWER = {cal.fwer:.7f}")

# outcomes are discrete, so the FWER jumps as lambda moves down one step
below = null_fwer(design, layout, round(cal.lam - 0.001, 3), config, interim)
print(f"one grid step lower the FWER is {below:.7f}")
