"""
Choosing CPP tuning parameters
==============================

Each (a, b) pair on the grid gets its own calibrated threshold; the pairs
are then ranked by the expected number of correct decisions averaged over
scenarios with 0 to 3 active baskets.
"""

from basketoc import DesignSpec, StageLayout, get_scenarios, opt_design, weight_grid

design = DesignSpec(k=3, p0=0.2)
scenarios = get_scenarios(design, p1=0.5)
print(scenarios.labels)
print(scenarios.values)

table = opt_design(
    design,
    StageLayout(n=20),
    weight_grid("cpp", a=[1, 2, 3], b=[1, 2, 3]),
    scenarios,
    alpha=0.05,
    prec_digits=3,
    workers=4,
)
for rec in table.records():
    print("  ".join(f"{v:.6f}" if isinstance(v, float) else str(v) for v in rec.values()))
