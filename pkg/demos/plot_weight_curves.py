"""
How much is borrowed
====================

Weight given to basket 2 when basket 1 has 10 responses out of 20, for the
calibrated power prior and for the Jensen-Shannon weights.  Both peak when
the two baskets agree.
"""

import numpy as np

from basketoc import CPP, JSD, DesignSpec, WeightConfig, weight_curve
from basketoc.cli import weights_svg

design = DesignSpec(k=2, p0=0.2)
curves = []
for a, b in [(1, 1), (2, 1), (3, 3)]:
    curve = weight_curve(20, 10, design, WeightConfig(CPP(a, b)))
    curves.append((f"cpp a={a}, b={b}", curve))
curves.append(("jsd eps=2", weight_curve(20, 10, design, WeightConfig(JSD(2, 0)))))

for label, curve in curves:
    w = np.array([v for _, v in curve])
    print(f"{label:>16}: max at r2={w.argmax()}, weight at r2=5 is {w[5]:.3f}")

with open("weights.svg", "w", encoding="utf-8") as fh:
    fh.write(weights_svg(curves, 20))
