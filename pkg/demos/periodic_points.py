"""How the order-m estimate finds the period of the target.

Below the period of a periodic target the estimate reads 1, because no
exceedance can come back in fewer steps than the period. From the period on it
settles at the closed-form index, which depends on the expansion along the
orbit. A generic target gives 1 for every m.
"""

import math
from fractions import Fraction

import numpy as np

from dynei.dynamics import MapSpec
from dynei.estimators import suveges, theory_periodic_ei, theta_order_m
from dynei.harness.scenarios import Scenario
from dynei.observables import Fixed

N, P, REPLICAS = 2 * 10**6, 0.999, 4
doubling = MapSpec.doubling()

targets = [("z=0", 0, 1), ("z=1/3", Fraction(1, 3), 2), ("z=4/5", Fraction(4, 5), 4), ("z=1/pi", 1 / math.pi, None)]

print(f"doubling map, {N} points, p={P}, {REPLICAS} replicas")
print(f"{'target':8s} {'theory':>7s} " + " ".join(f"m={m:<5d}" for m in range(1, 7)) + " suveges")
for name, z, period in targets:
    sc = Scenario(doubling, target=Fixed(z))
    series = [sc.series(N, P, seed=0, replica=r) for r in range(REPLICAS)]
    by_m = [np.mean([theta_order_m(s, m) for s in series]) for m in range(1, 7)]
    suv = np.mean([suveges(s) for s in series])
    theory = 1.0 if period is None else theory_periodic_ei(doubling, z, period)
    print(f"{name:8s} {theory:7.4f} " + " ".join(f"{v:7.4f}" for v in by_m) + f" {suv:7.4f}")

print("\nSuveges only looks at consecutive exceedances, so it misses clusters of period 2 and 4.")
