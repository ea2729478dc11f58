"""Counting visits in windows of expected length t.

Near a periodic point the visits come in geometric clusters and their count
follows a Polya-Aeppli law with the extremal index as parameter. Without
clustering the count is Poisson. The script prints the two total variation
distances for a clustered and an unclustered case and a few pmf values.
"""

from fractions import Fraction

import numpy as np

from dynei.dynamics import IidSelection, MapSpec, QuenchedRotation
from dynei.estimators import theta_order_m
from dynei.harness.scenarios import Scenario, visit_run
from dynei.observables import Fixed
from dynei.visits import ModelPmf, tv_distance

T, WINDOWS, P = 50.0, 20_000, 0.99
doubling, tripling = MapSpec.doubling(), MapSpec.tripling()

cases = [
    ("2x | 2x+1/2 at 0", Scenario(doubling, IidSelection((doubling, MapSpec.affine(2, Fraction(1, 2))), (0.5, 0.5)),
                                  Fixed(0.0))),
    ("3x+omega at 0", Scenario(tripling, QuenchedRotation(np.sqrt(2) - 1, 0.0), Fixed(0.0))),
]

for name, sc in cases:
    run = visit_run(sc, T, WINDOWS, P, seed=3)
    h = run.histogram
    theta = theta_order_m(run.series, 5)
    pa, po = ModelPmf("polya_aeppli", T, theta), ModelPmf("poisson", T)
    print(f"{name}: window {h.window}, mean count {h.mean():.2f}, theta_5 {theta:.4f}")
    print(f"  TV to {pa.label}: {tv_distance(h, pa):.4f}   TV to {po.label}: {tv_distance(h, po):.4f}")
    freq = h.counts / h.n_windows
    for k in (0, 30, 50, 70):
        f = freq[k] if k < freq.size else 0.0
        print(f"  k={k:3d} empirical {f:.4f}  polya-aeppli {float(pa.pmf(k)):.4f}  poisson {float(po.pmf(k)):.4f}")
