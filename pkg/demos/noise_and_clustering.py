"""Noise on the dynamics or on the target and what it does to clustering.

The tripling map fixes 1/2, so exceedances near 1/2 come in runs and the index
is 2/3. Additive noise pushes the orbit off the fixed point and the index climbs
towards 1 once the noise is comparable with the target ball. Drawing the target
centre at random has a similar effect.
"""

import numpy as np

from dynei.dynamics import AdditiveUniform, MapSpec, NoNoise
from dynei.estimators import theta_order_m
from dynei.harness.scenarios import Scenario
from dynei.observables import Fixed, MovingUniform

N, P, REPLICAS = 2 * 10**6, 0.999, 4
RADIUS = (1 - P) / 2  # half-width of a ball of measure 1 - p on the circle
tripling = MapSpec.tripling()


def index(sc):
    return np.mean([theta_order_m(sc.series(N, P, seed=1, replica=r), 5) for r in range(REPLICAS)])


print(f"tripling map, target 1/2, ball radius about {RADIUS:g}")
print(f"{'eps / radius':>12s} {'additive':>9s} {'target':>9s}")
for f in (0, 0.1, 1, 10, 100):
    eps = f * RADIUS
    dyn = Scenario(tripling, AdditiveUniform(eps) if eps else NoNoise(), Fixed(0.5))
    tgt = Scenario(tripling, target=MovingUniform(0.5, eps))
    print(f"{f:12g} {index(dyn):9.4f} {index(tgt):9.4f}")
