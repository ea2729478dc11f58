"""Estimating the index of a series read from a CSV file.

Writes a doubling-map orbit to a temporary CSV, reads it back as state
vectors, turns it into distances to a target and estimates the index with both
estimators. The same steps are available as ``dynei ei --input file.csv``.
"""

import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from dynei.dynamics import MapSpec, TrajectoryConfig, trajectory
from dynei.harness.ingest import ei_from_series, ingest_series

x = trajectory(MapSpec.doubling(), cfg=TrajectoryConfig(10**6, seed=5))

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "orbit.csv"
    np.savetxt(path, x, delimiter=",", header="x", comments="")
    for target in ((0.0,), (float(Fraction(4, 5)),), (0.3183,)):
        values = ingest_series(path, target, metric="circle")
        for method in ("suveges", "order-m"):
            theta, s = ei_from_series(values, method, m=5, p=0.999)
            print(f"target {target[0]:.4f} {method:8s} theta={theta:.4f} from {s.count} exceedances")
