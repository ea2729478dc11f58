"""Extremal index estimation for deterministic and randomly perturbed maps."""

from .dynamics import (AdditiveUniform, IidSelection, MapSpec, NoNoise, OrbitStream, QuenchedRotation,
                       Sequential, TrajectoryConfig, orbit, step, trajectory)
from .estimators import (EIEstimate, QkSpectrum, estimate, q_hat, qk_spectrum, suveges, theta_from_qk,
                         theta_order_m)
from .observables import (Diagonal, ExceedanceSeries, Fixed, MovingDiscrete, MovingMapDriven, MovingUniform,
                          Observational, distance, empirical_quantile, exceedances)
from .visits import ModelPmf, VisitHistogram, polya_aeppli_pmf, tv_distance, visit_histogram

__all__ = [
    "AdditiveUniform", "IidSelection", "MapSpec", "NoNoise", "OrbitStream", "QuenchedRotation", "Sequential",
    "TrajectoryConfig", "orbit", "step", "trajectory", "EIEstimate", "QkSpectrum", "estimate", "q_hat",
    "qk_spectrum", "suveges", "theta_from_qk", "theta_order_m", "Diagonal", "ExceedanceSeries", "Fixed",
    "MovingDiscrete", "MovingMapDriven", "MovingUniform", "Observational", "distance", "empirical_quantile",
    "exceedances", "ModelPmf", "VisitHistogram", "polya_aeppli_pmf", "tv_distance", "visit_histogram",
]
