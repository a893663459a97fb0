"""Local integrity measure of equilibria in time-delayed systems."""
from ._backend import BACKEND
from .classifier import CellGrid, ClassifierParams, Outcome
from .estimator import EstimatorConfig, LimRunResult, estimate_lim
from .initfn import InitialKind, build_initial_history
from .metric import MetricSpace, default_weights, metric_space_for
from .semidisc import build_map, simulate, spectral_radius
from .systems import (
    DuffingParams,
    PendulumParams,
    Turning1Params,
    Turning2Params,
    custom_system,
    duffing,
    pendulum_nltva,
    turning_1dof,
    turning_2dof,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CellGrid",
    "ClassifierParams",
    "Outcome",
    "EstimatorConfig",
    "LimRunResult",
    "estimate_lim",
    "InitialKind",
    "build_initial_history",
    "MetricSpace",
    "default_weights",
    "metric_space_for",
    "build_map",
    "simulate",
    "spectral_radius",
    "DuffingParams",
    "PendulumParams",
    "Turning1Params",
    "Turning2Params",
    "custom_system",
    "duffing",
    "pendulum_nltva",
    "turning_1dof",
    "turning_2dof",
]
