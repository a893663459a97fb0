"""Run configuration: system choice, grid, tunables and sweep axes.

A :class:`RunConfig` is a plain value. It serializes to a dict holding
every setting that affects a run, so a saved result file can be loaded
back as a config and rerun.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifier import CellGrid, ClassifierParams
from .errors import ConfigError, DelayLimError
from .estimator import EstimatorConfig
from .initfn import InitialKind
from .metric import metric_space_for
from .semidisc import build_map
from .systems import (
    DuffingParams,
    PendulumParams,
    Turning1Params,
    Turning2Params,
    duffing,
    pendulum_nltva,
    turning_1dof,
    turning_2dof,
)

__all__ = [
    "SYSTEMS",
    "PRESETS",
    "SweepAxis",
    "RunConfig",
    "build_system",
    "build_problem",
    "system_param_names",
]

SYSTEMS = {
    "duffing": (DuffingParams, duffing),
    "turning1": (Turning1Params, turning_1dof),
    "turning2": (Turning2Params, turning_2dof),
    "pendulum": (PendulumParams, pendulum_nltva),
}

# Spindle speed is swept in place of the delay for the turning models.
_SPEED_ALIAS = "omega"

# Per-system defaults. Anything not listed falls back to RunConfig's own
# defaults. ghost_factor is raised where the delay is short compared with
# the natural period, so slow passes through one cell near the equilibrium
# are not taken for new fixed points. The turning models sit close to a
# weakly damped Hopf point, where a slowly shrinking spiral revisits the
# same cells for many periods; k_rep is raised so it is not called periodic.
# Duffing trajectories on both sides of the saddle's stable manifold share
# long stretches of cells, so reuse needs a longer window to tell them apart.
PRESETS = {
    "duffing": {
        "lower": [-5.0, -5.0],
        "upper": [5.0, 5.0],
        "n_disc": 501,
        "r": 30,
        "ghost_factor": 10.0,
        "m_match": 30,
    },
    "turning1": {
        "lower": [-2.0, -2.0],
        "upper": [2.0, 2.0],
        "n_disc": 201,
        "r": 30,
        "k_rep": 10,
    },
    "turning2": {
        "lower": [-2.0, -4.0, -2.0, -4.0],
        "upper": [2.0, 4.0, 2.0, 4.0],
        "n_disc": 101,
        "r": 30,
        "k_rep": 10,
    },
    "pendulum": {
        "lower": [-250.0, -250.0, -100.0, -250.0],
        "upper": [250.0, 250.0, 100.0, 250.0],
        "n_disc": 301,
        "r": 30,
        "weights": [1.0, 1.0, 1.0, 1.0],
        "ghost_factor": 40.0,
        "neighborhood": 2,
    },
}


def system_param_names(system: str) -> list[str]:
    cls = SYSTEMS[system][0]
    names = [f.name for f in dataclasses.fields(cls)]
    if system.startswith("turning"):
        names.append(_SPEED_ALIAS)
    return names


@dataclass(frozen=True)
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ConfigError(f"sweep count for {self.name!r} must be a positive integer")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ConfigError(f"sweep range for {self.name!r} must be finite")
        object.__setattr__(self, "count", int(self.count))
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "stop", float(self.stop))

    @classmethod
    def parse(cls, text: str) -> "SweepAxis":
        """Parse ``name:min:max:count``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"sweep must look like name:min:max:count, got {text!r}")
        try:
            return cls(parts[0], float(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise ConfigError(f"bad sweep {text!r}: {exc}") from None

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.start])
        return np.linspace(self.start, self.stop, self.count)


_CLASSIFIER_KEYS = (
    "n_tau", "dwell_factor", "ghost_factor", "neighborhood", "k_rep", "m_match", "reuse",
)


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a run.

    ``None`` for grid and classifier fields means "use the system preset",
    resolved by :meth:`resolved`. Result files always store the resolved
    values.
    """

    system: str = "duffing"
    params: dict = field(default_factory=dict)
    sweep: tuple = ()
    lower: Optional[list] = None
    upper: Optional[list] = None
    n_disc: Optional[int] = None
    r: Optional[int] = None
    n_iter: int = 50
    t_max: float = 1000.0
    init: str = "freevib"
    weights: Optional[list] = None
    bisection_steps: int = 5
    n_tau: Optional[int] = None
    dwell_factor: Optional[float] = None
    ghost_factor: Optional[float] = None
    neighborhood: Optional[int] = None
    k_rep: Optional[int] = None
    m_match: Optional[int] = None
    reuse: Optional[bool] = None
    seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"unknown system {self.system!r}; choose from {sorted(SYSTEMS)}")
        names = system_param_names(self.system)
        for k in self.params:
            if k not in names:
                raise ConfigError(f"system {self.system!r} has no parameter {k!r}; known: {names}")
        sweep = tuple(a if isinstance(a, SweepAxis) else SweepAxis(**a) for a in self.sweep)
        if len(sweep) > 2:
            raise ConfigError("at most two sweep axes are supported")
        for a in sweep:
            if a.name not in names:
                raise ConfigError(f"cannot sweep {a.name!r}: system {self.system!r} has no such parameter")
        if len({a.name for a in sweep}) != len(sweep):
            raise ConfigError("sweep axes must name different parameters")
        object.__setattr__(self, "sweep", sweep)
        object.__setattr__(self, "params", {k: float(v) for k, v in self.params.items()})
        try:
            InitialKind.parse(self.init)
        except DelayLimError as exc:
            raise ConfigError(str(exc)) from None
        if self.n_iter < 1:
            raise ConfigError("iterations must be >= 1")
        if not self.t_max > 0:
            raise ConfigError("t_max must be positive")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    def resolved(self) -> "RunConfig":
        """Copy with every preset-dependent field filled in."""
        preset = PRESETS[self.system]
        base = ClassifierParams()
        updates = {}
        for name in ("lower", "upper", "n_disc", "r", "weights"):
            if getattr(self, name) is None and name in preset:
                updates[name] = preset[name]
        for name in _CLASSIFIER_KEYS:
            if getattr(self, name) is None:
                updates[name] = preset.get(name, getattr(base, name))
        if updates.get("m_match", self.m_match) is None:
            updates["m_match"] = updates.get("n_tau", self.n_tau)
        cfg = dataclasses.replace(self, **updates)
        if cfg.lower is None or cfg.upper is None or cfg.n_disc is None or cfg.r is None:
            raise ConfigError("grid bounds, n_disc and r must be set")
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["sweep"] = [dataclasses.asdict(a) for a in self.sweep]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        d = dict(d)
        d["sweep"] = tuple(SweepAxis(**a) for a in d.get("sweep", ()))
        return cls(**d)

    def grid_points(self) -> list[dict]:
        """Parameter overrides for every sweep point, first axis slowest."""
        if not self.sweep:
            return [{}]
        axes = [a.values() for a in self.sweep]
        pts = []
        for idx in np.ndindex(*[len(v) for v in axes]):
            pts.append({a.name: float(axes[k][i]) for k, (a, i) in enumerate(zip(self.sweep, idx))})
        return pts

    def classifier_params(self) -> ClassifierParams:
        cfg = self.resolved()
        return ClassifierParams(
            n_tau=cfg.n_tau,
            dwell_factor=cfg.dwell_factor,
            ghost_factor=cfg.ghost_factor,
            neighborhood=cfg.neighborhood,
            k_rep=cfg.k_rep,
            m_match=cfg.m_match,
            t_max=cfg.t_max,
            reuse=cfg.reuse,
        )


def build_system(system: str, params: dict):
    cls, builder = SYSTEMS[system]
    p = dict(params)
    if _SPEED_ALIAS in p:
        omega = p.pop(_SPEED_ALIAS)
        if not omega > 0:
            raise ConfigError("spindle speed must be positive")
        if "tau" in p:
            raise ConfigError("give either tau or omega, not both")
        p["tau"] = 2.0 * math.pi / omega
    try:
        return builder(cls(**p))
    except DelayLimError as exc:
        raise ConfigError(str(exc)) from None


def build_problem(config: RunConfig, overrides: Optional[dict] = None, seed=None):
    """Assemble ``(smap, metric, grid, estimator_config)`` for one run."""
    cfg = config.resolved()
    params = dict(cfg.params)
    params.update(overrides or {})
    system = build_system(cfg.system, params)
    try:
        smap = build_map(system, cfg.r)
        metric = metric_space_for(system, cfg.weights)
        grid = CellGrid(cfg.lower, cfg.upper, cfg.n_disc)
        est = EstimatorConfig(
            n_iter=cfg.n_iter,
            bisection_steps=cfg.bisection_steps,
            seed=cfg.seed if seed is None else seed,
            initial_kind=InitialKind.parse(cfg.init),
            classifier=cfg.classifier_params(),
        )
    except DelayLimError as exc:
        raise ConfigError(str(exc)) from None
    if grid.dimension != system.dimension:
        raise ConfigError(
            f"bounds have {grid.dimension} coordinates, system {cfg.system!r} has {system.dimension}"
        )
    return smap, metric, grid, est
