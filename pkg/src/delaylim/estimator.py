"""Iterative estimate of the local integrity measure (LIM).

The LIM is the radius of the largest metric ball around the desired
equilibrium whose headpoints all converge back to it. Every divergent
headpoint found inside the current ball shrinks the estimate to its own
distance, so the estimate is an upper bound that only decreases.

Headpoints are chosen by a fixed schedule:

1. uniform draws in the ball inscribed in the grid, until one diverges;
2. bisection on the segment between that headpoint and the equilibrium;
3. restart from the point of the last divergent trajectory nearest the
   equilibrium, bisecting again whenever that diverges;
4. boundary-biased draws in the current ball for the remaining budget,
   returning to step 2 on any divergence.

Before the schedule starts the equilibrium is tested for instability: the
linearized map must have spectral radius below one, and a probe started
inside the equilibrium cell must converge. Dwell-based classification
alone cannot see a weak instability, because a probe that starts inside
the convergence neighborhood is accepted after one dwell time.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _backend
from .classifier import (
    OUT_OF_BOUNDS,
    AttractorRegistry,
    CellGrid,
    Classification,
    ClassifierParams,
    Outcome,
    TrajectoryRecord,
    storage_stride,
    window_hash,
)
from .errors import ConfigError, InvalidParameterError
from .initfn import InitialHistory, InitialKind, build_initial_history
from .metric import MetricSpace
from .semidisc import SemiDiscMap, spectral_radius

__all__ = [
    "STRATEGY_PROBE",
    "STRATEGY_RANDOM",
    "STRATEGY_BISECTION",
    "STRATEGY_CLOSEST",
    "STRATEGY_BOUNDARY",
    "EstimatorConfig",
    "LimState",
    "LimRunResult",
    "TraceResult",
    "trace",
    "estimate_lim",
    "next_ich",
    "update_lim",
    "sample_ball",
]

STRATEGY_PROBE = "probe"
STRATEGY_RANDOM = "random"
STRATEGY_BISECTION = "bisection"
STRATEGY_CLOSEST = "closest"
STRATEGY_BOUNDARY = "boundary"


@dataclass(frozen=True)
class EstimatorConfig:
    n_iter: int = 50
    bisection_steps: int = 5
    seed: Optional[int] = 0
    initial_kind: InitialKind = InitialKind.FREE_VIBRATION
    nonmodal: str = "expm"
    stability_check: bool = True
    classifier: ClassifierParams = field(default_factory=ClassifierParams)

    def __post_init__(self):
        if self.n_iter < 1:
            raise InvalidParameterError("n_iter must be >= 1")
        if self.bisection_steps < 0:
            raise InvalidParameterError("bisection_steps must be >= 0")
        object.__setattr__(self, "initial_kind", InitialKind.parse(self.initial_kind))


@dataclass
class TraceResult:
    classification: Classification
    n_steps: int
    final_state: np.ndarray
    closest_state: Optional[np.ndarray]
    closest_distance: float
    run_cells: np.ndarray
    run_counts: np.ndarray
    run_d2: np.ndarray
    run_states: np.ndarray


def trace(
    smap: SemiDiscMap,
    history: InitialHistory,
    registry: AttractorRegistry,
    metric: MetricSpace,
    max_steps: Optional[int] = None,
) -> TraceResult:
    """Simulate one initial history and classify it against `registry`.

    The registry is only read, so independent calls may share it.
    """
    p = registry.params
    grid = registry.grid
    system = smap.system
    if max_steps is None:
        max_steps = int(math.ceil(p.t_max / smap.h)) + 1
    out = _backend.run_trajectory(
        smap.P, smap.QB, smap.Q, system.nl_code, system.nl_params, system.nonlinearity,
        history.samples, grid.lower, grid.upper, grid.n_disc, metric.matrix, metric.origin,
        registry.desired_region, registry.known, registry.reuse_index,
        smap.h, system.tau * p.dwell_factor, system.tau * p.ghost_factor, p.t_max,
        storage_stride(smap.r, p.n_tau), p.n_tau, p.k_rep, p.match_length,
        p.reuse, p.neighborhood, max_steps,
    )
    code, cell, matched, n_steps, final, closest, d2, cells, counts, run_d2, run_states = out
    cls = registry.resolve(code, cell, matched)
    return TraceResult(
        classification=cls,
        n_steps=int(n_steps),
        final_state=final,
        closest_state=closest,
        closest_distance=math.sqrt(d2) if math.isfinite(d2) else math.inf,
        run_cells=cells,
        run_counts=counts,
        run_d2=run_d2,
        run_states=run_states,
    )


def sample_ball(rng: np.random.Generator, metric: MetricSpace, radius: float, bias: float) -> np.ndarray:
    """Random point in the metric ball of `radius` about the origin.

    The radius is ``radius * u**(1/bias)`` with ``u`` uniform: ``bias`` equal
    to the dimension gives a uniform ball, larger values push mass toward
    the surface. The direction is uniform in the coordinates where the
    metric is Euclidean.
    """
    dim = metric.dimension
    while True:
        w = rng.standard_normal(dim)
        nw = float(np.linalg.norm(w))
        if nw > 0.0:
            break
    u = rng.random()
    rho = radius * u ** (1.0 / bias)
    return metric.origin + metric.from_round(w / nw * rho)


@dataclass
class LimState:
    """Mutable progress of one LIM estimation."""

    rng: np.random.Generator
    registry: AttractorRegistry
    metric: MetricSpace
    r0: float
    cell_diagonal: float
    bisection_steps: int = 5
    lim: float = math.inf
    iteration: int = 0
    history: list = field(default_factory=list)
    strategy: str = STRATEGY_RANDOM
    # bisection bookkeeping: segment fractions along eq -> target
    target: Optional[np.ndarray] = None
    lo: float = 0.0
    hi: float = 1.0
    steps_left: int = 0
    last_divergent: Optional[TrajectoryRecord] = None
    closest_tried: bool = False

    @property
    def radius(self) -> float:
        """Radius of the ball currently sampled (the LIM once bounded)."""
        return min(self.lim, self.r0)

    def start_bisection(self, target) -> None:
        self.target = np.array(target, dtype=np.float64)
        self.lo, self.hi = 0.0, 1.0
        self.steps_left = self.bisection_steps
        self.strategy = STRATEGY_BISECTION if self.bisection_steps > 0 else STRATEGY_CLOSEST
        self.closest_tried = False


def next_ich(state: LimState):
    """Pick the next headpoint; returns ``(headpoint, strategy)``."""
    eq = state.metric.origin
    dim = state.metric.dimension
    if state.strategy == STRATEGY_BISECTION and state.steps_left > 0:
        mid = 0.5 * (state.lo + state.hi)
        return eq + mid * (state.target - eq), STRATEGY_BISECTION
    if state.strategy in (STRATEGY_BISECTION, STRATEGY_CLOSEST):
        rec = state.last_divergent
        if rec is not None and rec.closest_state is not None and not state.closest_tried:
            state.closest_tried = True
            cand = rec.closest_state
            if (
                state.registry.grid.cell_of(cand) is not OUT_OF_BOUNDS
                and state.metric.norm(cand) < state.lim - state.cell_diagonal
            ):
                state.strategy = STRATEGY_CLOSEST
                return np.array(cand, dtype=np.float64), STRATEGY_CLOSEST
        state.strategy = STRATEGY_BOUNDARY
    if state.strategy == STRATEGY_BOUNDARY and math.isfinite(state.lim):
        return sample_ball(state.rng, state.metric, state.radius, 2.0 * dim), STRATEGY_BOUNDARY
    return sample_ball(state.rng, state.metric, state.r0, float(dim)), STRATEGY_RANDOM


def update_lim(state: LimState, classification: Classification, ich, ich_distance: float) -> LimState:
    """Shrink the LIM to `ich_distance` for a closer divergent headpoint."""
    if classification.divergent and ich_distance < state.lim:
        state.lim = float(ich_distance)
    return state


def _advance_schedule(state: LimState, strategy: str, record: TrajectoryRecord) -> None:
    divergent = record.classification.divergent
    if divergent:
        state.last_divergent = record
    if strategy == STRATEGY_BISECTION:
        mid = 0.5 * (state.lo + state.hi)
        if divergent:
            state.hi = mid
        else:
            state.lo = mid
        state.steps_left -= 1
        if state.steps_left <= 0:
            state.strategy = STRATEGY_CLOSEST
            state.closest_tried = False
        return
    if divergent and record.ich_distance <= state.lim:
        # a new closest divergent headpoint: bisect toward it
        state.start_bisection(record.ich)
    elif strategy == STRATEGY_CLOSEST:
        state.strategy = STRATEGY_BOUNDARY
    elif strategy == STRATEGY_RANDOM and math.isfinite(state.lim):
        state.strategy = STRATEGY_BOUNDARY


@dataclass
class LimRunResult:
    """Outcome of :func:`estimate_lim`.

    ``status`` is ``"ok"``, ``"boundary_limited"`` when no headpoint
    diverged and the LIM is the inscribed radius of the grid, or
    ``"unstable"`` when the linearized map has spectral radius >= 1 or the
    probe next to the equilibrium diverged.
    """

    lim: float
    history: list
    status: str
    n_traj: int
    n_steps: int
    attractors: list
    trajectories: list
    r0: float
    cell_diagonal: float
    spectral_radius: float = 0.0
    wall_s: float = 0.0

    @property
    def n_iter(self) -> int:
        return len(self.history)


def _probe_point(grid: CellGrid, eq: np.ndarray) -> np.ndarray:
    # a quarter cell off the equilibrium, kept inside the equilibrium cell
    cell = np.asarray(grid.cell_of(eq))
    lo_c = grid.lower + cell * grid.widths
    hi_c = lo_c + grid.widths
    p = eq + 0.25 * grid.widths
    over = p >= hi_c
    p[over] = (eq[over] + hi_c[over]) * 0.5
    p = np.minimum(p, grid.upper)
    return np.where(p == eq, 0.5 * (lo_c + eq), p)


def estimate_lim(
    smap: SemiDiscMap,
    metric: MetricSpace,
    grid: CellGrid,
    config: EstimatorConfig = EstimatorConfig(),
) -> LimRunResult:
    """Estimate the LIM of the desired equilibrium of ``smap.system``.

    Parameters
    ----------
    smap : SemiDiscMap
        Discretized system; its equilibrium is the desired fixed point.
    metric : MetricSpace
        Distance used for the ball; its origin must be the equilibrium.
    grid : CellGrid
        Space boundary and cell subdivision.
    config : EstimatorConfig

    Raises
    ------
    ConfigError
        If the equilibrium lies outside the grid or the metric is centred
        elsewhere.
    """
    t_start = time.perf_counter()
    system = smap.system
    eq = system.equilibrium
    if grid.dimension != system.dimension or grid.cell_of(eq) is OUT_OF_BOUNDS:
        raise ConfigError("the desired equilibrium must lie inside the grid bounds")
    if not np.allclose(metric.origin, eq, rtol=0.0, atol=1e-14):
        raise ConfigError("metric origin differs from the system equilibrium")
    registry = AttractorRegistry(grid, eq, config.classifier)
    r0 = metric.inscribed_radius(grid.lower, grid.upper)
    diag = math.sqrt(float(grid.widths @ metric.matrix @ grid.widths))
    state = LimState(
        rng=np.random.default_rng(config.seed),
        registry=registry,
        metric=metric,
        r0=r0,
        cell_diagonal=diag,
        bisection_steps=config.bisection_steps,
    )
    summaries = []
    n_steps_total = 0
    next_id = 0

    def run(ich, strategy):
        nonlocal n_steps_total, next_id
        hist = build_initial_history(config.initial_kind, ich, system, smap, nonmodal=config.nonmodal)
        res = trace(smap, hist, registry, metric)
        closest, cdist = res.closest_state, res.closest_distance
        cls = res.classification
        tail, tdist = None, math.inf
        if cls.kind is Outcome.MATCHED_PREVIOUS and cls.via == "trajectory":
            # the skipped remainder follows the matched record after the window
            m = registry.params.match_length
            end = registry.reuse_end[window_hash(res.run_cells[-m:])]
            tail, tdist = registry.record(cls.matched_id).closest_from(end)
            if tdist < cdist:
                closest, cdist = tail, tdist
        dist = metric.norm(ich)
        rec = TrajectoryRecord(
            id=next_id,
            ich=np.array(ich, dtype=np.float64),
            ich_distance=dist,
            classification=cls,
            run_cells=res.run_cells,
            run_counts=res.run_counts,
            n_steps=res.n_steps,
            closest_state=closest,
            closest_distance=cdist,
            strategy=strategy,
            run_d2=res.run_d2,
            run_states=res.run_states,
            tail_state=tail,
            tail_distance=tdist,
        )
        registry.register(rec)
        next_id += 1
        n_steps_total += res.n_steps
        summaries.append(
            {
                "id": rec.id,
                "strategy": strategy,
                "ich": [float(v) for v in rec.ich],
                "distance": dist,
                "outcome": cls.label(),
                "converged": cls.converged,
                "n_steps": res.n_steps,
            }
        )
        return rec

    rho = spectral_radius(smap) if config.stability_check else 0.0
    status = "ok"
    unstable = rho >= 1.0
    if not unstable:
        probe = run(_probe_point(grid, eq), STRATEGY_PROBE)
        unstable = probe.classification.divergent
    if unstable:
        state.lim = 0.0
        state.history = [0.0] * config.n_iter
        status = "unstable"
    else:
        for _ in range(config.n_iter):
            ich, strategy = next_ich(state)
            rec = run(ich, strategy)
            update_lim(state, rec.classification, rec.ich, rec.ich_distance)
            _advance_schedule(state, strategy, rec)
            state.iteration += 1
            state.history.append(state.radius)
        if not math.isfinite(state.lim):
            status = "boundary_limited"
    attractors = [
        {"cell": int(c), "center": [float(v) for v in grid.center(grid.unflat(c))], "found_by": int(rid)}
        for c, rid in sorted(registry.attractors.items())
    ]
    return LimRunResult(
        lim=state.history[-1],
        history=list(state.history),
        status=status,
        n_traj=len(registry),
        n_steps=n_steps_total,
        attractors=attractors,
        trajectories=summaries,
        r0=r0,
        cell_diagonal=diag,
        spectral_radius=rho,
        wall_s=time.perf_counter() - t_start,
    )
