"""Single runs and parameter sweeps built from a :class:`RunConfig`.

Every sweep point gets its own RNG stream from ``SeedSequence(seed,
spawn_key=(index,))``, so a point's result depends only on the config,
the master seed and its position in the grid. Rows are returned in grid
order whatever the job count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig, build_problem
from .errors import ConfigError, DelayLimError
from .estimator import estimate_lim

__all__ = ["SweepResult", "point_seed", "run_point", "run_single", "run_sweep"]


@dataclass
class SweepResult:
    """Resolved config plus one row per grid point, in grid order."""

    config: RunConfig
    rows: list = field(default_factory=list)
    kind: str = "sweep"

    @property
    def swept(self) -> list[str]:
        return [a.name for a in self.config.sweep]


def point_seed(seed: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(index,))


def run_point(config_dict: dict, index: int, overrides: dict, seed) -> dict:
    """Run one grid point and flatten the result into a row dict.

    Library errors are caught and reported through ``status = "error"``;
    the row keeps the point's parameters so the table stays complete.
    """
    config = RunConfig.from_dict(config_dict)
    row = {
        "index": index,
        "params": dict(overrides),
        "lim": math.nan,
        "status": "error",
        "n_iter": 0,
        "n_traj": 0,
        "n_attractors": 0,
        "n_steps": 0,
        "wall_s": 0.0,
        "spectral_radius": math.nan,
        "r0": math.nan,
        "cell_diagonal": math.nan,
        "history": [],
        "attractors": [],
        "error": None,
    }
    try:
        res = estimate_lim(*build_problem(config, overrides, seed=seed))
    except DelayLimError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(
        lim=res.lim,
        status=res.status,
        n_iter=res.n_iter,
        n_traj=res.n_traj,
        n_attractors=len(res.attractors),
        n_steps=res.n_steps,
        wall_s=res.wall_s,
        spectral_radius=res.spectral_radius,
        r0=res.r0,
        cell_diagonal=res.cell_diagonal,
        history=list(res.history),
        attractors=res.attractors,
    )
    return row


def run_single(config: RunConfig) -> SweepResult:
    """One estimation with the master seed used directly."""
    if config.sweep:
        raise ConfigError("estimate takes no sweep axes; use the sweep command")
    cfg = config.resolved()
    # surface config errors here instead of as an error row
    build_problem(cfg)
    row = run_point(cfg.to_dict(), 0, {}, cfg.seed)
    return SweepResult(cfg, [row], kind="estimate")


def run_sweep(config: RunConfig) -> SweepResult:
    """One estimation per grid point, up to ``config.jobs`` at a time."""
    if not config.sweep:
        raise ConfigError("sweep needs at least one --sweep axis")
    cfg = config.resolved()
    build_problem(cfg)
    points = cfg.grid_points()
    cdict = cfg.to_dict()
    args = [(cdict, i, pt, point_seed(cfg.seed, i)) for i, pt in enumerate(points)]
    if cfg.jobs == 1 or len(points) == 1:
        rows = [run_point(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(cfg.jobs, len(points))) as pool:
            futures = [pool.submit(run_point, *a) for a in args]
            rows = [f.result() for f in futures]
    return SweepResult(cfg, rows, kind="sweep")
