"""Semi-discretization of a nonlinear DDE into a finite-dimensional map.

Over each step ``[t_i, t_i + h)`` the delayed and nonlinear terms are frozen
at their sampled values, and the remaining linear ODE is integrated
exactly::

    y_{i+1} = P y_i + QB y_{i-r} + Q g(y_i, y_{i-r})

with ``P = exp(A h)`` and ``Q = int_0^h exp(A (h - s)) ds``. The step is
``h = tau / (r + 1/2)`` so that the average discretized delay equals tau.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, InvalidParameterError
from .numerics import exp_integral, matrix_exponential
from .systems import DdeSystem

__all__ = [
    "OVERFLOW_LIMIT",
    "SemiDiscMap",
    "DelayedState",
    "Trajectory",
    "build_map",
    "step",
    "simulate",
    "linear_map_matrix",
    "nonlinearity_jacobian",
    "spectral_radius",
]

OVERFLOW_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SemiDiscMap:
    P: np.ndarray
    Q: np.ndarray
    QB: np.ndarray
    r: int
    h: float
    system: DdeSystem

    @property
    def dimension(self) -> int:
        return self.P.shape[0]


def build_map(system: DdeSystem, r: int) -> SemiDiscMap:
    """Precompute the one-step map for sampling delay number `r`."""
    if int(r) != r or r < 1:
        raise InvalidParameterError(f"sampling delay number must be an integer >= 1, got {r}")
    r = int(r)
    h = system.tau / (r + 0.5)
    P = matrix_exponential(system.A, h)
    Q = exp_integral(system.A, h)
    QB = Q @ system.B
    for m in (P, Q, QB):
        m.setflags(write=False)
    return SemiDiscMap(P=P, Q=Q, QB=QB, r=r, h=h, system=system)


class DelayedState:
    """Ring buffer holding ``y_i, y_{i-1}, ..., y_{i-r}``.

    ``samples`` in the constructor are ordered oldest first, i.e. the
    layout of an initial history on ``[-r h, 0]``.
    """

    __slots__ = ("_buf", "_head", "time", "index")

    def __init__(self, samples, time: float = 0.0, index: int = 0):
        buf = np.array(samples, dtype=np.float64)
        if buf.ndim != 2:
            raise InvalidInputError("delayed state must be a (r+1, dim) array")
        if not np.all(np.isfinite(buf)):
            raise InvalidInputError("delayed state has non-finite entries")
        self._buf = buf
        self._head = buf.shape[0] - 1
        self.time = float(time)
        self.index = int(index)

    def __len__(self) -> int:
        return self._buf.shape[0]

    @property
    def current(self) -> np.ndarray:
        return self._buf[self._head]

    @property
    def delayed(self) -> np.ndarray:
        """The oldest sample, ``y_{i-r}``."""
        return self._buf[(self._head + 1) % len(self)]

    def samples(self) -> np.ndarray:
        """Buffer contents ordered oldest first."""
        return np.roll(self._buf, -(self._head + 1), axis=0)

    def push(self, y) -> None:
        slot = (self._head + 1) % len(self)
        self._buf[slot] = y
        self._head = slot

    def copy(self) -> "DelayedState":
        return DelayedState(self.samples(), self.time, self.index)


def _advance(smap: SemiDiscMap, y: np.ndarray, yd: np.ndarray) -> np.ndarray:
    g = np.asarray(smap.system.nonlinearity(y, yd), dtype=np.float64)
    return smap.P @ y + smap.QB @ yd + smap.Q @ g


def step(smap: SemiDiscMap, state: DelayedState) -> DelayedState:
    """Return the state one sampling step later (input left untouched).

    A non-finite result is stored as is; callers detect it with
    :func:`numpy.isfinite` and flag the trajectory as numerically diverged.
    """
    if len(state) != smap.r + 1:
        raise InvalidInputError(f"buffer holds {len(state)} samples, map needs {smap.r + 1}")
    with np.errstate(over="ignore", invalid="ignore"):
        y_new = _advance(smap, state.current, state.delayed)
    nxt = DelayedState.__new__(DelayedState)
    nxt._buf = state._buf.copy()
    nxt._head = state._head
    nxt.time = (state.index + 1) * smap.h
    nxt.index = state.index + 1
    nxt.push(y_new)
    return nxt


@dataclass
class Trajectory:
    """Sampled output of :func:`simulate`: history followed by new steps."""

    times: np.ndarray
    states: np.ndarray
    n_history: int
    diverged: bool = False


Observer = Callable[[float, np.ndarray], bool]


def simulate(
    smap: SemiDiscMap,
    initial,
    observer: Optional[Observer] = None,
    max_steps: Optional[int] = None,
) -> Trajectory:
    """Iterate the map from an initial history.

    The observer is called with ``(time, state)`` for the headpoint and after
    every step; returning ``False`` stops the run. Iteration also stops on a
    non-finite state or one exceeding :data:`OVERFLOW_LIMIT`, which sets
    ``diverged``.
    """
    if getattr(initial, "r", smap.r) != smap.r or not np.isclose(
        getattr(initial, "h", smap.h), smap.h, rtol=1e-12, atol=0.0
    ):
        raise InvalidInputError("initial history was sampled with a different r or h")
    samples = np.asarray(getattr(initial, "samples", initial), dtype=np.float64)
    if samples.shape != (smap.r + 1, smap.dimension):
        raise InvalidInputError(
            f"initial history shape {samples.shape} != {(smap.r + 1, smap.dimension)}"
        )
    state = DelayedState(samples)
    n_hist = smap.r + 1
    times = [-(smap.r - k) * smap.h for k in range(n_hist)]
    out = [row.copy() for row in samples]
    diverged = False
    keep_going = observer is None or observer(0.0, state.current.copy())
    i = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while keep_going and (max_steps is None or i < max_steps):
            y = _advance(smap, state.current, state.delayed)
            i += 1
            state.push(y)
            t = i * smap.h
            times.append(t)
            out.append(y.copy())
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > OVERFLOW_LIMIT:
                diverged = True
                break
            if observer is not None:
                keep_going = observer(t, y.copy())
    return Trajectory(np.array(times), np.array(out), n_hist, diverged)


def nonlinearity_jacobian(system: DdeSystem, step: float = 1e-6):
    """Central-difference Jacobians of ``g`` at the equilibrium.

    Returns ``(J, Jd)``, the derivatives with respect to the current and
    the delayed state. Both are zero for the built-in turning and
    pendulum models; Duffing has a linear part about ``x = -1``.
    """
    eq = np.asarray(system.equilibrium, dtype=np.float64)
    n = eq.shape[0]

    def g(y, yd):
        return np.asarray(system.nonlinearity(y, yd), dtype=np.float64)

    J = np.zeros((n, n))
    Jd = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step * max(1.0, abs(eq[k]))
        J[:, k] = (g(eq + e, eq) - g(eq - e, eq)) / (2.0 * e[k])
        Jd[:, k] = (g(eq, eq + e) - g(eq, eq - e)) / (2.0 * e[k])
    return J, Jd


def linear_map_matrix(smap: SemiDiscMap) -> np.ndarray:
    """Matrix of the map linearized about the equilibrium.

    Acts on deviations ``(y_i, ..., y_{i-r})``. The nonlinear term enters
    through its Jacobian, held constant over a step as in the map itself.
    """
    n, r = smap.dimension, smap.r
    J, Jd = nonlinearity_jacobian(smap.system)
    G = np.zeros(((r + 1) * n, (r + 1) * n))
    G[:n, :n] = smap.P + smap.Q @ J
    G[:n, r * n:] = smap.QB + smap.Q @ Jd
    G[n:, : r * n] = np.eye(r * n)
    return G


def spectral_radius(smap: SemiDiscMap) -> float:
    """Largest eigenvalue modulus of the linearized map about the equilibrium.

    Below 1 means the equilibrium of the discretized system is linearly
    asymptotically stable.
    """
    return float(np.max(np.abs(np.linalg.eigvals(linear_map_matrix(smap)))))
