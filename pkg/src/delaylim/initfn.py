"""Constrained initial histories on ``[-r h, 0]`` ending at a headpoint."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import InvalidInputError, UnsupportedOperationError

__all__ = [
    "InitialKind",
    "InitialHistory",
    "history_times",
    "build_initial_history",
]


class InitialKind(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    JUMP = "jump"
    FREE_VIBRATION = "freevib"

    @classmethod
    def parse(cls, value) -> "InitialKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise InvalidInputError(f"unknown initial kind {value!r}; use one of {names}") from None


@dataclass(frozen=True, eq=False)
class InitialHistory:
    """``r + 1`` samples at times ``-r h, ..., -h, 0``, oldest first."""

    samples: np.ndarray
    kind: InitialKind
    r: int
    h: float

    @property
    def headpoint(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def times(self) -> np.ndarray:
        return history_times(self.r, self.h)


def history_times(r: int, h: float) -> np.ndarray:
    return -h * np.arange(r, -1, -1, dtype=np.float64)


def _free_vibration(system, offset, times, nonmodal):
    modes = system.modes
    if modes is not None:
        n = modes.dof
        z0 = modes.to_modal(offset)
        q0, v0, w = z0[:n], z0[n:], modes.frequencies
        out = np.empty((len(times), 2 * n))
        for j, t in enumerate(times):
            c, s = np.cos(w * t), np.sin(w * t)
            out[j] = modes.to_physical(np.concatenate([q0 * c + v0 / w * s, -q0 * w * s + v0 * c]))
        return out
    if nonmodal == "expm" and system.free_dynamics is not None:
        F = system.free_dynamics
        return np.array([la.expm(F * t) @ offset for t in times])
    raise UnsupportedOperationError(
        f"free-vibration history needs vibration modes; system {system.name!r} has none"
    )


def build_initial_history(kind, headpoint, system, smap, nonmodal: str = "error") -> InitialHistory:
    """Sample an initial history of the given kind ending at `headpoint`.

    Parameters
    ----------
    kind : InitialKind or str
        ``constant``, ``linear``, ``jump`` or ``freevib``.
    headpoint : array_like
        State at ``t = 0``.
    system : DdeSystem
    smap : SemiDiscMap
        Supplies ``r`` and ``h``.
    nonmodal : {"error", "expm"}
        What a free-vibration history does for a system without vibration
        modes. ``"expm"`` propagates the undamped, uncontrolled linear
        dynamics backward with a matrix exponential (which reduces to the
        modal formula whenever modes exist).

    Returns
    -------
    InitialHistory
        The last sample is `headpoint` exactly.
    """
    kind = InitialKind.parse(kind)
    if nonmodal not in ("error", "expm"):
        raise InvalidInputError(f"nonmodal must be 'error' or 'expm', got {nonmodal!r}")
    x0 = np.array(headpoint, dtype=np.float64).reshape(-1)
    if len(x0) != system.dimension:
        raise InvalidInputError(
            f"headpoint has dimension {len(x0)}, system has {system.dimension}"
        )
    if not np.all(np.isfinite(x0)):
        raise InvalidInputError("headpoint has non-finite entries")
    eq = system.equilibrium
    times = history_times(smap.r, smap.h)
    if kind is InitialKind.CONSTANT:
        samples = np.tile(x0, (len(times), 1))
    elif kind is InitialKind.LINEAR:
        # the sampled span is r h, just short of tau; stretch over it so the
        # oldest sample is the equilibrium exactly
        frac = np.linspace(0.0, 1.0, len(times))
        samples = eq + frac[:, None] * (x0 - eq)
    elif kind is InitialKind.JUMP:
        samples = np.tile(eq, (len(times), 1))
    else:
        samples = eq + _free_vibration(system, x0 - eq, times, nonmodal)
    samples[-1] = x0
    samples.setflags(write=False)
    return InitialHistory(samples=samples, kind=kind, r=smap.r, h=smap.h)
