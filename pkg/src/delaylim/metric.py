"""Energy-weighted distance between headpoints.

A state difference is mapped to modal coordinates ``(q, qdot)`` and
measured as::

    d^2 = sum_i alpha_i q_i^2 + sum_i alpha_{n+i} qdot_i^2

The default weights ``alpha = [omega_1^2, ..., omega_n^2, 1, ..., 1]`` make
``d^2`` twice the undamped modal energy. In matrix form ``d^2 = e^T G e``
with ``G = T^T diag(alpha) T`` and ``T`` the modal transform.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as la

from .errors import InvalidInputError, UnsupportedOperationError
from .numerics import ModeSet

__all__ = [
    "WeightVector",
    "MetricSpace",
    "default_weights",
    "distance",
    "modal_energy_coordinates",
    "metric_space_for",
]


@dataclass(frozen=True, eq=False)
class WeightVector:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64).reshape(-1)
        if v.size == 0 or not np.all(np.isfinite(v)) or not np.all(v > 0):
            raise InvalidInputError(f"weights must be finite and positive, got {v}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)


def default_weights(modes: ModeSet) -> WeightVector:
    """``[omega_1^2, ..., omega_n^2, 1, ..., 1]``.

    Raises
    ------
    InvalidInputError
        If a natural frequency is zero, in which case the weights are
        undefined and must be supplied by the user.
    """
    w = np.asarray(modes.frequencies, dtype=np.float64)
    if not np.all(w > 0):
        raise InvalidInputError("weights undefined: a natural frequency is zero")
    return WeightVector(np.concatenate([w**2, np.ones_like(w)]))


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """Weighted Euclidean geometry around the desired equilibrium.

    Without `modal` the transform is the identity and weights apply to the
    physical coordinates directly.
    """

    weights: WeightVector
    origin: np.ndarray
    modal: Optional[ModeSet] = None

    def __post_init__(self):
        if not isinstance(self.weights, WeightVector):
            object.__setattr__(self, "weights", WeightVector(self.weights))
        o = np.array(self.origin, dtype=np.float64).reshape(-1)
        if len(o) != len(self.weights):
            raise InvalidInputError(
                f"{len(self.weights)} weights for a {len(o)}-dimensional state"
            )
        if self.modal is not None and 2 * self.modal.dof != len(o):
            raise InvalidInputError("modal transform does not match the state dimension")
        o.setflags(write=False)
        object.__setattr__(self, "origin", o)
        T = self.transform
        G = T.T @ np.diag(self.weights.values) @ T
        G = 0.5 * (G + G.T)
        G.setflags(write=False)
        object.__setattr__(self, "_G", G)
        S = np.sqrt(self.weights.values)[:, None] * T
        object.__setattr__(self, "_to_round", S)
        object.__setattr__(self, "_from_round", np.linalg.inv(S))

    @property
    def dimension(self) -> int:
        return len(self.origin)

    @property
    def transform(self) -> np.ndarray:
        """Matrix mapping a physical state difference to modal coordinates."""
        if self.modal is None:
            return np.eye(self.dimension)
        return la.block_diag(self.modal.inverse_shapes, self.modal.inverse_shapes)

    @property
    def matrix(self) -> np.ndarray:
        """Gram matrix ``G`` with ``d^2 = e^T G e``."""
        return self._G

    def _check(self, y, name):
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if len(y) != self.dimension:
            raise InvalidInputError(f"{name} has dimension {len(y)}, expected {self.dimension}")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError(f"{name} has non-finite entries")
        return y

    def distance(self, a, b) -> float:
        e = self._check(a, "a") - self._check(b, "b")
        z = self.transform @ e
        return math.sqrt(float(np.dot(self.weights.values, z * z)))

    def norm(self, y) -> float:
        """Distance from the origin."""
        return self.distance(y, self.origin)

    def to_round(self, e) -> np.ndarray:
        """Map a physical offset to coordinates where the metric is Euclidean."""
        return self._to_round @ np.asarray(e, dtype=np.float64)

    def from_round(self, w) -> np.ndarray:
        """Inverse of :meth:`to_round`; returns a physical offset."""
        return self._from_round @ np.asarray(w, dtype=np.float64)

    def face_distance(self, k: int, value: float) -> float:
        """Metric distance from the origin to the hyperplane ``y_k = value``."""
        ginv = np.linalg.inv(self._G)
        return abs(value - self.origin[k]) / math.sqrt(ginv[k, k])

    def inscribed_radius(self, lower, upper) -> float:
        """Radius of the largest metric ball about the origin inside the box."""
        r = math.inf
        for k in range(self.dimension):
            r = min(r, self.face_distance(k, lower[k]), self.face_distance(k, upper[k]))
        return r

    def modal_energy_coordinates(self, y) -> np.ndarray:
        """``rho_i = sqrt(omega_i^2 q_i^2 + qdot_i^2)`` of ``y - origin`` per mode."""
        if self.modal is None:
            raise UnsupportedOperationError("modal energy coordinates need a modal transform")
        z = self.transform @ (self._check(y, "y") - self.origin)
        n = self.modal.dof
        w = self.modal.frequencies
        return np.sqrt(w**2 * z[:n] ** 2 + z[n:] ** 2)


def distance(space: MetricSpace, a, b) -> float:
    return space.distance(a, b)


def modal_energy_coordinates(space: MetricSpace, y) -> np.ndarray:
    return space.modal_energy_coordinates(y)


def metric_space_for(system, weights=None) -> MetricSpace:
    """Metric about the system's equilibrium.

    With ``weights=None`` the default modal weights are used, which requires
    the system to have vibration modes. Explicit weights are applied in
    modal coordinates when modes exist and in physical coordinates otherwise.
    """
    if weights is None:
        if system.modes is None:
            raise InvalidInputError(
                f"system {system.name!r} has no vibration modes; supply explicit weights"
            )
        return MetricSpace(default_weights(system.modes), system.equilibrium, system.modes)
    return MetricSpace(WeightVector(weights), system.equilibrium, system.modes)
