"""Dense linear algebra used by the discrete map and the distance metric.

Matrices are plain ``float64`` numpy arrays. All systems handled here are
small (at most 8x8), so nothing is sparse.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import DimensionError, InvalidInputError, NoVibrationModesError

__all__ = [
    "ModeSet",
    "as_matrix",
    "matrix_exponential",
    "exp_integral",
    "undamped_modes",
]


def as_matrix(a, name: str = "matrix", square: bool = True) -> np.ndarray:
    """Validate and return `a` as a finite 2-D float64 array."""
    m = np.array(a, dtype=np.float64)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return m


def _check_step(h: float) -> float:
    h = float(h)
    if not np.isfinite(h) or h <= 0.0:
        raise InvalidInputError(f"time step must be positive and finite, got {h}")
    return h


def matrix_exponential(A, h: float) -> np.ndarray:
    """Return ``exp(A h)``.

    Scaling and squaring with a degree-13 Pade approximant (scipy's
    implementation of the Al-Mohy/Higham algorithm).
    """
    A = as_matrix(A, "A")
    h = _check_step(h)
    return la.expm(A * h)


def exp_integral(A, h: float) -> np.ndarray:
    """Return ``int_0^h exp(A (h - s)) ds``.

    Read off the top-right block of ``exp([[A, I], [0, 0]] h)``, which
    stays valid when `A` is singular.
    """
    A = as_matrix(A, "A")
    h = _check_step(h)
    n = A.shape[0]
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = A
    aug[:n, n:] = np.eye(n)
    return la.expm(aug * h)[:n, n:].copy()


@dataclass(frozen=True)
class ModeSet:
    """Undamped vibration modes of a mechanical system.

    ``shapes`` holds mass-normalized mode shapes as columns, so that
    ``x = shapes @ q`` maps modal to physical coordinates and
    ``q = inverse_shapes @ x`` maps back.
    """

    frequencies: np.ndarray
    shapes: np.ndarray
    inverse_shapes: np.ndarray

    @property
    def dof(self) -> int:
        return len(self.frequencies)

    def to_modal(self, y) -> np.ndarray:
        """Map a state ``(x, xdot)`` to ``(q, qdot)``."""
        y = np.asarray(y, dtype=np.float64)
        n = self.dof
        return np.concatenate([self.inverse_shapes @ y[:n], self.inverse_shapes @ y[n:]])

    def to_physical(self, z) -> np.ndarray:
        """Map ``(q, qdot)`` back to ``(x, xdot)``."""
        z = np.asarray(z, dtype=np.float64)
        n = self.dof
        return np.concatenate([self.shapes @ z[:n], self.shapes @ z[n:]])


def undamped_modes(M, K) -> ModeSet:
    """Solve ``K phi = omega^2 M phi`` for mass-normalized modes.

    Raises
    ------
    NoVibrationModesError
        If any generalized eigenvalue is nonpositive; the caller then has
        to supply distance weights explicitly.
    """
    M = as_matrix(M, "M")
    K = as_matrix(K, "K")
    if M.shape != K.shape:
        raise DimensionError(f"M {M.shape} and K {K.shape} differ in shape")
    if not (np.allclose(M, M.T) and np.allclose(K, K.T)):
        raise InvalidInputError("M and K must be symmetric")
    try:
        lam, phi = la.eigh(K, M)
    except la.LinAlgError as exc:
        raise InvalidInputError("M is not positive definite") from exc
    if np.any(lam <= 0.0):
        raise NoVibrationModesError(
            f"no vibration modes: generalized eigenvalues {lam} are not all positive"
        )
    # eigh returns ascending eigenvalues and M-orthonormal eigenvectors
    return ModeSet(
        frequencies=np.sqrt(lam),
        shapes=phi,
        inverse_shapes=phi.T @ M,
    )
