"""First-order delay differential equation models.

Every model has the form::

    y'(t) = A y(t) + B y(t - tau) + g(y(t), y(t - tau))

where ``A`` and ``B`` carry the complete linearization about the desired
equilibrium and ``g`` only the super-linear remainder. The built-in
systems also carry a native nonlinearity code so the compiled kernel can
evaluate ``g`` without calling back into Python.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidInputError, InvalidParameterError, NoVibrationModesError
from .numerics import ModeSet, as_matrix, undamped_modes

__all__ = [
    "NL_NONE",
    "NL_DUFFING",
    "NL_TURNING1",
    "NL_TURNING2",
    "NL_PENDULUM",
    "NL_PYTHON",
    "DdeSystem",
    "DuffingParams",
    "Turning1Params",
    "Turning2Params",
    "PendulumParams",
    "duffing",
    "turning_1dof",
    "turning_2dof",
    "pendulum_nltva",
    "custom_system",
    "free_matrix",
]

# native nonlinearity codes understood by both kernel backends
NL_NONE = 0
NL_DUFFING = 1
NL_TURNING1 = 2
NL_TURNING2 = 3
NL_PENDULUM = 4
NL_PYTHON = 5

Nonlinearity = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _zero_nonlinearity(dim: int) -> Nonlinearity:
    def g(y, yd):
        return np.zeros(dim)

    return g


def free_matrix(M, K) -> np.ndarray:
    """State matrix ``[[0, I], [-M^-1 K, 0]]`` of the undamped free system."""
    M = as_matrix(M, "M")
    K = as_matrix(K, "K")
    n = M.shape[0]
    F = np.zeros((2 * n, 2 * n))
    F[:n, n:] = np.eye(n)
    F[n:, :n] = -np.linalg.solve(M, K)
    return F


@dataclass(frozen=True, eq=False)
class DdeSystem:
    """A nonlinear DDE with a single discrete delay.

    ``free_dynamics`` is the state matrix of the undamped, undelayed,
    uncontrolled linearization about the equilibrium. It drives the
    free-vibration initial functions even when the undamped stiffness is
    indefinite and no :class:`ModeSet` exists.
    """

    name: str
    A: np.ndarray
    B: np.ndarray
    nonlinearity: Nonlinearity
    tau: float
    equilibrium: np.ndarray
    modes: Optional[ModeSet] = None
    free_dynamics: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    nl_code: int = NL_PYTHON
    nl_params: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        if A.shape != B.shape:
            raise InvalidInputError(f"A {A.shape} and B {B.shape} differ in shape")
        eq = np.asarray(self.equilibrium, dtype=np.float64).reshape(-1)
        if eq.shape[0] != A.shape[0]:
            raise InvalidInputError("equilibrium dimension does not match A")
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise InvalidParameterError(f"delay must be positive, got {self.tau}")
        for name, value in (("A", A), ("B", B), ("equilibrium", eq)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        nlp = np.asarray(self.nl_params, dtype=np.float64).reshape(-1)
        nlp.setflags(write=False)
        object.__setattr__(self, "nl_params", nlp)
        object.__setattr__(self, "tau", float(self.tau))
        if self.free_dynamics is not None:
            F = as_matrix(self.free_dynamics, "free_dynamics")
            if F.shape != A.shape:
                raise InvalidInputError("free_dynamics must match the state dimension")
            object.__setattr__(self, "free_dynamics", F)
        res = self.equilibrium_residual()
        scale = 1.0 + np.abs(A).sum() + np.abs(B).sum()
        if not res <= 1e-10 * scale:
            raise InvalidInputError(
                f"equilibrium is not a fixed point of the system (residual {res:.3e})"
            )

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    def rhs(self, y, yd) -> np.ndarray:
        """Full right-hand side for current state `y` and delayed state `yd`."""
        y = np.asarray(y, dtype=np.float64)
        yd = np.asarray(yd, dtype=np.float64)
        return self.A @ y + self.B @ yd + np.asarray(self.nonlinearity(y, yd))

    def equilibrium_residual(self) -> float:
        eq = self.equilibrium
        return float(np.max(np.abs(self.rhs(eq, eq))))


# -- Duffing oscillator with a delayed linear term ---------------------------


@dataclass(frozen=True)
class DuffingParams:
    a: float = 1.0
    zeta: float = 0.1
    tau: float = 0.1

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParameterError(f"cubic coefficient a must be positive, got {self.a}")
        if not self.zeta >= 0:
            raise InvalidParameterError(f"damping ratio must be nonnegative, got {self.zeta}")
        if not self.tau > 0:
            raise InvalidParameterError(f"delay must be positive, got {self.tau}")


def duffing(params: DuffingParams) -> DdeSystem:
    """``x'' + 2 zeta x' - x(t - tau) + a x^3 = 0`` about ``x = -1/sqrt(a)``.

    Only the desired equilibrium is registered; the symmetric stable
    equilibrium at ``+1/sqrt(a)`` is left for the estimator to discover.
    """
    a, zeta = params.a, params.zeta
    x_eq = -1.0 / math.sqrt(a)
    A = np.array([[0.0, 1.0], [0.0, -2.0 * zeta]])
    B = np.array([[0.0, 0.0], [1.0, 0.0]])

    def g(y, yd):
        return np.array([0.0, -a * y[0] ** 3])

    # undamped stiffness about x_eq with the delayed term taken as instantaneous
    k_eff = 3.0 * a * x_eq**2 - 1.0
    M, K = np.eye(1), np.array([[k_eff]])
    return DdeSystem(
        name="duffing",
        A=A,
        B=B,
        nonlinearity=g,
        tau=params.tau,
        equilibrium=np.array([x_eq, 0.0]),
        modes=undamped_modes(M, K),
        free_dynamics=free_matrix(M, K),
        params={"a": a, "zeta": zeta, "tau": params.tau},
        nl_code=NL_DUFFING,
        nl_params=np.array([a]),
    )


# -- single-DoF turning -------------------------------------------------------


def _cutting_poly(p: float, eta2: float, eta3: float, delta):
    return p * (eta2 * delta**2 + eta3 * delta**3)


@dataclass(frozen=True)
class Turning1Params:
    zeta1: float = 0.05
    p: float = 0.1
    eta2: float = -0.5209
    eta3: float = 0.6547
    tau: float = 9.0

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError(f"delay must be positive, got {self.tau}")
        if not self.p >= 0:
            raise InvalidParameterError(f"chip width must be nonnegative, got {self.p}")

    @property
    def spindle_speed(self) -> float:
        """Dimensionless spindle speed ``2 pi / tau``."""
        return 2.0 * math.pi / self.tau


def turning_1dof(params: Turning1Params) -> DdeSystem:
    """Regenerative turning: ``x'' + 2 zeta1 x' + x = p (D + eta2 D^2 + eta3 D^3)``.

    ``D = x(t - tau) - x(t)``; the linear part of the cutting force is split
    between ``A`` (``-p x(t)``) and ``B`` (``+p x(t - tau)``).
    """
    z1, p, e2, e3 = params.zeta1, params.p, params.eta2, params.eta3
    A = np.array([[0.0, 1.0], [-(1.0 + p), -2.0 * z1]])
    B = np.array([[0.0, 0.0], [p, 0.0]])

    def g(y, yd):
        return np.array([0.0, _cutting_poly(p, e2, e3, yd[0] - y[0])])

    M, K = np.eye(1), np.eye(1)
    return DdeSystem(
        name="turning1",
        A=A,
        B=B,
        nonlinearity=g,
        tau=params.tau,
        equilibrium=np.zeros(2),
        modes=undamped_modes(M, K),
        free_dynamics=free_matrix(M, K),
        params={"zeta1": z1, "p": p, "eta2": e2, "eta3": e3, "tau": params.tau},
        nl_code=NL_TURNING1,
        nl_params=np.array([p, e2, e3]),
    )


# -- turning with a nonlinear tuned vibration absorber -----------------------


@dataclass(frozen=True)
class Turning2Params:
    zeta1: float = 0.05
    p: float = 0.1
    eta2: float = -0.5209
    eta3: float = 0.6547
    tau: float = 9.0
    mu: float = 0.05
    gamma: float = 1.069
    zeta2: float = 0.1437
    alpha3: float = 0.0

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParameterError(f"delay must be positive, got {self.tau}")
        if not self.mu > 0:
            raise InvalidParameterError(f"mass ratio must be positive, got {self.mu}")
        if not self.gamma > 0:
            raise InvalidParameterError(f"frequency ratio must be positive, got {self.gamma}")
        if not self.p >= 0:
            raise InvalidParameterError(f"chip width must be nonnegative, got {self.p}")

    @property
    def spindle_speed(self) -> float:
        return 2.0 * math.pi / self.tau


def turning_2dof(params: Turning2Params) -> DdeSystem:
    """Turning tool (x1) with an absorber (x2); state ``(x1, x2, x1', x2')``."""
    z1, p, e2, e3 = params.zeta1, params.p, params.eta2, params.eta3
    mu, gam, z2, a3 = params.mu, params.gamma, params.zeta2, params.alpha3
    c = 2.0 * z2 * gam * mu  # absorber damping, tool equation
    k = gam**2 * mu  # absorber stiffness, tool equation
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    A[2] = [-(1.0 + k + p), k, -(2.0 * z1 + c), c]
    A[3] = [gam**2, -(gam**2), 2.0 * z2 * gam, -2.0 * z2 * gam]
    B = np.zeros((4, 4))
    B[2, 0] = p

    def g(y, yd):
        s3 = (y[0] - y[1]) ** 3
        return np.array(
            [
                0.0,
                0.0,
                _cutting_poly(p, e2, e3, yd[0] - y[0]) - a3 * s3,
                a3 * s3 / mu,
            ]
        )

    M = np.diag([1.0, mu])
    K = np.array([[1.0 + k, -k], [-k, k]])
    return DdeSystem(
        name="turning2",
        A=A,
        B=B,
        nonlinearity=g,
        tau=params.tau,
        equilibrium=np.zeros(4),
        modes=undamped_modes(M, K),
        free_dynamics=free_matrix(M, K),
        params={
            "zeta1": z1, "p": p, "eta2": e2, "eta3": e3, "tau": params.tau,
            "mu": mu, "gamma": gam, "zeta2": z2, "alpha3": a3,
        },
        nl_code=NL_TURNING2,
        nl_params=np.array([p, e2, e3, a3, mu]),
    )


# -- inverted pendulum with absorber and delayed PD control ------------------


@dataclass(frozen=True)
class PendulumParams:
    mu: float = 0.1
    gamma: float = 2.3
    zeta2: float = 0.174
    p: float = 1.0
    d: float = 2.8
    tau: float = 0.5

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidParameterError(f"inertia ratio must be positive, got {self.mu}")
        if not self.gamma > 0:
            raise InvalidParameterError(f"frequency ratio must be positive, got {self.gamma}")
        if not self.tau > 0:
            raise InvalidParameterError(f"delay must be positive, got {self.tau}")


def pendulum_nltva(params: PendulumParams) -> DdeSystem:
    """Upright pendulum (phi1) with an absorber (phi2) under delayed PD control.

    ``phi1'' = sin(phi1) - absorber coupling - p phi1(t - tau) - d phi1'(t - tau)``.
    The linearized gravity term ``+phi1`` sits in ``A``; ``g`` keeps the exact
    remainder ``sin(phi1) - phi1``.
    """
    mu, gam, z2, p, d = params.mu, params.gamma, params.zeta2, params.p, params.d
    c = 2.0 * z2 * mu * gam
    k = mu * gam**2
    A = np.zeros((4, 4))
    A[0, 2] = A[1, 3] = 1.0
    A[2] = [1.0 - k, k, -c, c]
    A[3] = [gam**2, -(gam**2), 2.0 * z2 * gam, -2.0 * z2 * gam]
    B = np.zeros((4, 4))
    B[2, 0] = -p
    B[2, 2] = -d

    def g(y, yd):
        return np.array([0.0, 0.0, math.sin(y[0]) - y[0], 0.0])

    M = np.diag([1.0, mu])
    K = np.array([[k - 1.0, -k], [-k, k]])
    try:
        modes = undamped_modes(M, K)
    except NoVibrationModesError:
        # the uncontrolled upright position is unstable: no modes, no default weights
        modes = None
    return DdeSystem(
        name="pendulum",
        A=A,
        B=B,
        nonlinearity=g,
        tau=params.tau,
        equilibrium=np.zeros(4),
        modes=modes,
        free_dynamics=free_matrix(M, K),
        params={"mu": mu, "gamma": gam, "zeta2": z2, "p": p, "d": d, "tau": params.tau},
        nl_code=NL_PENDULUM,
        nl_params=np.zeros(0),
    )


def custom_system(
    A,
    B,
    tau: float,
    equilibrium,
    nonlinearity: Optional[Nonlinearity] = None,
    modes: Optional[ModeSet] = None,
    free_dynamics=None,
    name: str = "custom",
) -> DdeSystem:
    """Wrap user matrices and a Python nonlinearity callback.

    Without a callback the system is linear and runs fully in the native
    kernel; with one, the kernel calls back into Python every step.
    """
    A = as_matrix(A, "A")
    if nonlinearity is None:
        nl, code = _zero_nonlinearity(A.shape[0]), NL_NONE
    else:
        nl, code = nonlinearity, NL_PYTHON
    return DdeSystem(
        name=name,
        A=A,
        B=B,
        nonlinearity=nl,
        tau=tau,
        equilibrium=equilibrium,
        modes=modes,
        free_dynamics=free_dynamics,
        nl_code=code,
    )
