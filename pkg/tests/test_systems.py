import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaylim import build_map, spectral_radius
from delaylim.errors import InvalidInputError, InvalidParameterError
from delaylim.semidisc import nonlinearity_jacobian
from delaylim.systems import (
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


def fd_jacobian_joint(system, eps=1e-6):
    """d rhs(y, y) / dy at the equilibrium, both arguments perturbed together."""
    eq = system.equilibrium
    n = len(eq)
    J = np.zeros((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = eps
        J[:, k] = (system.rhs(eq + e, eq + e) - system.rhs(eq - e, eq - e)) / (2 * eps)
    return J


def test_duffing_equilibria():
    s = duffing(DuffingParams(a=1.0))
    np.testing.assert_array_equal(s.equilibrium, [-1.0, 0.0])
    for x in (-1.0, 0.0, 1.0):
        assert np.max(np.abs(s.rhs([x, 0.0], [x, 0.0]))) < 1e-15


def test_duffing_a4():
    np.testing.assert_allclose(duffing(DuffingParams(a=4.0)).equilibrium, [-0.5, 0.0])


def test_duffing_residual():
    assert duffing(DuffingParams(a=1.0, zeta=0.1, tau=0.1)).equilibrium_residual() == 0.0


def test_duffing_rejects_nonpositive_a():
    with pytest.raises(InvalidParameterError):
        duffing(DuffingParams(a=0.0))


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.1, 5))
def test_duffing_g_is_odd(x, v, xd, vd, a):
    s = duffing(DuffingParams(a=a))
    y, yd = np.array([x, v]), np.array([xd, vd])
    np.testing.assert_allclose(s.nonlinearity(-y, -yd), -s.nonlinearity(y, yd), atol=1e-12)


def test_turning_spindle_speed():
    om = Turning1Params(tau=9.0).spindle_speed
    assert om == 2.0 * math.pi / 9.0
    # the commonly quoted 0.6987 for tau = 9 agrees to three digits only
    assert abs(om - 0.6987) < 1e-3


def test_turning_p0_reduces_to_oscillator():
    s = turning_1dof(Turning1Params(p=0.0))
    np.testing.assert_array_equal(s.B, np.zeros((2, 2)))
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert np.all(s.nonlinearity(rng.normal(size=2), rng.normal(size=2)) == 0.0)


def test_turning_residual():
    s = turning_1dof(Turning1Params(zeta1=0.05, p=0.3, eta2=-0.5209, eta3=0.6547))
    assert s.equilibrium_residual() == 0.0


def test_turning_rejects_bad_tau():
    with pytest.raises(InvalidParameterError):
        turning_1dof(Turning1Params(tau=0.0))
    with pytest.raises(InvalidParameterError):
        turning_2dof(Turning2Params(tau=-1.0))


def test_turning2_linear_absorber_has_cutting_terms_only():
    s = turning_2dof(Turning2Params(alpha3=0.0, p=0.2))
    y, yd = np.array([0.3, -0.4, 0.1, 0.2]), np.array([-0.2, 0.5, 0.0, 0.0])
    g = s.nonlinearity(y, yd)
    d = yd[0] - y[0]
    np.testing.assert_allclose(g, [0, 0, 0.2 * (-0.5209 * d**2 + 0.6547 * d**3), 0], atol=1e-15)


def test_turning2_reference_parameters_and_modes():
    s = turning_2dof(Turning2Params(zeta1=0.05, mu=0.05, gamma=1.069, zeta2=0.1437))
    w = s.modes.frequencies
    # by hand: M = diag(1, mu), K = [[1 + k, -k], [-k, k]], k = gamma^2 mu
    mu, k = 0.05, 1.069**2 * 0.05
    a, b, c = mu, -(mu * (1 + k) + k), k
    lam = np.sort(np.roots([a, b, c]))
    np.testing.assert_allclose(w, np.sqrt(lam), rtol=1e-12)
    assert w[0] < 1.0 < w[1]


def test_turning2_rejects_bad_mass_ratio():
    with pytest.raises(InvalidParameterError):
        turning_2dof(Turning2Params(mu=0.0))


def test_pendulum_defaults_and_uncontrolled_instability():
    PendulumParams(mu=0.1, gamma=2.3, zeta2=0.174, d=2.8, tau=0.5)
    s = pendulum_nltva(PendulumParams(p=0.0, d=0.0))
    np.testing.assert_array_equal(s.B, np.zeros((4, 4)))
    assert spectral_radius(build_map(s, 30)) > 1.0
    assert s.modes is None


def test_pendulum_g_vanishes_at_upright():
    s = pendulum_nltva(PendulumParams())
    np.testing.assert_array_equal(s.nonlinearity(np.zeros(4), np.ones(4)), np.zeros(4))


def test_pendulum_stability_interval():
    # linear stability for 1 < p < 2.695 with the other gains at default
    def rho(p):
        return spectral_radius(build_map(pendulum_nltva(PendulumParams(p=p)), 30))

    assert rho(1.1) < 1.0 and rho(2.66) < 1.0
    assert rho(0.9) > 1.0 and rho(2.75) > 1.0


def test_pendulum_rejects_bad_params():
    with pytest.raises(InvalidParameterError):
        pendulum_nltva(PendulumParams(mu=0.0))
    with pytest.raises(InvalidParameterError):
        pendulum_nltva(PendulumParams(gamma=-1.0))


BUILDERS = [
    (turning_1dof, st.builds(Turning1Params, zeta1=st.floats(0, 0.5), p=st.floats(0, 2),
                             eta2=st.floats(-2, 2), eta3=st.floats(-2, 2), tau=st.floats(0.1, 20))),
    (turning_2dof, st.builds(Turning2Params, p=st.floats(0, 2), mu=st.floats(0.01, 1),
                             gamma=st.floats(0.2, 3), zeta2=st.floats(0, 0.5), alpha3=st.floats(-5, 5))),
    (pendulum_nltva, st.builds(PendulumParams, mu=st.floats(0.01, 1), gamma=st.floats(0.2, 3),
                               p=st.floats(-3, 3), d=st.floats(-3, 3), tau=st.floats(0.05, 2))),
]


@pytest.mark.parametrize("builder,params", BUILDERS, ids=["turning1", "turning2", "pendulum"])
@settings(max_examples=30, deadline=None)
@given(data=st.data())
def test_linear_part_lives_in_A_and_B(builder, params, data):
    s = builder(data.draw(params))
    assert s.equilibrium_residual() < 1e-10
    np.testing.assert_allclose(fd_jacobian_joint(s), s.A + s.B, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5), st.floats(0, 1), st.floats(0.01, 2))
def test_duffing_linearization(a, zeta, tau):
    # the cubic term is kept whole in g, so its slope at x_eq adds to A + B
    s = duffing(DuffingParams(a=a, zeta=zeta, tau=tau))
    assert s.equilibrium_residual() < 1e-10
    expected = s.A + s.B
    expected[1, 0] -= 3.0 * a * s.equilibrium[0] ** 2
    np.testing.assert_allclose(fd_jacobian_joint(s), expected, atol=1e-6)
    J, Jd = nonlinearity_jacobian(s)
    np.testing.assert_allclose(J + Jd, expected - s.A - s.B, atol=1e-6)


def test_custom_system_checks_equilibrium():
    s = custom_system([[0.0]], [[-1.0]], 1.0, [0.0])
    assert s.dimension == 1
    with pytest.raises(InvalidInputError):
        custom_system([[0.0]], [[-1.0]], 1.0, [1.0])
    with pytest.raises(InvalidInputError):
        custom_system(np.eye(2), np.eye(3), 1.0, [0.0, 0.0])
