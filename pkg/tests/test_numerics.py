import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from delaylim.errors import DimensionError, InvalidInputError, NoVibrationModesError
from delaylim.numerics import exp_integral, matrix_exponential, undamped_modes


def test_expm_of_zero_is_identity():
    np.testing.assert_array_equal(matrix_exponential(np.zeros((2, 2)), 1.0), np.eye(2))


def test_expm_nilpotent():
    E = matrix_exponential([[0.0, 1.0], [0.0, 0.0]], 0.5)
    np.testing.assert_allclose(E, [[1.0, 0.5], [0.0, 1.0]], atol=1e-15)


def test_expm_diagonal():
    E = matrix_exponential(np.diag([-2.0, 3.0]), 0.1)
    np.testing.assert_allclose(E, np.diag([math.exp(-0.2), math.exp(0.3)]), rtol=1e-14)


def test_expm_against_taylor_series_in_high_precision():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    A = np.array([[0.0, 1.0], [-2.0, -0.3]])
    ref = mpmath.expm(mpmath.matrix(A.tolist()) * mpmath.mpf("0.7"))
    ref = np.array([[float(ref[i, j]) for j in range(2)] for i in range(2)])
    np.testing.assert_allclose(matrix_exponential(A, 0.7), ref, rtol=1e-13, atol=1e-15)


def test_exp_integral_of_zero():
    np.testing.assert_allclose(exp_integral(np.zeros((3, 3)), 0.2), 0.2 * np.eye(3), atol=1e-16)


def test_exp_integral_scalar():
    np.testing.assert_allclose(exp_integral([[1.0]], 1.0), [[math.e - 1.0]], rtol=1e-14)


def test_exp_integral_nilpotent():
    np.testing.assert_allclose(exp_integral([[0.0, 1.0], [0.0, 0.0]], 1.0), [[1.0, 0.5], [0.0, 1.0]], atol=1e-15)


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros(3)])
def test_non_square_rejected(bad):
    with pytest.raises(DimensionError):
        matrix_exponential(bad, 1.0)
    with pytest.raises(DimensionError):
        exp_integral(bad, 1.0)


def test_non_finite_rejected():
    with pytest.raises(InvalidInputError):
        matrix_exponential([[np.nan]], 1.0)
    with pytest.raises(InvalidInputError):
        exp_integral([[np.inf]], 1.0)


def _bounded(n):
    return arrays(np.float64, (n, n), elements=st.floats(-5.0 / n, 5.0 / n, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(_bounded), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_semigroup_property(A, h1, h2):
    lhs = matrix_exponential(A, h1) @ matrix_exponential(A, h2)
    rhs = matrix_exponential(A, h1 + h2)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(_bounded), st.floats(0.01, 1.0), st.booleans())
def test_exp_integral_identity(A, h, singular):
    if singular:
        A = A.copy()
        A[:, 0] = 0.0
    lhs = A @ exp_integral(A, h) + np.eye(A.shape[0])
    np.testing.assert_allclose(lhs, matrix_exponential(A, h), rtol=1e-9, atol=1e-9)


def test_modes_diagonal():
    m = undamped_modes(np.eye(2), np.diag([4.0, 9.0]))
    np.testing.assert_allclose(m.frequencies, [2.0, 3.0])
    np.testing.assert_allclose(np.abs(m.shapes), np.eye(2), atol=1e-15)


def test_modes_scalar():
    m = undamped_modes([[2.0]], [[8.0]])
    np.testing.assert_allclose(m.frequencies, [2.0])


def test_modes_chain_against_characteristic_polynomial():
    m = undamped_modes(np.eye(2), [[2.0, -1.0], [-1.0, 1.0]])
    # lambda^2 - 3 lambda + 1 = 0
    lam = np.array([(3.0 - math.sqrt(5.0)) / 2.0, (3.0 + math.sqrt(5.0)) / 2.0])
    np.testing.assert_allclose(m.frequencies, np.sqrt(lam), rtol=1e-13)


def test_modes_reject_unstable_stiffness():
    with pytest.raises(NoVibrationModesError):
        undamped_modes(np.eye(2), np.diag([1.0, -1.0]))


@settings(max_examples=60, deadline=None)
@given(
    arrays(np.float64, (3, 3), elements=st.floats(-1.0, 1.0, allow_nan=False)),
    arrays(np.float64, (3, 3), elements=st.floats(-1.0, 1.0, allow_nan=False)),
)
def test_modes_round_trip(a, b):
    M = a @ a.T + np.eye(3)
    K = b @ b.T + 0.5 * np.eye(3)
    m = undamped_modes(M, K)
    lhs = m.shapes @ np.diag(m.frequencies**2) @ m.inverse_shapes
    np.testing.assert_allclose(lhs, np.linalg.solve(M, K), rtol=1e-8, atol=1e-8)
    y = np.arange(6.0)
    np.testing.assert_allclose(m.to_physical(m.to_modal(y)), y, atol=1e-10)
