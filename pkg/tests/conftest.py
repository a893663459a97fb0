import math

import numpy as np
import pytest

from delaylim import _backend, _pykernel

try:
    from delaylim import _ckernel
except ImportError:  # compiled extension not built
    _ckernel = None


# criterion number -> PASS/FAIL line, filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])


@pytest.fixture(params=["python", "native"])
def kernel(request, monkeypatch):
    """Run a test once per backend by swapping the kernel entry point."""
    if request.param == "native":
        if _ckernel is None:
            pytest.skip("native kernel not built")
        monkeypatch.setattr(_backend, "run_trajectory", _ckernel.run_trajectory)
    else:
        monkeypatch.setattr(_backend, "run_trajectory", _pykernel.run_trajectory)
    return request.param


def method_of_steps_scalar(t_end, tau=1.0, history=1.0):
    """Exact solution of y' = -y(t - tau) with constant history, by steps.

    On [k tau, (k+1) tau] the solution is a polynomial of degree k + 1; the
    coefficients are integrated exactly with numpy polynomials.
    """
    from numpy.polynomial import Polynomial

    pieces = [Polynomial([history])]  # on [-tau, 0], in local time s = t - k tau
    y0 = history
    k = 0
    while k * tau < t_end:
        prev = pieces[-1]
        # y'(k tau + s) = -prev(s) for s in [0, tau]
        integ = -prev.integ()
        piece = integ - integ(0.0) + y0
        if (k + 1) * tau >= t_end:
            return float(piece(t_end - k * tau))
        y0 = float(piece(tau))
        pieces.append(piece)
        k += 1
    return float(pieces[-1](t_end - (k - 1) * tau))
