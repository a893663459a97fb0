"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``DELAYLIM_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernel

BACKEND = "python"
run_trajectory = _pykernel.run_trajectory

if os.environ.get("DELAYLIM_PURE_PYTHON", "").strip() not in ("1", "true", "yes"):
    try:
        from . import _ckernel
    except ImportError:  # extension not built
        _ckernel = None
    else:
        BACKEND = "native"
        run_trajectory = _ckernel.run_trajectory

__all__ = ["BACKEND", "run_trajectory"]
