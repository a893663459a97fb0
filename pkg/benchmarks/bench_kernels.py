"""Compare the compiled trajectory kernel with the pure-Python fallback.

Runs the same trajectories through both backends, checks that they return
identical results and prints steps per second and the speedup.

    python3 benchmarks/bench_kernels.py [--repeat N] [--steps N]
"""
import argparse
import time

import numpy as np

from delaylim import _pykernel, build_map
from delaylim.classifier import AttractorRegistry, CellGrid, ClassifierParams, storage_stride
from delaylim.initfn import build_initial_history
from delaylim.metric import metric_space_for
from delaylim.systems import (
    DuffingParams,
    PendulumParams,
    Turning1Params,
    Turning2Params,
    duffing,
    pendulum_nltva,
    turning_1dof,
    turning_2dof,
)

try:
    from delaylim import _ckernel
except ImportError:
    _ckernel = None

# name, system, weights, lower, upper, n_disc, initial headpoint
CASES = [
    ("duffing", duffing(DuffingParams()), None, [-5, -5], [5, 5], 501, [-1.6, 0.1]),
    ("turning1", turning_1dof(Turning1Params(p=0.1)), None, [-2, -2], [2, 2], 201, [0.3, 0.0]),
    ("turning2", turning_2dof(Turning2Params(p=0.2, alpha3=1.0)), None,
     [-2, -4, -2, -4], [2, 4, 2, 4], 101, [0.2, 0.1, 0.0, 0.1]),
    ("pendulum", pendulum_nltva(PendulumParams(p=1.4)), [1, 1, 1, 1],
     [-250, -250, -100, -250], [250, 250, 100, 250], 301, [5.0, 1.0, -2.0, 0.0]),
]


def kernel_args(system, weights, lower, upper, n_disc, ich, steps, r=30):
    m = build_map(system, r)
    t_max = steps * m.h
    params = ClassifierParams(t_max=t_max, ghost_factor=1e9, dwell_factor=1e9, reuse=False)
    grid = CellGrid(lower, upper, n_disc)
    metric = metric_space_for(system, weights)
    reg = AttractorRegistry(grid, system.equilibrium, params)
    hist = build_initial_history("freevib", ich, system, m, nonmodal="expm")
    # dwell and ghost times are pushed out so every run goes to t_max
    return (
        m.P, m.QB, m.Q, system.nl_code, system.nl_params, system.nonlinearity, hist.samples,
        grid.lower, grid.upper, grid.n_disc, metric.matrix, metric.origin,
        reg.desired_region, reg.known, reg.reuse_index,
        m.h, system.tau * params.dwell_factor, system.tau * params.ghost_factor, t_max,
        storage_stride(r, params.n_tau), params.n_tau, 10**9, params.match_length,
        False, params.neighborhood, steps,
    )


def best_time(fn, args, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def same(a, b):
    for x, y in zip(a, b):
        if isinstance(x, np.ndarray):
            if x.tobytes() != y.tobytes():
                return False
        elif x != y and not (x is None and y is None):
            if not (isinstance(x, float) and x != x and y != y):
                return False
    return True


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="timed repetitions, best is kept")
    ap.add_argument("--steps", type=int, default=30000, help="time steps per trajectory")
    args = ap.parse_args(argv)
    if _ckernel is None:
        raise SystemExit("native kernel not built; run `python3 setup.py build_ext --inplace`")

    print(f"{'system':<10} {'steps':>8} {'python s':>10} {'native s':>10} {'Msteps/s':>9} {'speedup':>8} same")
    for name, system, weights, lower, upper, n_disc, ich in CASES:
        kargs = kernel_args(system, weights, lower, upper, n_disc, ich, args.steps)
        t_py, out_py = best_time(_pykernel.run_trajectory, kargs, args.repeat)
        t_nat, out_nat = best_time(_ckernel.run_trajectory, kargs, args.repeat)
        steps = out_nat[3]
        print(f"{name:<10} {steps:>8d} {t_py:>10.4f} {t_nat:>10.4f} {steps / t_nat / 1e6:>9.2f} "
              f"{t_py / t_nat:>7.1f}x {'yes' if same(out_py, out_nat) else 'NO'}")


if __name__ == "__main__":
    main()
