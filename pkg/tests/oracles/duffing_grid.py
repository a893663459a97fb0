"""Brute-force basin oracle for the delayed Duffing benchmark.

Independent of the package: closed-form one-step matrices, a hand-written
free-vibration history, vectorized iteration of every headpoint on a grid
and classification by the final state only (no cells, no reuse).

Run as a script to regenerate ``duffing_oracle.json``.
"""
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

A_CUBIC, ZETA, TAU, R = 1.0, 0.1, 0.1, 30
LO, UP = -5.0, 5.0
T_MAX = 1000.0
SETTLE = 1e-3
OMEGA = math.sqrt(2.0)  # linearization about x = -1 with the delay dropped
WEIGHTS = (OMEGA**2, 1.0)
EQ = (-1.0, 0.0)


def one_step_matrices(h):
    e = math.exp(-2.0 * ZETA * h)
    f = (1.0 - e) / (2.0 * ZETA)
    P = np.array([[1.0, f], [0.0, e]])
    Q = np.array([[h, (h - f) / (2.0 * ZETA)], [0.0, f]])
    return P, Q


def classify(x0, v0):
    """1 for convergence to (-1, 0), 0 otherwise (out of bounds, other
    equilibrium, or undecided at T_MAX)."""
    h = TAU / (R + 0.5)
    P, Q = one_step_matrices(h)
    n = x0.size
    t = -h * np.arange(R, -1, -1)
    dx, dv = x0 - EQ[0], v0 - EQ[1]
    c, s = np.cos(OMEGA * t), np.sin(OMEGA * t)
    X = EQ[0] + dx[:, None] * c + (dv / OMEGA)[:, None] * s
    V = EQ[1] - (dx * OMEGA)[:, None] * s + dv[:, None] * c
    X[:, -1], V[:, -1] = x0, v0
    out = np.zeros(n, dtype=np.int8)
    active = np.arange(n)
    x, v = X[:, -1].copy(), V[:, -1].copy()
    head = R
    nbuf = R + 1
    steps = int(math.ceil(T_MAX / h))
    for i in range(1, steps + 1):
        xd = X[:, (head + 1) % nbuf]
        f = xd - x**3 * A_CUBIC
        xn = P[0, 0] * x + P[0, 1] * v + Q[0, 1] * f
        vn = P[1, 1] * v + Q[1, 1] * f
        head = (head + 1) % nbuf
        X[:, head], V[:, head] = xn, vn
        x, v = xn, vn
        if i % 50 == 0 or i == steps:
            oob = ~((x >= LO) & (x <= UP) & (v >= LO) & (v <= UP))
            good = np.hypot(x - EQ[0], v - EQ[1]) < SETTLE
            other = np.hypot(x + EQ[0], v - EQ[1]) < SETTLE
            done = oob | good | other
            out[active[good & ~oob]] = 1
            if done.any():
                keep = ~done
                active, X, V, x, v = active[keep], X[keep], V[keep], x[keep], v[keep]
            if active.size == 0:
                break
    return out


def metric_distance(x, v):
    return np.sqrt(WEIGHTS[0] * (x - EQ[0]) ** 2 + WEIGHTS[1] * (v - EQ[1]) ** 2)


def grid_lim(xs, vs):
    Xg, Vg = np.meshgrid(xs, vs, indexing="ij")
    conv = classify(Xg.ravel(), Vg.ravel())
    d = metric_distance(Xg.ravel(), Vg.ravel())
    bad = conv == 0
    return float(d[bad].min()) if bad.any() else math.inf, Xg.ravel()[bad], Vg.ravel()[bad]


def main(n_coarse=201, n_fine=401):
    t0 = time.time()
    g = np.linspace(LO, UP, n_coarse)
    coarse, _, _ = grid_lim(g, g)
    # refine in the box bounding the ellipse of radius 1.25 * coarse
    rad = 1.25 * coarse
    hx, hv = rad / math.sqrt(WEIGHTS[0]), rad / math.sqrt(WEIGHTS[1])
    xs = np.linspace(max(LO, EQ[0] - hx), min(UP, EQ[0] + hx), n_fine)
    vs = np.linspace(max(LO, EQ[1] - hv), min(UP, EQ[1] + hv), n_fine)
    fine, bx, bv = grid_lim(xs, vs)
    k = int(np.argmin(metric_distance(bx, bv)))
    res = {
        "coarse_grid": n_coarse,
        "coarse_lim": coarse,
        "fine_grid": n_fine,
        "fine_box": [float(xs[0]), float(xs[-1]), float(vs[0]), float(vs[-1])],
        "fine_spacing": [float(xs[1] - xs[0]), float(vs[1] - vs[0])],
        "lim": min(coarse, fine),
        "argmin": [float(bx[k]), float(bv[k])],
        "seconds": time.time() - t0,
    }
    return res


if __name__ == "__main__":
    res = main(*[int(a) for a in sys.argv[1:]])
    print(json.dumps(res, indent=2))
    (Path(__file__).with_name("duffing_oracle.json")).write_text(json.dumps(res, indent=2) + "\n")
