"""Pure-Python fused simulate-and-classify loop.

Reference implementation of the compiled kernel in ``_ckernel.pyx``. Both
evaluate every floating-point expression in the same order with plain
double arithmetic, so for the built-in nonlinearities they return
bitwise-identical results. Keep the two files in step.
"""
from __future__ import annotations

import math

import numpy as np

from .classifier import window_hash

OVERFLOW = 1e12

NL_NONE = 0
NL_DUFFING = 1
NL_TURNING1 = 2
NL_TURNING2 = 3
NL_PENDULUM = 4
NL_PYTHON = 5

MATCH_ATTRACTOR = 7


def _nonlinearity(code, prm, func, y, yd, dim):
    if code == NL_NONE:
        return [0.0] * dim
    if code == NL_DUFFING:
        x = y[0]
        return [0.0, -prm[0] * (x * x * x)]
    if code == NL_TURNING1:
        d = yd[0] - y[0]
        return [0.0, prm[0] * (prm[1] * (d * d) + prm[2] * (d * d * d))]
    if code == NL_TURNING2:
        d = yd[0] - y[0]
        s = y[0] - y[1]
        s3 = prm[3] * (s * s * s)
        return [0.0, 0.0, prm[0] * (prm[1] * (d * d) + prm[2] * (d * d * d)) - s3, s3 / prm[4]]
    if code == NL_PENDULUM:
        return [0.0, 0.0, math.sin(y[0]) - y[0], 0.0]
    g = np.asarray(func(np.array(y), np.array(yd)), dtype=np.float64)
    return [float(v) for v in g]


def run_trajectory(
    P, QB, Q, nl_code, nl_params, nl_func, history,
    lower, upper, n_disc, G, origin,
    desired, known, reuse_index,
    h, conv_time, ghost_time, t_max,
    stride, window, k_rep, m_match, reuse, radius, max_steps,
):
    """Integrate from `history` until a classification rule fires.

    Returns
    -------
    tuple
        ``(code, cell, matched_id, n_steps, final_state, closest_state,
        closest_d2, run_cells, run_counts, run_d2, run_states)``. `code` is an ``Outcome``
        value, except that a match through a known attractor's
        neighborhood is reported as :data:`MATCH_ATTRACTOR`. ``closest_*`` refer to the
        sample after ``t = 0`` nearest to `origin` in the metric `G`;
        ``closest_state`` is None if no step was taken. ``run_d2[j]`` and
        ``run_states[j]`` give the nearest sample attributed to run `j`:
        those after the previous storage up to and including the run's
        last one (samples after the final storage go to the last run).
        Runs without a measured sample hold ``inf`` and NaNs.
    """
    dim = P.shape[0]
    Pl, QBl, Ql, Gl = P.tolist(), QB.tolist(), Q.tolist(), G.tolist()
    lo, up, org = lower.tolist(), upper.tolist(), origin.tolist()
    prm = nl_params.tolist()
    nbuf = history.shape[0]
    buf = history.tolist()
    head = nbuf - 1
    n = n_disc

    prev_cell = -1
    n_desired = n_known = n_same = 0
    in_desired = False
    known_id = -1
    run_cells, run_counts = [], []
    run_d2, run_states = [], []
    seg_d2 = math.inf
    seg = None
    seen = {}
    best_d2 = math.inf
    best = None
    code, cell, matched = -1, -1, -1
    i = 0
    y = buf[head]
    while True:
        # -- classify sample i ---------------------------------------------
        bad = False
        for k in range(dim):
            if not math.isfinite(y[k]):
                bad = True
                break
        if bad:
            code, cell = 6, -1
            break
        cell = 0
        for k in range(dim):
            x = y[k]
            if not (lo[k] <= x <= up[k]):
                cell = -1
                break
            c = int(math.floor((x - lo[k]) / (up[k] - lo[k]) * n))
            if c >= n:
                c = n - 1
            cell = cell * n + c
        if cell < 0:
            code = 1
            break
        for k in range(dim):
            if abs(y[k]) > OVERFLOW:
                bad = True
                break
        if bad:
            code = 6
            break
        if i > 0:
            d2 = 0.0
            for a in range(dim):
                ea = y[a] - org[a]
                row = Gl[a]
                acc = 0.0
                for b in range(dim):
                    acc += row[b] * (y[b] - org[b])
                d2 += ea * acc
            if d2 < best_d2:
                best_d2 = d2
                best = list(y)
            if d2 < seg_d2:
                seg_d2 = d2
                seg = list(y)
        if cell != prev_cell:
            in_desired = cell in desired
            known_id = known.get(cell, -1)
            n_same = 0
        else:
            n_same += 1
        prev_cell = cell
        if in_desired:
            n_desired += 1
            if (n_desired - 1) * h > conv_time:
                code = 0
                break
        else:
            n_desired = 0
        if known_id >= 0:
            n_known += 1
            if (n_known - 1) * h > conv_time:
                code, matched = 7, known_id
                break
        else:
            n_known = 0
            if not in_desired and n_same * h > ghost_time:
                code = 2
                break
        if i % stride == 0:
            new_run = not (run_cells and run_cells[-1] == cell)
            if new_run:
                run_cells.append(cell)
                run_counts.append(1)
                run_d2.append(seg_d2)
                run_states.append(seg if seg is not None else [math.nan] * dim)
            else:
                run_counts[-1] += 1
                if seg_d2 < run_d2[-1]:
                    run_d2[-1] = seg_d2
                    run_states[-1] = seg
            seg_d2 = math.inf
            seg = None
            if new_run:
                nr = len(run_cells)
                if nr >= window:
                    win = run_cells[nr - window:]
                    wide = False
                    div = 1
                    for _ in range(dim):
                        cmin = cmax = (win[0] // div) % n
                        for c in win:
                            ck = (c // div) % n
                            if ck < cmin:
                                cmin = ck
                            elif ck > cmax:
                                cmax = ck
                        if cmax - cmin > 2 * radius:
                            wide = True
                            break
                        div *= n
                    if wide:
                        hw = window_hash(win)
                        cnt = seen.get(hw, 0) + 1
                        seen[hw] = cnt
                        if cnt >= k_rep:
                            code = 3
                            break
                if reuse and nr >= m_match:
                    rid = reuse_index.get(window_hash(run_cells[nr - m_match:]), -1)
                    if rid >= 0:
                        code, matched = 4, rid
                        break
        if i * h >= t_max or i >= max_steps:
            code = 5
            break
        # -- advance one step ----------------------------------------------
        yd = buf[(head + 1) % nbuf]
        g = _nonlinearity(nl_code, prm, nl_func, y, yd, dim)
        ynew = [0.0] * dim
        for a in range(dim):
            acc = 0.0
            pr, qbr, qr = Pl[a], QBl[a], Ql[a]
            for b in range(dim):
                acc += pr[b] * y[b]
            for b in range(dim):
                acc += qbr[b] * yd[b]
            for b in range(dim):
                acc += qr[b] * g[b]
            ynew[a] = acc
        head = (head + 1) % nbuf
        buf[head] = ynew
        y = ynew
        i += 1

    if run_cells and seg_d2 < run_d2[-1]:
        run_d2[-1] = seg_d2
        run_states[-1] = seg
    return (
        code,
        cell,
        matched,
        i,
        np.array(y, dtype=np.float64),
        None if best is None else np.array(best, dtype=np.float64),
        best_d2,
        np.array(run_cells, dtype=np.int64),
        np.array(run_counts, dtype=np.int64),
        np.array(run_d2, dtype=np.float64),
        np.array(run_states, dtype=np.float64).reshape(len(run_states), dim),
    )
