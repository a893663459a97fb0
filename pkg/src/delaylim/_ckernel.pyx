# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# distutils: language = c++
"""Compiled fused simulate-and-classify loop.

Mirror of ``_pykernel.run_trajectory``; every floating-point expression is
evaluated in the same order so both backends agree bit for bit.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, fabs, sin, isfinite, INFINITY, NAN
from libc.stdint cimport uint64_t, int64_t
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map

cnp.import_array()

cdef enum:
    MAXDIM = 64

cdef double OVERFLOW = 1e12
cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t hash_tail(vector[int64_t]& cells, Py_ssize_t length) noexcept nogil:
    cdef uint64_t h = <uint64_t>length
    cdef Py_ssize_t k, start = cells.size() - length
    for k in range(start, <Py_ssize_t>cells.size()):
        h = mix64(h + GOLDEN + <uint64_t>cells[k])
    return h


def window_hash_native(cells):
    """Hash of a cell window; equals ``classifier.window_hash``."""
    cdef vector[int64_t] v
    for c in cells:
        v.push_back(<int64_t>c)
    return hash_tail(v, v.size())


cdef void nonlinearity(int code, const double[::1] prm, object func, double* y, double* yd,
                       int dim, double* g) except *:
    cdef double x, d, s, s3
    cdef int k
    if code == 0:
        for k in range(dim):
            g[k] = 0.0
    elif code == 1:
        x = y[0]
        g[0] = 0.0
        g[1] = -prm[0] * (x * x * x)
    elif code == 2:
        d = yd[0] - y[0]
        g[0] = 0.0
        g[1] = prm[0] * (prm[1] * (d * d) + prm[2] * (d * d * d))
    elif code == 3:
        d = yd[0] - y[0]
        s = y[0] - y[1]
        s3 = prm[3] * (s * s * s)
        g[0] = 0.0
        g[1] = 0.0
        g[2] = prm[0] * (prm[1] * (d * d) + prm[2] * (d * d * d)) - s3
        g[3] = s3 / prm[4]
    elif code == 4:
        g[0] = 0.0
        g[1] = 0.0
        g[2] = sin(y[0]) - y[0]
        g[3] = 0.0
    else:
        ya = np.empty(dim)
        yda = np.empty(dim)
        for k in range(dim):
            ya[k] = y[k]
            yda[k] = yd[k]
        out = np.asarray(func(ya, yda), dtype=np.float64)
        for k in range(dim):
            g[k] = out[k]


def run_trajectory(
    P, QB, Q, int nl_code, nl_params, nl_func, history,
    lower, upper, long long n_disc, G, origin,
    desired, dict known, dict reuse_index,
    double h, double conv_time, double ghost_time, double t_max,
    long long stride, long long window, int k_rep, long long m_match,
    bint reuse, long long radius, long long max_steps,
):
    cdef const double[:, ::1] Pm = np.ascontiguousarray(P, dtype=np.float64)
    cdef const double[:, ::1] QBm = np.ascontiguousarray(QB, dtype=np.float64)
    cdef const double[:, ::1] Qm = np.ascontiguousarray(Q, dtype=np.float64)
    cdef const double[:, ::1] Gm = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[::1] lo = np.ascontiguousarray(lower, dtype=np.float64)
    cdef const double[::1] up = np.ascontiguousarray(upper, dtype=np.float64)
    cdef const double[::1] org = np.ascontiguousarray(origin, dtype=np.float64)
    cdef const double[::1] prm = np.ascontiguousarray(nl_params, dtype=np.float64)
    cdef int dim = Pm.shape[0]
    if dim > MAXDIM:
        raise ValueError("state dimension too large for the native kernel")
    cdef double[:, ::1] buf = np.array(history, dtype=np.float64, order="C")
    cdef Py_ssize_t nbuf = buf.shape[0]
    cdef Py_ssize_t head = nbuf - 1
    cdef long long n = n_disc

    cdef double y[MAXDIM]
    cdef double yd[MAXDIM]
    cdef double g[MAXDIM]
    cdef double ynew[MAXDIM]
    cdef double best[MAXDIM]
    cdef bint have_best = False
    cdef double best_d2 = INFINITY
    cdef double d2, acc, ea, x
    cdef int a, b, k
    cdef bint bad, in_desired = False, wide
    cdef long long cell = -1, prev_cell = -1, c, ck, cmin, cmax, div
    cdef long long n_desired = 0, n_known = 0, n_same = 0
    cdef long long known_id = -1, matched = -1, rid
    cdef int code = -1
    cdef long long i = 0
    cdef Py_ssize_t nr, j
    cdef vector[int64_t] run_cells
    cdef vector[int64_t] run_counts
    cdef vector[double] run_d2
    cdef vector[double] run_states
    cdef double seg[MAXDIM]
    cdef double seg_d2 = INFINITY
    cdef bint new_run
    cdef Py_ssize_t last
    cdef unordered_map[uint64_t, int] seen
    cdef uint64_t hw

    for k in range(dim):
        y[k] = buf[head, k]

    while True:
        bad = False
        for k in range(dim):
            if not isfinite(y[k]):
                bad = True
                break
        if bad:
            code = 6
            cell = -1
            break
        cell = 0
        for k in range(dim):
            x = y[k]
            if not (lo[k] <= x <= up[k]):
                cell = -1
                break
            c = <long long>floor((x - lo[k]) / (up[k] - lo[k]) * n)
            if c >= n:
                c = n - 1
            cell = cell * n + c
        if cell < 0:
            code = 1
            break
        for k in range(dim):
            if fabs(y[k]) > OVERFLOW:
                bad = True
                break
        if bad:
            code = 6
            break
        if i > 0:
            d2 = 0.0
            for a in range(dim):
                ea = y[a] - org[a]
                acc = 0.0
                for b in range(dim):
                    acc += Gm[a, b] * (y[b] - org[b])
                d2 += ea * acc
            if d2 < best_d2:
                best_d2 = d2
                have_best = True
                for k in range(dim):
                    best[k] = y[k]
            if d2 < seg_d2:
                seg_d2 = d2
                for k in range(dim):
                    seg[k] = y[k]
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
                code = 7
                matched = known_id
                break
        else:
            n_known = 0
            if not in_desired and n_same * h > ghost_time:
                code = 2
                break
        if i % stride == 0:
            new_run = not (run_cells.size() > 0 and run_cells.back() == cell)
            if new_run:
                run_cells.push_back(cell)
                run_counts.push_back(1)
                run_d2.push_back(seg_d2)
                for k in range(dim):
                    run_states.push_back(seg[k] if seg_d2 < INFINITY else NAN)
            else:
                last = run_counts.size() - 1
                run_counts[last] += 1
                if seg_d2 < run_d2[last]:
                    run_d2[last] = seg_d2
                    for k in range(dim):
                        run_states[last * dim + k] = seg[k]
            seg_d2 = INFINITY
            if new_run:
                nr = run_cells.size()
                if nr >= window:
                    wide = False
                    div = 1
                    for k in range(dim):
                        cmin = (run_cells[nr - window] // div) % n
                        cmax = cmin
                        for j in range(nr - window, nr):
                            ck = (run_cells[j] // div) % n
                            if ck < cmin:
                                cmin = ck
                            elif ck > cmax:
                                cmax = ck
                        if cmax - cmin > 2 * radius:
                            wide = True
                            break
                        div *= n
                    if wide:
                        hw = hash_tail(run_cells, window)
                        seen[hw] += 1
                        if seen[hw] >= k_rep:
                            code = 3
                            break
                if reuse and nr >= m_match:
                    rid = reuse_index.get(hash_tail(run_cells, m_match), -1)
                    if rid >= 0:
                        code = 4
                        matched = rid
                        break
        if i * h >= t_max or i >= max_steps:
            code = 5
            break
        j = (head + 1) % nbuf
        for k in range(dim):
            yd[k] = buf[j, k]
        nonlinearity(nl_code, prm, nl_func, y, yd, dim, g)
        for a in range(dim):
            acc = 0.0
            for b in range(dim):
                acc += Pm[a, b] * y[b]
            for b in range(dim):
                acc += QBm[a, b] * yd[b]
            for b in range(dim):
                acc += Qm[a, b] * g[b]
            ynew[a] = acc
        head = j
        for k in range(dim):
            buf[head, k] = ynew[k]
            y[k] = ynew[k]
        i += 1

    if run_cells.size() > 0 and seg_d2 < run_d2.back():
        last = run_d2.size() - 1
        run_d2[last] = seg_d2
        for k in range(dim):
            run_states[last * dim + k] = seg[k]
    final = np.empty(dim)
    for k in range(dim):
        final[k] = y[k]
    closest = None
    if have_best:
        closest = np.empty(dim)
        for k in range(dim):
            closest[k] = best[k]
    cells_arr = np.empty(run_cells.size(), dtype=np.int64)
    counts_arr = np.empty(run_counts.size(), dtype=np.int64)
    d2_arr = np.empty(run_cells.size(), dtype=np.float64)
    states_arr = np.empty((run_cells.size(), dim), dtype=np.float64)
    for j in range(<Py_ssize_t>run_cells.size()):
        cells_arr[j] = run_cells[j]
        counts_arr[j] = run_counts[j]
        d2_arr[j] = run_d2[j]
        for k in range(dim):
            states_arr[j, k] = run_states[j * dim + k]
    return (code, cell, matched, i, final, closest, best_d2, cells_arr, counts_arr, d2_arr, states_arr)
