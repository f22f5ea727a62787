# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: decision-tree growth and hinge-loss SGD.

Mirrors ``_pyfallback`` operation for operation.  The SplitMix64 recurrence,
draw order, split scoring, and update arithmetic are all pinned there; this
file only restates them in C types.  Trees must come out bit-identical to
the fallback; SGD may drift in the last ulps because the fallback's dot
product sums pairwise while this one sums left to right.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

NAME = "compiled"

ctypedef unsigned long long u64

cdef u64 _GAMMA = 0x9E3779B97F4A7C15ULL


cdef inline u64 _mix64(u64 z) noexcept:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 _next_u64(u64* state) noexcept:
    state[0] = state[0] + _GAMMA
    return _mix64(state[0])


cdef inline u64 _next_below(u64* state, u64 bound) noexcept:
    return _next_u64(state) % bound


cdef void _heapsort(double* v, int* c, Py_ssize_t n) noexcept:
    # Ascending heapsort on v with c carried along.  Tie order differs from
    # the fallback's stable argsort, which is fine: split statistics only
    # look at class counts between runs of equal values.
    cdef Py_ssize_t start, end, root, child
    cdef double tv
    cdef int tc
    if n < 2:
        return
    start = (n - 2) // 2
    while True:
        root = start
        while 2 * root + 1 < n:
            child = 2 * root + 1
            if child + 1 < n and v[child] < v[child + 1]:
                child += 1
            if v[root] < v[child]:
                tv = v[root]; v[root] = v[child]; v[child] = tv
                tc = c[root]; c[root] = c[child]; c[child] = tc
                root = child
            else:
                break
        if start == 0:
            break
        start -= 1
    end = n - 1
    while end > 0:
        tv = v[0]; v[0] = v[end]; v[end] = tv
        tc = c[0]; c[0] = c[end]; c[end] = tc
        root = 0
        while 2 * root + 1 < end:
            child = 2 * root + 1
            if child + 1 < end and v[child] < v[child + 1]:
                child += 1
            if v[root] < v[child]:
                tv = v[root]; v[root] = v[child]; v[child] = tv
                tc = c[root]; c[root] = c[child]; c[child] = tc
                root = child
            else:
                break
        end -= 1


def build_tree(
    double[:] data,
    int[:] indices,
    int[:] indptr,
    Py_ssize_t n_rows,
    Py_ssize_t n_cols,
    int[:] y,
    Py_ssize_t n_classes,
    object seed,
    Py_ssize_t max_features,
    bint bootstrap,
):
    """Grow one classification tree on a CSC matrix; returns flat node arrays."""
    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Py_ssize_t cap = 2 * n_rows + 1

    samples_arr = np.empty(n_rows, dtype=np.int64)
    feature_arr = np.full(cap, -1, dtype=np.int32)
    threshold_arr = np.zeros(cap, dtype=np.float64)
    left_arr = np.full(cap, -1, dtype=np.int32)
    right_arr = np.full(cap, -1, dtype=np.int32)
    counts_arr = np.zeros((cap, n_classes), dtype=np.int64)

    col_val_arr = np.zeros(n_rows, dtype=np.float64)
    vals_arr = np.empty(n_rows, dtype=np.float64)
    sort_val_arr = np.empty(n_rows, dtype=np.float64)
    sort_cls_arr = np.empty(n_rows, dtype=np.int32)
    part_arr = np.empty(n_rows, dtype=np.int64)
    pool_arr = np.empty(n_cols, dtype=np.int64)
    tot_arr = np.zeros(n_classes, dtype=np.int64)
    cl_arr = np.zeros(n_classes, dtype=np.int64)
    stack_nid_arr = np.empty(cap + 1, dtype=np.int64)
    stack_lo_arr = np.empty(cap + 1, dtype=np.int64)
    stack_hi_arr = np.empty(cap + 1, dtype=np.int64)

    cdef long long[:] samples = samples_arr
    cdef int[:] feature = feature_arr
    cdef double[:] threshold = threshold_arr
    cdef int[:] left = left_arr
    cdef int[:] right = right_arr
    cdef long long[:, :] counts = counts_arr
    cdef double[:] col_val = col_val_arr
    cdef double[:] vals = vals_arr
    cdef double[:] sort_val = sort_val_arr
    cdef int[:] sort_cls = sort_cls_arr
    cdef long long[:] part = part_arr
    cdef long long[:] pool = pool_arr
    cdef long long[:] tot = tot_arr
    cdef long long[:] cl = cl_arr
    cdef long long[:] stack_nid = stack_nid_arr
    cdef long long[:] stack_lo = stack_lo_arr
    cdef long long[:] stack_hi = stack_hi_arr

    cdef Py_ssize_t i, j, k, m, lo, hi, nid, top, n_nodes, k_try, r, f, ci
    cdef Py_ssize_t cs, ce, nb, p, m_left, lid, rid, best_feat
    cdef long long a, bq, diff, maxc
    cdef double best_score, best_thr, s, t, prev
    cdef u64 swap_tmp

    if bootstrap:
        for i in range(n_rows):
            samples[i] = <long long> _next_below(&state, <u64> n_rows)
    else:
        for i in range(n_rows):
            samples[i] = i

    k_try = max_features
    if k_try > n_cols:
        k_try = n_cols

    n_nodes = 1
    top = 0
    stack_nid[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n_rows

    while top >= 0:
        nid = stack_nid[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        top -= 1
        m = hi - lo

        for k in range(n_classes):
            tot[k] = 0
        for j in range(m):
            tot[y[samples[lo + j]]] += 1
        maxc = 0
        for k in range(n_classes):
            counts[nid, k] = tot[k]
            if tot[k] > maxc:
                maxc = tot[k]

        if m < 2 or maxc == m:
            continue

        if k_try >= n_cols:
            for j in range(n_cols):
                pool[j] = j
        else:
            for j in range(n_cols):
                pool[j] = j
            for j in range(k_try):
                r = j + <Py_ssize_t> _next_below(&state, <u64> (n_cols - j))
                swap_tmp = pool[j]
                pool[j] = pool[r]
                pool[r] = <long long> swap_tmp

        best_score = -INFINITY
        best_feat = -1
        best_thr = 0.0

        for ci in range(k_try):
            f = <Py_ssize_t> pool[ci]
            cs = indptr[f]
            ce = indptr[f + 1]
            for j in range(cs, ce):
                col_val[indices[j]] = data[j]
            for j in range(m):
                sort_val[j] = col_val[samples[lo + j]]
                sort_cls[j] = y[samples[lo + j]]
            for j in range(cs, ce):
                col_val[indices[j]] = 0.0

            _heapsort(&sort_val[0], &sort_cls[0], m)

            nb = 0
            for j in range(1, m):
                if sort_val[j] != sort_val[j - 1]:
                    nb += 1
            if nb == 0:
                continue

            for k in range(n_classes):
                cl[k] = 0
            for j in range(1, m):
                cl[sort_cls[j - 1]] += 1
                if sort_val[j] != sort_val[j - 1]:
                    a = 0
                    bq = 0
                    for k in range(n_classes):
                        a += cl[k] * cl[k]
                        diff = tot[k] - cl[k]
                        bq += diff * diff
                    s = (<double> a) / (<double> j) + (<double> bq) / (<double> (m - j))
                    if s > best_score:
                        best_score = s
                        best_feat = f
                        t = (sort_val[j - 1] + sort_val[j]) / 2.0
                        if t == sort_val[j]:
                            t = sort_val[j - 1]
                        best_thr = t

        if best_feat < 0:
            continue

        cs = indptr[best_feat]
        ce = indptr[best_feat + 1]
        for j in range(cs, ce):
            col_val[indices[j]] = data[j]
        for j in range(m):
            vals[j] = col_val[samples[lo + j]]
        for j in range(cs, ce):
            col_val[indices[j]] = 0.0

        m_left = 0
        for j in range(m):
            if vals[j] <= best_thr:
                part[m_left] = samples[lo + j]
                m_left += 1
        p = m_left
        for j in range(m):
            if vals[j] > best_thr:
                part[p] = samples[lo + j]
                p += 1
        for j in range(m):
            samples[lo + j] = part[j]

        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feature[nid] = <int> best_feat
        threshold[nid] = best_thr
        left[nid] = <int> lid
        right[nid] = <int> rid
        top += 1
        stack_nid[top] = rid
        stack_lo[top] = lo + m_left
        stack_hi[top] = hi
        top += 1
        stack_nid[top] = lid
        stack_lo[top] = lo
        stack_hi[top] = lo + m_left

    return (
        feature_arr[:n_nodes].copy(),
        threshold_arr[:n_nodes].copy(),
        left_arr[:n_nodes].copy(),
        right_arr[:n_nodes].copy(),
        counts_arr[:n_nodes].copy(),
    )


def sgd_hinge(
    double[:] data,
    int[:] indices,
    int[:] indptr,
    Py_ssize_t n_rows,
    Py_ssize_t n_cols,
    double[:] y_pm,
    double lam,
    double t0,
    Py_ssize_t epochs,
    object seed,
):
    """L2-regularized hinge-loss SGD over CSR rows; returns ``(w, b)``."""
    cdef u64 state = <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF)

    v_arr = np.zeros(n_cols, dtype=np.float64)
    order_arr = np.arange(n_rows, dtype=np.int64)
    cdef double[:] v = v_arr
    cdef long long[:] order = order_arr

    cdef double b = 0.0
    cdef double scale = 1.0
    cdef double eta, margin, factor, dot, yi
    cdef Py_ssize_t t = 0
    cdef Py_ssize_t e, i, j, k, lo, hi, row
    cdef long long tmp

    for e in range(epochs):
        for i in range(n_rows - 1, 0, -1):
            j = <Py_ssize_t> _next_below(&state, <u64> (i + 1))
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        for k in range(n_rows):
            row = <Py_ssize_t> order[k]
            lo = indptr[row]
            hi = indptr[row + 1]
            yi = y_pm[row]
            eta = 1.0 / (lam * (t0 + <double> t))
            dot = 0.0
            for j in range(lo, hi):
                dot += v[indices[j]] * data[j]
            margin = yi * (scale * dot + b)
            factor = 1.0 - eta * lam
            if factor < 1e-16:
                factor = 1e-16
            scale *= factor
            if margin < 1.0:
                for j in range(lo, hi):
                    v[indices[j]] += (eta * yi / scale) * data[j]
                b += eta * yi
            t += 1
            if scale < 1e-9:
                for j in range(n_cols):
                    v[j] *= scale
                scale = 1.0

    for j in range(n_cols):
        v[j] *= scale
    return v_arr, b
