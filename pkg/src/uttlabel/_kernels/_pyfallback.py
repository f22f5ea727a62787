"""Pure-Python/numpy kernels: decision-tree growth and hinge-loss SGD.

This module is the behavioural reference for the compiled extension in
``_core.pyx``.  Both draw random numbers from the same SplitMix64 stream and
evaluate candidate splits with the same exactly-rounded float operations, so
trees come out bit-identical across backends.  SGD weight vectors may differ
in the last few ulps (numpy's dot product sums pairwise, the C loop sums
left-to-right); everything else about the update sequence is pinned.

Split-selection contract (shared with the compiled kernel):

* one SplitMix64 stream per tree; bootstrap draws first (when enabled), then
  per-node feature draws, nodes visited in preorder (left subtree first);
* a node attempts a split iff it has >= 2 samples and is impure; attempting
  consumes the feature draws even when no usable split exists;
* candidate features come from a fresh partial Fisher-Yates over all columns
  (no draws consumed when every column is a candidate);
* split quality is ranked by A/m_L + B/m_R where A and B are exact integer
  sums of squared left/right class counts — maximizing this minimizes
  weighted Gini impurity — evaluated only between distinct adjacent sorted
  values; first strict improvement wins, candidates in draw order;
* threshold is the midpoint of the straddled values (clamped to the lower
  value if rounding lands on the upper), partition is ``value <= threshold``.
"""

from __future__ import annotations

import numpy as np

from uttlabel.seeding import SplitMix64

NAME = "python"


def _shuffle(values: np.ndarray, rng: SplitMix64) -> None:
    # Fisher-Yates, identical draw sequence to SplitMix64.shuffle.
    for i in range(len(values) - 1, 0, -1):
        j = rng.next_below(i + 1)
        values[i], values[j] = values[j], values[i]


def _draw_features(n_cols: int, k: int, rng: SplitMix64) -> np.ndarray:
    if k >= n_cols:
        return np.arange(n_cols, dtype=np.int64)
    pool = np.arange(n_cols, dtype=np.int64)
    for j in range(k):
        r = j + rng.next_below(n_cols - j)
        pool[j], pool[r] = pool[r], pool[j]
    return pool[:k]


def build_tree(
    data: np.ndarray,
    indices: np.ndarray,
    indptr: np.ndarray,
    n_rows: int,
    n_cols: int,
    y: np.ndarray,
    n_classes: int,
    seed: int,
    max_features: int,
    bootstrap: bool,
):
    """Grow one classification tree on a CSC matrix; returns flat node arrays.

    Returns ``(feature, threshold, left, right, counts)`` where ``feature``
    is -1 at leaves and ``counts`` holds per-node class histograms.
    """
    rng = SplitMix64(seed)
    if bootstrap:
        samples = np.empty(n_rows, dtype=np.int64)
        for i in range(n_rows):
            samples[i] = rng.next_below(n_rows)
    else:
        samples = np.arange(n_rows, dtype=np.int64)

    cap = 2 * n_rows + 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    counts = np.zeros((cap, n_classes), dtype=np.int64)

    col_buf = np.zeros(n_rows, dtype=np.float64)
    n_nodes = 1
    stack = [(0, 0, len(samples))]

    while stack:
        nid, lo, hi = stack.pop()
        rows = samples[lo:hi]
        m = hi - lo
        node_counts = np.bincount(y[rows], minlength=n_classes).astype(np.int64)
        counts[nid] = node_counts

        if m < 2 or node_counts.max() == m:
            continue

        cand = _draw_features(n_cols, max_features, rng)
        best_score = -np.inf
        best_feat = -1
        best_thr = 0.0

        for f in cand:
            cs, ce = indptr[f], indptr[f + 1]
            col_rows = indices[cs:ce]
            col_buf[col_rows] = data[cs:ce]
            vals = col_buf[rows]
            col_buf[col_rows] = 0.0

            order = np.argsort(vals, kind="stable")
            sv = vals[order]
            boundaries = np.nonzero(sv[1:] != sv[:-1])[0] + 1
            if boundaries.size == 0:
                continue

            onehot = (y[rows][order][:, None] == np.arange(n_classes)).astype(np.int64)
            cum = np.cumsum(onehot, axis=0)
            c_left = cum[boundaries - 1]
            m_left = boundaries.astype(np.int64)
            m_right = m - m_left
            a = np.sum(c_left * c_left, axis=1)
            b = np.sum((node_counts - c_left) ** 2, axis=1)
            score = a / m_left + b / m_right

            pick = int(np.argmax(score))
            if score[pick] > best_score:
                best_score = float(score[pick])
                best_feat = int(f)
                p = int(boundaries[pick])
                t = (sv[p - 1] + sv[p]) / 2.0
                if t == sv[p]:
                    t = sv[p - 1]
                best_thr = float(t)

        if best_feat < 0:
            continue

        cs, ce = indptr[best_feat], indptr[best_feat + 1]
        col_rows = indices[cs:ce]
        col_buf[col_rows] = data[cs:ce]
        vals = col_buf[rows]
        col_buf[col_rows] = 0.0
        mask = vals <= best_thr
        m_left = int(mask.sum())
        samples[lo:hi] = np.concatenate([rows[mask], rows[~mask]])

        lid, rid = n_nodes, n_nodes + 1
        n_nodes += 2
        feature[nid] = best_feat
        threshold[nid] = best_thr
        left[nid] = lid
        right[nid] = rid
        stack.append((rid, lo + m_left, hi))
        stack.append((lid, lo, lo + m_left))

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        counts[:n_nodes].copy(),
    )


def sgd_hinge(
    data: np.ndarray,
    indices: np.ndarray,
    indptr: np.ndarray,
    n_rows: int,
    n_cols: int,
    y_pm: np.ndarray,
    lam: float,
    t0: float,
    epochs: int,
    seed: int,
):
    """L2-regularized hinge-loss SGD over CSR rows with eta_t = 1/(lam*(t0+t)).

    The weight vector is kept as ``scale * v`` so the per-step L2 shrink is
    O(1); the bias is unregularized.  Sample order reshuffles every epoch
    from one SplitMix64 stream.  Returns ``(w, b)``.
    """
    v = np.zeros(n_cols, dtype=np.float64)
    b = 0.0
    scale = 1.0
    t = 0
    order = np.arange(n_rows, dtype=np.int64)
    rng = SplitMix64(seed)

    for _ in range(epochs):
        _shuffle(order, rng)
        for i in order:
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            xd = data[lo:hi]
            eta = 1.0 / (lam * (t0 + t))
            margin = y_pm[i] * (scale * float(np.dot(v[idx], xd)) + b)
            factor = 1.0 - eta * lam
            if factor < 1e-16:
                factor = 1e-16
            scale *= factor
            if margin < 1.0:
                v[idx] += (eta * y_pm[i] / scale) * xd
                b += eta * y_pm[i]
            t += 1
            if scale < 1e-9:
                v *= scale
                scale = 1.0

    return v * scale, b
