"""Pure-numpy kernel implementations.

Fallback backend: same contract as ``numba_impl`` but vectorized over
batch axes instead of JIT-compiled loops. Selected with
``GRADEDMIN_BACKEND=numpy``.

Accumulations over segments, quadrature points, and seminorm indices run
in the same sequential order as the JIT backend so both produce
bit-identical results (vectorization is across the batch axis only).

Conventions shared by both backends:
  * ``W`` is the raw (N, D) weight table of the seminorm family,
    ``kind`` 0 = weighted-sup, 1 = weighted-sum.
  * Graded values apply the cumulative max over the seminorm index, so
    p'_n = max(p_1, ..., p_n) even for non-monotone weight tables.
  * ``conf_kind`` 0 is the flat tangent rule, 1 the conformal rule
    c(x) = c0 + c1 * p_1(x)^2 applied as a factor to p_n(v).
  * Curves are piecewise linear on [0, 1]; ``qx``/``qw`` are quadrature
    nodes/weights on the unit interval (weights sum to 1).
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_INVPHI = 0.6180339887498949


def _raw_rows(W, kind, V):
    """Raw seminorm values, shape (m, N), no grading."""
    A = np.abs(V)[:, None, :] * W[None, :, :]
    if kind == 0:
        return A.max(axis=2)
    return A.sum(axis=2)


def seminorm_table(W, kind, X):
    """Graded seminorm values p'_n(x), shape (m, N)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    return np.maximum.accumulate(_raw_rows(W, kind, X), axis=1)


def seminorm_upto(W, kind, V, n_idx):
    """Graded value at 0-based index ``n_idx`` for each row of V."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    return _raw_rows(W[: n_idx + 1], kind, V).max(axis=1)


def metric_combine(P):
    """Sum over n of 2^-n * p_n / (1 + p_n) for a table of graded values."""
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    out = np.zeros(P.shape[0])
    w = 1.0
    for j in range(P.shape[1]):
        w *= 0.5
        out += w * P[:, j] / (1.0 + P[:, j])
    return out


def graded_metric_batch(W, kind, X, y):
    return metric_combine(seminorm_table(W, kind, np.atleast_2d(X) - np.asarray(y)[None, :]))


def _seg_len_batch(W, kind, n_idx, A, B, qx, qw, conf_kind, c0, c1):
    """Length of the straight segments A[i] -> B[i], shape (m,)."""
    d = B - A
    pn = seminorm_upto(W, kind, d, n_idx)
    if conf_kind == 0:
        return pn
    acc = np.zeros(A.shape[0])
    for q in range(qx.shape[0]):
        pts = A + qx[q] * d
        p1 = seminorm_upto(W, kind, pts, 0)
        acc += qw[q] * (c0 + c1 * p1 * p1)
    return pn * acc


def curve_length(W, kind, n_idx, nodes, qx, qw, conf_kind, c0, c1):
    """Length of one piecewise-linear curve under the n-th tangent seminorm."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=np.float64))
    total = 0.0
    for i in range(nodes.shape[0] - 1):
        total += _seg_len_batch(W, kind, n_idx, nodes[i][None, :],
                                nodes[i + 1][None, :], qx, qw,
                                conf_kind, c0, c1)[0]
    return float(total)


def _two_segment_batch(W, kind, n_idx, A, B, C, qx, qw, conf_kind, c0, c1):
    return (_seg_len_batch(W, kind, n_idx, A, B, qx, qw, conf_kind, c0, c1)
            + _seg_len_batch(W, kind, n_idx, B, C, qx, qw, conf_kind, c0, c1))


def optimize_path_batch(W, kind, n_idx, x, Y, n_nodes, sweeps, gs_iters,
                        qx, qw, conf_kind, c0, c1):
    """Coordinate descent with golden-section line search, batched over endpoints.

    Returns (lengths (B,), nodes (B, n_nodes, D)). Moves are kept only when
    they strictly shorten the two adjacent segments, so the straight-line
    initialization survives whenever it is optimal.
    """
    x = np.asarray(x, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    B, D = Y.shape
    t = (np.arange(n_nodes) / (n_nodes - 1.0))[None, :, None]
    nodes = x[None, None, :] + t * (Y - x[None, :])[:, None, :]
    span = np.abs(Y - x[None, :]).max(axis=1)
    base = span / (n_nodes - 1.0)
    for _ in range(sweeps):
        for j in range(1, n_nodes - 1):
            A = nodes[:, j - 1]
            C = nodes[:, j + 1]
            for k in range(D):
                cur = nodes[:, j, k].copy()

                def local(vals):
                    Bm = nodes[:, j].copy()
                    Bm[:, k] = vals
                    return _two_segment_batch(W, kind, n_idx, A, Bm, C,
                                              qx, qw, conf_kind, c0, c1)

                h = (0.5 * (np.abs(nodes[:, j, k] - A[:, k])
                            + np.abs(C[:, k] - nodes[:, j, k]))
                     + 0.5 * base + 1e-9)
                lo, hi = cur - h, cur + h
                x1 = hi - _INVPHI * (hi - lo)
                x2 = lo + _INVPHI * (hi - lo)
                f1, f2 = local(x1), local(x2)
                for _i in range(gs_iters):
                    mask = f1 <= f2
                    hi = np.where(mask, x2, hi)
                    lo = np.where(mask, lo, x1)
                    probe = np.where(mask, hi - _INVPHI * (hi - lo),
                                     lo + _INVPHI * (hi - lo))
                    fp = local(probe)
                    x2n = np.where(mask, x1, probe)
                    f2n = np.where(mask, f1, fp)
                    x1n = np.where(mask, probe, x2)
                    f1n = np.where(mask, fp, f2)
                    x1, x2, f1, f2 = x1n, x2n, f1n, f2n
                xb = np.where(f1 <= f2, x1, x2)
                fb = np.where(f1 <= f2, f1, f2)
                fcur = local(cur)
                accept = fb < fcur
                nodes[:, j, k] = np.where(accept, xb, cur)
    lengths = np.array([
        curve_length(W, kind, n_idx, nodes[b], qx, qw, conf_kind, c0, c1)
        for b in range(B)
    ])
    return lengths, nodes


def optimize_path(W, kind, n_idx, x, y, n_nodes, sweeps, gs_iters,
                  qx, qw, conf_kind, c0, c1):
    lengths, nodes = optimize_path_batch(
        W, kind, n_idx, x, np.asarray(y)[None, :], n_nodes, sweeps, gs_iters,
        qx, qw, conf_kind, c0, c1)
    return float(lengths[0]), nodes[0]


def pseudometric_batch(W, kind, x, Y, n_nodes, sweeps, gs_iters,
                       qx, qw, conf_kind, c0, c1):
    """d^n(x, y) for every y in Y and every seminorm index, shape (B, N)."""
    x = np.asarray(x, dtype=np.float64)
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    N = W.shape[0]
    out = np.zeros((Y.shape[0], N))
    active = ~np.all(Y == x[None, :], axis=1)
    if np.any(active):
        for n_idx in range(N):
            lengths, _ = optimize_path_batch(
                W, kind, n_idx, x, Y[active], n_nodes, sweeps, gs_iters,
                qx, qw, conf_kind, c0, c1)
            out[active, n_idx] = lengths
    return out
