"""JIT-compiled kernels, default backend.

Same contract as ``numpy_impl`` (see its module docstring for the shared
conventions); scalar loops under ``numba.njit`` with the batched
pseudometric parallelized over endpoint pairs. Compiled artifacts are
disk-cached, so the JIT cost is paid once per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

NAME = "numba"

_INVPHI = 0.6180339887498949


@njit(cache=True)
def _raw_one(W, kind, v, j):
    if kind == 0:
        s = 0.0
        for k in range(v.shape[0]):
            t = W[j, k] * abs(v[k])
            if t > s:
                s = t
        return s
    s = 0.0
    for k in range(v.shape[0]):
        s += W[j, k] * abs(v[k])
    return s


@njit(cache=True)
def _graded_one(W, kind, v, n_idx):
    best = 0.0
    for j in range(n_idx + 1):
        s = _raw_one(W, kind, v, j)
        if s > best:
            best = s
    return best


@njit(cache=True)
def _seminorm_table(W, kind, X):
    m = X.shape[0]
    N = W.shape[0]
    out = np.empty((m, N))
    for i in range(m):
        best = 0.0
        for j in range(N):
            s = _raw_one(W, kind, X[i], j)
            if s > best:
                best = s
            out[i, j] = best
    return out


@njit(cache=True)
def _metric_combine(P):
    m = P.shape[0]
    out = np.zeros(m)
    for i in range(m):
        acc = 0.0
        w = 1.0
        for j in range(P.shape[1]):
            w *= 0.5
            acc += w * P[i, j] / (1.0 + P[i, j])
        out[i] = acc
    return out


@njit(cache=True)
def _graded_metric_batch(W, kind, X, y):
    m = X.shape[0]
    D = X.shape[1]
    N = W.shape[0]
    out = np.zeros(m)
    v = np.empty(D)
    for i in range(m):
        for k in range(D):
            v[k] = X[i, k] - y[k]
        acc = 0.0
        w = 1.0
        best = 0.0
        for j in range(N):
            s = _raw_one(W, kind, v, j)
            if s > best:
                best = s
            w *= 0.5
            acc += w * best / (1.0 + best)
        out[i] = acc
    return out


@njit(cache=True)
def _seg_len(W, kind, n_idx, ax, bx, qx, qw, conf_kind, c0, c1, dbuf, pbuf):
    D = ax.shape[0]
    for k in range(D):
        dbuf[k] = bx[k] - ax[k]
    pn = _graded_one(W, kind, dbuf, n_idx)
    if conf_kind == 0:
        return pn
    acc = 0.0
    for q in range(qx.shape[0]):
        for k in range(D):
            pbuf[k] = ax[k] + qx[q] * dbuf[k]
        p1 = _raw_one(W, kind, pbuf, 0)
        acc += qw[q] * (c0 + c1 * p1 * p1)
    return pn * acc


@njit(cache=True)
def _curve_len(W, kind, n_idx, nodes, qx, qw, conf_kind, c0, c1, dbuf, pbuf):
    total = 0.0
    for i in range(nodes.shape[0] - 1):
        total += _seg_len(W, kind, n_idx, nodes[i], nodes[i + 1],
                          qx, qw, conf_kind, c0, c1, dbuf, pbuf)
    return total


@njit(cache=True)
def _local_len(W, kind, n_idx, a, b, c, qx, qw, ck, c0, c1, dbuf, pbuf):
    return (_seg_len(W, kind, n_idx, a, b, qx, qw, ck, c0, c1, dbuf, pbuf)
            + _seg_len(W, kind, n_idx, b, c, qx, qw, ck, c0, c1, dbuf, pbuf))


@njit(cache=True)
def _gs_update(W, kind, n_idx, nodes, j, k, h, gs_iters, qx, qw, ck, c0, c1,
               dbuf, pbuf, bbuf):
    D = nodes.shape[1]
    for kk in range(D):
        bbuf[kk] = nodes[j, kk]
    cur = nodes[j, k]
    lo = cur - h
    hi = cur + h
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    bbuf[k] = x1
    f1 = _local_len(W, kind, n_idx, nodes[j - 1], bbuf, nodes[j + 1],
                    qx, qw, ck, c0, c1, dbuf, pbuf)
    bbuf[k] = x2
    f2 = _local_len(W, kind, n_idx, nodes[j - 1], bbuf, nodes[j + 1],
                    qx, qw, ck, c0, c1, dbuf, pbuf)
    for _ in range(gs_iters):
        if f1 <= f2:
            hi = x2
            probe = hi - _INVPHI * (hi - lo)
            bbuf[k] = probe
            fp = _local_len(W, kind, n_idx, nodes[j - 1], bbuf, nodes[j + 1],
                            qx, qw, ck, c0, c1, dbuf, pbuf)
            x2 = x1
            f2 = f1
            x1 = probe
            f1 = fp
        else:
            lo = x1
            probe = lo + _INVPHI * (hi - lo)
            bbuf[k] = probe
            fp = _local_len(W, kind, n_idx, nodes[j - 1], bbuf, nodes[j + 1],
                            qx, qw, ck, c0, c1, dbuf, pbuf)
            x1 = x2
            f1 = f2
            x2 = probe
            f2 = fp
    if f1 <= f2:
        xb = x1
        fb = f1
    else:
        xb = x2
        fb = f2
    bbuf[k] = cur
    fcur = _local_len(W, kind, n_idx, nodes[j - 1], bbuf, nodes[j + 1],
                      qx, qw, ck, c0, c1, dbuf, pbuf)
    if fb < fcur:
        nodes[j, k] = xb


@njit(cache=True)
def _optimize_path(W, kind, n_idx, x, y, n_nodes, sweeps, gs_iters,
                   qx, qw, ck, c0, c1):
    D = x.shape[0]
    nodes = np.empty((n_nodes, D))
    span = 0.0
    for k in range(D):
        d = abs(y[k] - x[k])
        if d > span:
            span = d
    for i in range(n_nodes):
        t = i / (n_nodes - 1.0)
        for k in range(D):
            nodes[i, k] = x[k] + t * (y[k] - x[k])
    base = span / (n_nodes - 1.0)
    dbuf = np.empty(D)
    pbuf = np.empty(D)
    bbuf = np.empty(D)
    for _ in range(sweeps):
        for j in range(1, n_nodes - 1):
            for k in range(D):
                h = (0.5 * (abs(nodes[j, k] - nodes[j - 1, k])
                            + abs(nodes[j + 1, k] - nodes[j, k]))
                     + 0.5 * base + 1e-9)
                _gs_update(W, kind, n_idx, nodes, j, k, h, gs_iters,
                           qx, qw, ck, c0, c1, dbuf, pbuf, bbuf)
    length = _curve_len(W, kind, n_idx, nodes, qx, qw, ck, c0, c1, dbuf, pbuf)
    return length, nodes


@njit(cache=True, parallel=True)
def _pseudometric_batch(W, kind, x, Y, n_nodes, sweeps, gs_iters,
                        qx, qw, ck, c0, c1):
    B = Y.shape[0]
    N = W.shape[0]
    out = np.zeros((B, N))
    for b in prange(B):
        same = True
        for k in range(x.shape[0]):
            if Y[b, k] != x[k]:
                same = False
        if not same:
            for n_idx in range(N):
                length, _ = _optimize_path(W, kind, n_idx, x, Y[b], n_nodes,
                                           sweeps, gs_iters, qx, qw, ck, c0, c1)
                out[b, n_idx] = length
    return out


def _c(a):
    return np.ascontiguousarray(np.asarray(a, dtype=np.float64))


def seminorm_table(W, kind, X):
    return _seminorm_table(_c(W), int(kind), np.atleast_2d(_c(X)))


def seminorm_upto(W, kind, V, n_idx):
    table = seminorm_table(np.asarray(W)[: n_idx + 1], kind, V)
    return table[:, -1]


def metric_combine(P):
    return _metric_combine(np.atleast_2d(_c(P)))


def graded_metric_batch(W, kind, X, y):
    return _graded_metric_batch(_c(W), int(kind), np.atleast_2d(_c(X)), _c(y))


def curve_length(W, kind, n_idx, nodes, qx, qw, conf_kind, c0, c1):
    nodes = np.atleast_2d(_c(nodes))
    dbuf = np.empty(nodes.shape[1])
    pbuf = np.empty(nodes.shape[1])
    return float(_curve_len(_c(W), int(kind), int(n_idx), nodes, _c(qx), _c(qw),
                            int(conf_kind), float(c0), float(c1), dbuf, pbuf))


def optimize_path(W, kind, n_idx, x, y, n_nodes, sweeps, gs_iters,
                  qx, qw, conf_kind, c0, c1):
    length, nodes = _optimize_path(_c(W), int(kind), int(n_idx), _c(x), _c(y),
                                   int(n_nodes), int(sweeps), int(gs_iters),
                                   _c(qx), _c(qw), int(conf_kind),
                                   float(c0), float(c1))
    return float(length), nodes


def optimize_path_batch(W, kind, n_idx, x, Y, n_nodes, sweeps, gs_iters,
                        qx, qw, conf_kind, c0, c1):
    Y = np.atleast_2d(_c(Y))
    lengths = np.empty(Y.shape[0])
    nodes_all = np.empty((Y.shape[0], n_nodes, Y.shape[1]))
    for b in range(Y.shape[0]):
        lengths[b], nodes_all[b] = _optimize_path(
            _c(W), int(kind), int(n_idx), _c(x), Y[b], int(n_nodes),
            int(sweeps), int(gs_iters), _c(qx), _c(qw), int(conf_kind),
            float(c0), float(c1))
    return lengths, nodes_all


def pseudometric_batch(W, kind, x, Y, n_nodes, sweeps, gs_iters,
                       qx, qw, conf_kind, c0, c1):
    return _pseudometric_batch(_c(W), int(kind), _c(x), np.atleast_2d(_c(Y)),
                               int(n_nodes), int(sweeps), int(gs_iters),
                               _c(qx), _c(qw), int(conf_kind),
                               float(c0), float(c1))
