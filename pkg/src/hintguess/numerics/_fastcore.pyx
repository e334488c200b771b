# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled single-head kernels for the small-batch forward path.

Covers exactly the shapes the live decision path hits (heads == 1); anything
else falls back to the numpy kernels. Summation order is plain row-major
loops, so results can differ from BLAS in the last ulp or two.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef void _affine(const double[:, ::1] x, const double[:, ::1] w,
                  const double[::1] b, double[:, ::1] out, bint do_relu) noexcept nogil:
    cdef Py_ssize_t rows = x.shape[0], n_in = x.shape[1], n_out = w.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(rows):
        for j in range(n_out):
            acc = b[j]
            for k in range(n_in):
                acc += x[i, k] * w[k, j]
            if do_relu and acc < 0.0:
                acc = 0.0
            out[i, j] = acc


def mlp_forward(x, list weights, list biases, bint relu_hidden=True):
    """x (B, n_in) through affine->ReLU stack, affine final layer."""
    cdef Py_ssize_t last = len(weights) - 1
    cdef Py_ssize_t i
    cur = np.ascontiguousarray(x, dtype=np.float64)
    for i in range(len(weights)):
        w = np.ascontiguousarray(weights[i], dtype=np.float64)
        b = np.ascontiguousarray(biases[i], dtype=np.float64)
        nxt = np.empty((cur.shape[0], w.shape[1]), dtype=np.float64)
        _affine(cur, w, b, nxt, relu_hidden and i != last)
        cur = nxt
    return cur


cdef void _matmul(const double[:, ::1] a, const double[:, ::1] b,
                  double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], m = a.shape[1], p = b.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(p):
            acc = 0.0
            for k in range(m):
                acc += a[i, k] * b[k, j]
            out[i, j] = acc


cdef extern from "math.h":
    double exp(double x) nogil


cdef void _attend_one(const double[:, ::1] q, const double[:, ::1] k,
                      const double[:, ::1] v, double inv_denom,
                      double[:, ::1] mixed) noexcept nogil:
    cdef Py_ssize_t s_q = q.shape[0], s_k = k.shape[0], d = q.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double acc, row_max, row_sum, wgt
    for i in range(s_q):
        for c in range(d):
            mixed[i, c] = 0.0
    cdef double logit
    for i in range(s_q):
        # logits for query i, streamed softmax in two passes over keys
        row_max = -1e300
        for j in range(s_k):
            acc = 0.0
            for c in range(d):
                acc += q[i, c] * k[j, c]
            logit = acc * inv_denom
            if logit > row_max:
                row_max = logit
        row_sum = 0.0
        for j in range(s_k):
            acc = 0.0
            for c in range(d):
                acc += q[i, c] * k[j, c]
            wgt = exp(acc * inv_denom - row_max)
            row_sum += wgt
            for c in range(d):
                mixed[i, c] += wgt * v[j, c]
        for c in range(d):
            mixed[i, c] /= row_sum


def sa_forward(x, wq, wk, wv, wo, int heads, double denom):
    """Single-head self-attention: x (B, S, w) -> (B, S, dim)."""
    if heads != 1:
        raise ValueError("compiled kernel is single-head only")
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] wqv = np.ascontiguousarray(wq, dtype=np.float64)
    cdef const double[:, ::1] wkv = np.ascontiguousarray(wk, dtype=np.float64)
    cdef const double[:, ::1] wvv = np.ascontiguousarray(wv, dtype=np.float64)
    cdef const double[:, ::1] wov = np.ascontiguousarray(wo, dtype=np.float64)
    cdef Py_ssize_t batch = xv.shape[0], s = xv.shape[1]
    cdef Py_ssize_t d = wqv.shape[1]
    out = np.empty((batch, s, d), dtype=np.float64)
    cdef double[:, :, ::1] outv = out
    q = np.empty((s, d), dtype=np.float64)
    k = np.empty((s, d), dtype=np.float64)
    v = np.empty((s, d), dtype=np.float64)
    mixed = np.empty((s, d), dtype=np.float64)
    cdef double[:, ::1] qv = q, kv = k, vv = v, mv = mixed
    cdef double inv_denom = 1.0 / denom
    cdef Py_ssize_t b
    with nogil:
        for b in range(batch):
            _matmul(xv[b], wqv, qv)
            _matmul(xv[b], wkv, kv)
            _matmul(xv[b], wvv, vv)
            _attend_one(qv, kv, vv, inv_denom, mv)
            _matmul(mv, wov, outv[b])
    return out


def ca_forward(queries, context, wq, wk, wv, wo, int heads, double denom):
    """Single-head cross-attention: queries (B, M, w), context (B, S, w) -> (B, M, dim)."""
    if heads != 1:
        raise ValueError("compiled kernel is single-head only")
    cdef const double[:, :, ::1] yv = np.ascontiguousarray(queries, dtype=np.float64)
    cdef const double[:, :, ::1] xv = np.ascontiguousarray(context, dtype=np.float64)
    cdef const double[:, ::1] wqv = np.ascontiguousarray(wq, dtype=np.float64)
    cdef const double[:, ::1] wkv = np.ascontiguousarray(wk, dtype=np.float64)
    cdef const double[:, ::1] wvv = np.ascontiguousarray(wv, dtype=np.float64)
    cdef const double[:, ::1] wov = np.ascontiguousarray(wo, dtype=np.float64)
    cdef Py_ssize_t batch = yv.shape[0], m = yv.shape[1], s = xv.shape[1]
    cdef Py_ssize_t d = wqv.shape[1]
    out = np.empty((batch, m, d), dtype=np.float64)
    cdef double[:, :, ::1] outv = out
    q = np.empty((m, d), dtype=np.float64)
    k = np.empty((s, d), dtype=np.float64)
    v = np.empty((s, d), dtype=np.float64)
    mixed = np.empty((m, d), dtype=np.float64)
    cdef double[:, ::1] qv = q, kv = k, vv = v, mv = mixed
    cdef double inv_denom = 1.0 / denom
    cdef Py_ssize_t b
    with nogil:
        for b in range(batch):
            _matmul(yv[b], wqv, qv)
            _matmul(xv[b], wkv, kv)
            _matmul(xv[b], wvv, vv)
            _attend_one(qv, kv, vv, inv_denom, mv)
            _matmul(mv, wov, outv[b])
    return out
