# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled fp32 kernels for the hot inner loops of the ViT forward pass.

All kernels take C-contiguous float32 arrays and return new float32 arrays.
No argument validation happens here; callers in ``mfp.tensor_ops`` check
shapes, dtypes and output finiteness. Row statistics (layer-norm mean and
variance, softmax denominators) accumulate in double so both backends agree
to fp32 rounding.

Matmul runs a row-blocked i-k-j loop: the innermost j loop is a SAXPY over an
output row, which the C compiler vectorizes without any reassociation of the
per-element accumulation order, so results are deterministic for a fixed
build.
"""

import numpy as np

cdef extern from "math.h" nogil:
    double erf(double)
    double exp(double)
    double sqrt(double)

DEF ROW_BLOCK = 8


def matmul(const float[:, ::1] a, const float[:, ::1] b):
    """C = A @ B with fp32 storage and per-element sequential accumulation."""
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], p = b.shape[1]
    out = np.zeros((m, p), dtype=np.float32)
    cdef float[:, ::1] c = out
    cdef Py_ssize_t ii, iend, i, t, j
    cdef float s
    with nogil:
        for ii in range(0, m, ROW_BLOCK):
            iend = ii + ROW_BLOCK
            if iend > m:
                iend = m
            for t in range(k):
                for i in range(ii, iend):
                    s = a[i, t]
                    for j in range(p):
                        c[i, j] += s * b[t, j]
    return out


def layer_norm(const float[:, ::1] x, const float[::1] gamma,
               const float[::1] beta, double eps):
    """Row-wise (x - mean) / sqrt(popvar + eps) * gamma + beta."""
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    out = np.empty((n, d), dtype=np.float32)
    cdef float[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef double mu, var, dv, inv
    with nogil:
        for i in range(n):
            mu = 0.0
            for j in range(d):
                mu += x[i, j]
            mu /= d
            var = 0.0
            for j in range(d):
                dv = x[i, j] - mu
                var += dv * dv
            var /= d
            inv = 1.0 / sqrt(var + eps)
            for j in range(d):
                y[i, j] = <float>((x[i, j] - mu) * inv) * gamma[j] + beta[j]
    return out


def softmax(const float[:, ::1] x):
    """Row-wise softmax with max subtraction; double row sums."""
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1]
    out = np.empty((n, m), dtype=np.float32)
    cdef float[:, ::1] y = out
    cdef Py_ssize_t i, j
    cdef float mx
    cdef double acc, inv
    with nogil:
        for i in range(n):
            mx = x[i, 0]
            for j in range(1, m):
                if x[i, j] > mx:
                    mx = x[i, j]
            acc = 0.0
            for j in range(m):
                y[i, j] = <float>exp(<double>(x[i, j] - mx))
                acc += y[i, j]
            inv = 1.0 / acc
            for j in range(m):
                y[i, j] = <float>(y[i, j] * inv)
    return out


def gelu(const float[::1] x):
    """Exact Gaussian-CDF GELU, x * Phi(x), elementwise over a flat array."""
    cdef Py_ssize_t n = x.shape[0]
    out = np.empty(n, dtype=np.float32)
    cdef float[::1] y = out
    cdef Py_ssize_t i
    cdef double v
    with nogil:
        for i in range(n):
            v = <double>x[i]
            y[i] = <float>(0.5 * v * (1.0 + erf(v * 0.7071067811865476)))
    return out
