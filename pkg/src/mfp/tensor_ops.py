"""Dense linear algebra and elementary neural-network math.

The tensor substrate is the C-contiguous float32 ``numpy.ndarray``. Every
operation validates shapes, runs through the active kernel backend where one
exists (see ``mfp._kernels``), and raises ``NonFiniteError`` if it would
return NaN/Inf. Scalar reductions (mse, cosine, Frobenius) and PCA internals
accumulate in float64; storage stays fp32.

All functions are pure and safe to call concurrently.
"""

import warnings
from typing import NamedTuple

import numpy as np

from . import _kernels
from .errors import DegenerateInputWarning, NonFiniteError, ShapeError

__all__ = [
    "matmul",
    "layer_norm",
    "softmax",
    "gelu",
    "mse",
    "cosine_similarity",
    "frobenius_norm",
    "pca_top_k",
    "PcaResult",
    "as_f32",
]


def as_f32(x):
    """Coerce to a C-contiguous float32 array (no copy when already one)."""
    return np.ascontiguousarray(x, dtype=np.float32)


def _ensure_finite(arr, op):
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{op} produced non-finite values")
    return arr


def matmul(a, b):
    """Matrix product of two 2-D fp32 tensors, fp32 accumulation."""
    a = as_f32(a)
    b = as_f32(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    return _ensure_finite(_kernels.matmul(a, b), "matmul")


def layer_norm(x, gamma, beta, eps=1e-6):
    """Per-vector normalization over the last axis.

    Uses population variance with ``eps`` added before the square root, then
    scales by ``gamma`` and shifts by ``beta``.
    """
    x = as_f32(x)
    gamma = as_f32(gamma)
    beta = as_f32(beta)
    if x.ndim < 1:
        raise ShapeError("layer_norm needs at least one axis")
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"gamma/beta shapes {gamma.shape}/{beta.shape} do not match last axis {d}"
        )
    if eps < 0:
        raise ShapeError("eps must be nonnegative")
    flat = x.reshape(-1, d)
    out = _kernels.layer_norm(flat, gamma, beta, float(eps))
    return _ensure_finite(out.reshape(x.shape), "layer_norm")


def softmax(x, axis=-1):
    """Softmax along ``axis``, computed with max subtraction for stability."""
    x = as_f32(x)
    moved = np.moveaxis(x, axis, -1)
    flat = np.ascontiguousarray(moved.reshape(-1, moved.shape[-1]))
    out = _kernels.softmax(flat).reshape(moved.shape)
    return _ensure_finite(np.moveaxis(out, -1, axis), "softmax")


def gelu(x):
    """Exact Gaussian-CDF GELU, x * Phi(x), elementwise."""
    x = as_f32(x)
    out = _kernels.gelu(x.reshape(-1)).reshape(x.shape)
    return _ensure_finite(out, "gelu")


def mse(a, b):
    """Mean over all elements of the squared difference."""
    a = as_f32(a)
    b = as_f32(b)
    if a.shape != b.shape:
        raise ShapeError(f"mse shape mismatch: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def cosine_similarity(u, v):
    """u.v / (|u||v|), clamped to [-1, 1].

    A zero-norm operand yields 0.0 and a DegenerateInputWarning instead of
    NaN; real key vectors are never exactly zero, and a total function keeps
    similarity-matrix construction simple.
    """
    u = as_f32(u).reshape(-1).astype(np.float64)
    v = as_f32(v).reshape(-1).astype(np.float64)
    if u.shape != v.shape:
        raise ShapeError(f"cosine_similarity shape mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine_similarity on a zero-norm vector", DegenerateInputWarning)
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def frobenius_norm(m):
    """sqrt of the sum of squares of all entries."""
    m = as_f32(m)
    return float(np.sqrt(np.sum(np.square(m, dtype=np.float64))))


class PcaResult(NamedTuple):
    components: np.ndarray  # (k, d), orthonormal rows
    projected: np.ndarray  # (n, k)
    eigenvalues: np.ndarray  # (k,), nonincreasing


def pca_top_k(rows, k):
    """Principal components of ``rows`` (n x d), centered internally.

    Eigendecomposition runs a cyclic Jacobi sweep on the d x d covariance in
    float64 (n stays small here, so O(d^3) is fine and dependency-free).
    Component sign is fixed by making the largest-magnitude coefficient
    positive so downstream renderings are deterministic. When k exceeds the
    numerical rank the trailing components are an arbitrary orthonormal
    completion with ~0 eigenvalue, flagged with DegenerateInputWarning.
    """
    rows = as_f32(rows)
    if rows.ndim != 2:
        raise ShapeError(f"pca_top_k needs a 2-D input, got {rows.shape}")
    n, d = rows.shape
    if not 1 <= k <= n:
        raise ShapeError(f"need n >= k >= 1, got n={n}, k={k}")
    centered = rows.astype(np.float64)
    centered -= centered.mean(axis=0)
    cov = (centered.T @ centered) / n
    eigvals, eigvecs = _jacobi_eigh(cov)
    order = np.argsort(eigvals)[::-1][:k]
    comps = eigvecs[:, order].T.copy()
    vals = eigvals[order]
    # deterministic sign: largest |coefficient| made positive
    for row in comps:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    scale = max(float(eigvals.max(initial=0.0)), 1e-30)
    if np.any(vals < scale * 1e-9) or k > d:
        warnings.warn(
            "pca_top_k: requested components beyond numerical rank",
            DegenerateInputWarning,
        )
    projected = centered @ comps.T
    return PcaResult(
        comps.astype(np.float32),
        projected.astype(np.float32),
        vals.astype(np.float32),
    )


def _jacobi_eigh(sym, max_sweeps=60, tol=1e-13):
    """Cyclic Jacobi eigendecomposition of a symmetric float64 matrix.

    Returns (eigenvalues, eigenvectors-as-columns), unordered. Row/column
    rotations are applied with vectorized numpy updates; convergence is
    quadratic, so a handful of sweeps suffices even at d ~ 1000.
    """
    a = np.array(sym, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"jacobi needs a square matrix, got {a.shape}")
    d = a.shape[0]
    v = np.eye(d)
    if d == 1:
        return np.diagonal(a).copy(), v
    norm = np.sqrt(np.sum(a * a))
    if norm == 0.0:
        return np.zeros(d), v
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diagonal(a) ** 2), 0.0))
        if off <= tol * norm:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= tol * norm / d:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diagonal(a).copy(), v
