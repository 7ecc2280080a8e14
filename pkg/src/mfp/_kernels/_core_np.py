"""NumPy fallback for the compiled kernel core.

Same contract as ``_core``: C-contiguous float32 in, float32 out, no
validation. Reductions that the compiled core performs in double (layer-norm
statistics, softmax row sums, the erf inside GELU) are computed in float64
here too, so the backends agree to fp32 rounding.
"""

import numpy as np
from scipy.special import erf


def matmul(a, b):
    return a @ b


def layer_norm(x, gamma, beta, eps):
    mu = x.mean(axis=1, dtype=np.float64, keepdims=True)
    var = np.square(x.astype(np.float64) - mu).mean(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    y = ((x - mu) * inv).astype(np.float32)
    return y * gamma + beta


def softmax(x):
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted.astype(np.float64)).astype(np.float32)
    inv = 1.0 / e.sum(axis=1, dtype=np.float64, keepdims=True)
    return (e * inv).astype(np.float32)


def gelu(x):
    v = x.astype(np.float64)
    return (0.5 * v * (1.0 + erf(v * 0.7071067811865476))).astype(np.float32)
