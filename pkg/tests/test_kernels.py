"""Backend parity: the compiled kernel core and the NumPy fallback must agree
to the tolerances the oracle suites rely on."""

import numpy as np
import pytest

from mfp import _kernels

try:
    CY = _kernels.get_backend("cython")
except ImportError:
    CY = None
NP = _kernels.get_backend("numpy")

needs_cython = pytest.mark.skipif(CY is None, reason="compiled core not built")


def test_active_backend_exposed():
    assert _kernels.BACKEND in ("cython", "numpy")


@needs_cython
@pytest.mark.parametrize("m,k,p", [(1, 1, 1), (7, 13, 5), (64, 384, 64), (257, 384, 1152)])
def test_matmul_parity(rng, m, k, p):
    a = rng.standard_normal((m, k)).astype(np.float32)
    b = rng.standard_normal((k, p)).astype(np.float32)
    got = np.asarray(CY.matmul(a, b))
    ref = NP.matmul(a, b)
    scale = max(1.0, float(np.abs(ref).max()))
    assert np.abs(got - ref).max() / scale < 1e-5


@needs_cython
def test_layer_norm_parity(rng):
    x = (rng.standard_normal((257, 384)) * 2.5).astype(np.float32)
    gamma = rng.standard_normal(384).astype(np.float32)
    beta = rng.standard_normal(384).astype(np.float32)
    got = np.asarray(CY.layer_norm(x, gamma, beta, 1e-6))
    ref = NP.layer_norm(x, gamma, beta, 1e-6)
    assert np.abs(got - ref).max() < 1e-6


@needs_cython
def test_softmax_parity(rng):
    x = (rng.standard_normal((300, 257)) * 8).astype(np.float32)
    got = np.asarray(CY.softmax(x))
    ref = NP.softmax(x)
    assert np.abs(got - ref).max() < 1e-7


@needs_cython
def test_gelu_parity(rng):
    x = (rng.standard_normal(5000) * 4).astype(np.float32)
    got = np.asarray(CY.gelu(x))
    ref = NP.gelu(x)
    assert np.abs(got - ref).max() < 1e-7


@needs_cython
def test_matmul_triple_loop_oracle_both_backends(rng):
    a = rng.standard_normal((16, 16)).astype(np.float32)
    b = rng.standard_normal((16, 16)).astype(np.float32)
    expect = np.zeros((16, 16))
    for i in range(16):
        for j in range(16):
            for t in range(16):
                expect[i, j] += float(a[i, t]) * float(b[t, j])
    assert np.abs(np.asarray(CY.matmul(a, b)) - expect).max() < 1e-4
    assert np.abs(NP.matmul(a, b) - expect).max() < 1e-4
