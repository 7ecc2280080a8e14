"""Kernel backend selection, resolved once at import.

The compiled Cython core is preferred when it was built; otherwise the NumPy
fallback is used. ``MFP_KERNELS`` overrides the choice:

    auto    compiled core if importable, NumPy fallback otherwise (default)
    cython  compiled core, ImportError if it is not built
    numpy   NumPy fallback unconditionally

``mfp._kernels.BACKEND`` names the active backend. ``scripts/bench_kernels.py``
compares the two.
"""

import os

_requested = os.environ.get("MFP_KERNELS", "auto").strip().lower()
if _requested not in {"auto", "cython", "numpy"}:
    raise ImportError(
        f"MFP_KERNELS={_requested!r} not understood (use auto, cython or numpy)"
    )

BACKEND = None
if _requested in ("auto", "cython"):
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise ImportError(
                "MFP_KERNELS=cython but the compiled kernel core is not built; "
                "run `python setup.py build_ext --inplace`"
            ) from None
if BACKEND is None:
    from . import _core_np as _impl

    BACKEND = "numpy"

matmul = _impl.matmul
layer_norm = _impl.layer_norm
softmax = _impl.softmax
gelu = _impl.gelu


def get_backend(name):
    """Load a specific backend module by name (used by the benchmark)."""
    if name == "cython":
        from . import _core

        return _core
    if name == "numpy":
        from . import _core_np

        return _core_np
    raise ValueError(f"unknown backend {name!r}")
