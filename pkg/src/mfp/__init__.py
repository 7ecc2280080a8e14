"""Map feature perception metric engine.

Scores generated map images against targets with a ViT-feature metric
(global CLS similarity + key self-similarity distance) next to SSIM/PSNR
baselines, and renders attention / PCA / cross-similarity diagnostics.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
