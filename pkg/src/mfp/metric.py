"""The MFP metric and its scalar loss value, plus SSIM/PSNR baselines.

Score components: global_sim = 1 - MSE between CLS tokens; spatial_dist =
Frobenius distance between key self-similarity matrices. The combined scalar
is an artifact convention (the raw components are always reported with it):

    combined = 0.5 * clamp(global_sim, 0, 1)
             + 0.5 * max(0, 1 - spatial_dist / (n + 1))

It is bounded to [0, 1], ascending in quality, and 1 exactly at identity.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import tensor_ops as T
from .errors import ConfigError, DegenerateInputWarning, ShapeError


def self_similarity(keys):
    """(n+1, d) keys -> (n+1, n+1) matrix of pairwise cosine similarities.

    Rows are unit-normalized and multiplied in float64, then the result is
    symmetrized, clipped to [-1, 1], and given an exact unit diagonal (the
    matrix laws hold to well under 1e-6). Zero-norm rows get 0 off-diagonal
    and are flagged with DegenerateInputWarning.
    """
    keys = T.as_f32(keys)
    if keys.ndim != 2:
        raise ShapeError(f"keys must be 2-D, got {keys.shape}")
    rows = keys.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    if zero.any():
        warnings.warn(
            f"self_similarity: {int(zero.sum())} zero-norm key rows",
            DegenerateInputWarning,
        )
    unit = rows / np.where(zero, 1.0, norms)[:, None]
    s = unit @ unit.T
    s = np.clip((s + s.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(s, 1.0)
    return s.astype(np.float32)


def global_feature_sim(cls_o, cls_t):
    """1 - MSE between the two CLS tokens (unclamped; can go negative)."""
    return 1.0 - T.mse(cls_o, cls_t)


def spatial_similarity_dist(s_o, s_t):
    """Frobenius norm of the difference of two self-similarity matrices."""
    s_o = T.as_f32(s_o)
    s_t = T.as_f32(s_t)
    if s_o.shape != s_t.shape:
        raise ShapeError(f"self-similarity shapes differ: {s_o.shape} vs {s_t.shape}")
    return T.frobenius_norm(s_o.astype(np.float64) - s_t.astype(np.float64))


@dataclass(frozen=True)
class MfpScore:
    global_sim: float
    spatial_dist: float
    spatial_dist_norm: float
    combined: float


@dataclass(frozen=True)
class LossWeights:
    """lambda1/lambda2 weight the feature terms; lambda3 the pixel L1 term."""

    lambda1: float = 10.0
    lambda2: float = 1.0
    lambda3: float = 100.0

    def __post_init__(self):
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ConfigError("loss weights must be nonnegative")


def mfp_score(bundle_o, bundle_t):
    """Score two FeatureBundles; symmetric in its arguments."""
    if bundle_o.keys.shape != bundle_t.keys.shape:
        raise ConfigError(
            f"bundles disagree on token layout: {bundle_o.keys.shape} "
            f"vs {bundle_t.keys.shape}"
        )
    n1 = bundle_o.keys.shape[0]
    g = global_feature_sim(bundle_o.cls, bundle_t.cls)
    dist = spatial_similarity_dist(
        self_similarity(bundle_o.keys), self_similarity(bundle_t.keys)
    )
    dist_norm = dist / n1
    combined = 0.5 * min(max(g, 0.0), 1.0) + 0.5 * max(0.0, 1.0 - dist_norm)
    return MfpScore(g, dist, dist_norm, combined)


def _pixel_scale(images):
    arr = np.asarray(images)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    return arr.astype(np.float64)


def mfp_loss_value(bundle_o, bundle_t, images_o, images_t, w=LossWeights()):
    """Scalar loss: lambda1*MSE(cls) + lambda2*frob(S_o - S_t) + lambda3*L1.

    The pixel term is mean absolute difference on the [0, 1] scale (uint8
    buffers are divided by 255; float inputs are taken as already scaled).
    Zero at identity, decreasing similarity raises it.
    """
    a = _pixel_scale(images_o)
    b = _pixel_scale(images_t)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if bundle_o.keys.shape != bundle_t.keys.shape:
        raise ConfigError("bundles disagree on token layout")
    term_g = T.mse(bundle_o.cls, bundle_t.cls)
    term_s = spatial_similarity_dist(
        self_similarity(bundle_o.keys), self_similarity(bundle_t.keys)
    )
    term_p = float(np.mean(np.abs(a - b)))
    return w.lambda1 * term_g + w.lambda2 * term_s + w.lambda3 * term_p


SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0


def _bt601_luma(img):
    """(H, W, 3) uint8 -> rounded 8-bit luma plane (as float64)."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) buffer, got {img.shape}")
    y = (
        0.299 * img[..., 0].astype(np.float64)
        + 0.587 * img[..., 1].astype(np.float64)
        + 0.114 * img[..., 2].astype(np.float64)
    )
    return np.clip(np.rint(y), 0.0, 255.0)


def _gaussian_window(n, sigma):
    x = np.arange(n, dtype=np.float64) - (n - 1) / 2.0
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _filter_valid(plane, window):
    """Separable valid-mode correlation with a 1-D window on both axes."""
    n = window.size
    h, w = plane.shape
    rows = np.zeros((h, w - n + 1), dtype=np.float64)
    for t in range(n):
        rows += window[t] * plane[:, t:t + w - n + 1]
    out = np.zeros((h - n + 1, rows.shape[1]), dtype=np.float64)
    for t in range(n):
        out += window[t] * rows[t:t + h - n + 1]
    return out


def ssim(img_a, img_b):
    """Mean single-scale SSIM over 11x11 Gaussian windows (sigma 1.5) on the
    8-bit BT.601 luma planes, K1=0.01, K2=0.03, dynamic range 255."""
    a = _bt601_luma(img_a)
    b = _bt601_luma(img_b)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    if min(a.shape) < SSIM_WINDOW:
        raise ShapeError(
            f"images smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window"
        )
    win = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    mu_a = _filter_valid(a, win)
    mu_b = _filter_valid(b, win)
    var_a = _filter_valid(a * a, win) - mu_a * mu_a
    var_b = _filter_valid(b * b, win) - mu_b * mu_b
    cov = _filter_valid(a * b, win) - mu_a * mu_b
    c1 = (SSIM_K1 * DYNAMIC_RANGE) ** 2
    c2 = (SSIM_K2 * DYNAMIC_RANGE) ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def psnr(img_a, img_b):
    """PSNR in dB over all RGB values; identical images -> math.inf."""
    a = np.asarray(img_a, dtype=np.float64)
    b = np.asarray(img_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"image shapes differ: {a.shape} vs {b.shape}")
    err = float(np.mean((a - b) ** 2))
    if err == 0.0:
        return math.inf
    return 20.0 * math.log10(DYNAMIC_RANGE) - 10.0 * math.log10(err)
