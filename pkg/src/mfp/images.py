"""Image decode / resize / normalization, directory pairing, and controlled
degradations for tests.

Buffer conventions: an ImageBuffer is a (H, W, 3) uint8 RGB array, row-major;
a NormalizedImage is a (3, S, S) float32 array after mean/std normalization.
"""

import os
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from .errors import ConfigError, DecodeError, NoPairsError, ShapeError

# Channel statistics of the backbone's pretraining corpus; parity with the
# pretrained checkpoint requires normalizing exactly the way it was trained.
RGB_MEAN = (0.485, 0.456, 0.406)
RGB_STD = (0.229, 0.224, 0.225)

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}


def decode_image(path):
    """Decode a PNG or baseline JPEG file to a (H, W, 3) uint8 RGB buffer.

    Grayscale expands to RGB, palettes resolve, and any alpha channel is
    composited over white.
    """
    path = os.fspath(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise DecodeError(f"{path}: unsupported format {im.format!r}")
            im.load()
            if "transparency" in im.info or im.mode in ("RGBA", "LA", "PA"):
                rgba = im.convert("RGBA")
                white = Image.new("RGBA", rgba.size, (255, 255, 255, 255))
                im = Image.alpha_composite(white, rgba)
            rgb = im.convert("RGB")
    except DecodeError:
        raise
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise DecodeError(f"{path}: cannot decode ({exc})") from exc
    return np.asarray(rgb, dtype=np.uint8)


def encode_png(path, img):
    """Write a (H, W, 3) uint8 buffer as a PNG file (lossless)."""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) uint8 buffer, got {img.shape}")
    Image.fromarray(img, mode="RGB").save(os.fspath(path), format="PNG")


def resize_bilinear(img, out_h, out_w):
    """Bilinear resample with half-pixel centers and edge clamping.

    Operates on a float32 (H, W, C) array. Resizing to the input size is an
    exact identity. This is the kernel oracle fixtures assume; keep in sync
    with the adapter's preprocessing.
    """
    img = np.asarray(img, dtype=np.float32)
    in_h, in_w = img.shape[:2]
    if (in_h, in_w) == (out_h, out_w):
        return img.copy()

    def axis_coords(n_in, n_out):
        src = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        lo = np.clip(np.floor(src).astype(np.int64), 0, n_in - 1)
        hi = np.minimum(lo + 1, n_in - 1)
        w = np.clip(src - lo, 0.0, 1.0)
        return lo, hi, w.astype(np.float32)

    y0, y1, wy = axis_coords(in_h, out_h)
    x0, x1, wx = axis_coords(in_w, out_w)
    top = img[y0][:, x0] * (1 - wx)[None, :, None] + img[y0][:, x1] * wx[None, :, None]
    bot = img[y1][:, x0] * (1 - wx)[None, :, None] + img[y1][:, x1] * wx[None, :, None]
    return top * (1 - wy)[:, None, None] + bot * wy[:, None, None]


def to_model_input(img, config):
    """ImageBuffer -> NormalizedImage for the configured input size."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError(f"expected (H, W, 3) buffer, got {img.shape}")
    h, w = config.image_size
    x = img.astype(np.float32) / 255.0
    x = resize_bilinear(x, h, w)
    x = (x - np.asarray(RGB_MEAN, dtype=np.float32)) / np.asarray(
        RGB_STD, dtype=np.float32
    )
    return np.ascontiguousarray(x.transpose(2, 0, 1))


@dataclass
class PairManifest:
    """Ordered (pair_id, generated_path, target_path) triples."""

    pairs: list
    unmatched_generated: list = field(default_factory=list)
    unmatched_target: list = field(default_factory=list)

    def __len__(self):
        return len(self.pairs)


def discover_pairs(generated_dir, target_dir):
    """Pair image files by identical stem, in lexicographic stem order.

    Unmatched files on either side are reported on the manifest, not errors;
    an empty intersection raises NoPairsError.
    """

    def stems(d):
        d = Path(d)
        if not d.is_dir():
            raise NoPairsError(f"not a directory: {d}")
        out = {}
        for p in sorted(d.iterdir()):
            if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file():
                out[p.stem] = p
        return out

    gen = stems(generated_dir)
    tgt = stems(target_dir)
    common = sorted(gen.keys() & tgt.keys())
    manifest = PairManifest(
        pairs=[(s, gen[s], tgt[s]) for s in common],
        unmatched_generated=[gen[s] for s in sorted(gen.keys() - tgt.keys())],
        unmatched_target=[tgt[s] for s in sorted(tgt.keys() - gen.keys())],
    )
    if not manifest.pairs:
        raise NoPairsError(
            f"no pairs: no common file stems between {generated_dir} and {target_dir}"
        )
    for p in manifest.unmatched_generated:
        warnings.warn(f"unmatched generated image (no target with same stem): {p}")
    for p in manifest.unmatched_target:
        warnings.warn(f"unmatched target image (no generated with same stem): {p}")
    return manifest


def degrade(img, kind, magnitude, seed=0):
    """Apply a deterministic, seeded degradation to an ImageBuffer.

    kind="noise"         additive Gaussian noise, sigma = magnitude (8-bit
                         scale), clamped to [0, 255]
    kind="blur"          Gaussian blur, sigma = magnitude pixels
    kind="patch_shuffle" random permutation of magnitude x magnitude tiles
    """
    img = np.asarray(img, dtype=np.uint8)
    rng = np.random.default_rng(seed)
    if kind == "noise":
        noisy = img.astype(np.float64) + rng.normal(0.0, float(magnitude), img.shape)
        return np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    if kind == "blur":
        sigma = float(magnitude)
        if sigma <= 0:
            return img.copy()
        blurred = ndimage.gaussian_filter(
            img.astype(np.float64), sigma=(sigma, sigma, 0), mode="reflect"
        )
        return np.clip(np.rint(blurred), 0, 255).astype(np.uint8)
    if kind == "patch_shuffle":
        tile = int(magnitude)
        if tile <= 0:
            raise ConfigError("patch_shuffle needs a positive tile size")
        h, w = img.shape[:2]
        if h % tile or w % tile:
            raise ConfigError(f"image {h}x{w} not divisible into {tile}x{tile} tiles")
        n_tiles = (h // tile) * (w // tile)
        return shuffle_tiles(img, rng.permutation(n_tiles), tile)
    raise ConfigError(f"unknown degradation kind {kind!r}")


def shuffle_tiles(img, permutation, tile):
    """Reorder tile x tile blocks of ``img`` by ``permutation`` (row-major)."""
    img = np.asarray(img)
    h, w = img.shape[:2]
    gh, gw = h // tile, w // tile
    permutation = np.asarray(permutation)
    if permutation.shape != (gh * gw,):
        raise ShapeError(f"permutation length {permutation.shape} != {gh * gw}")
    tiles = img.reshape(gh, tile, gw, tile, -1).transpose(0, 2, 1, 3, 4)
    tiles = tiles.reshape(gh * gw, tile, tile, -1)[permutation]
    out = tiles.reshape(gh, gw, tile, tile, -1).transpose(0, 2, 1, 3, 4)
    return np.ascontiguousarray(out.reshape(img.shape))
