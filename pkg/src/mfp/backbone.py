"""Frozen ViT backbone: weight loading and the full CPU forward pass.

The encoder is pre-norm: z' = MSA(LN1(z)) + z, then z = MLP(LN2(z')) + z'.
From the last block we keep the normalized block input X (LN1 output), the
key projections K = X W_K + b_K with all heads concatenated, the CLS-row
attention probabilities per head, and the final-LN CLS token.
"""

import hashlib
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Tuple

import numpy as np
import safetensors.numpy

from . import tensor_ops as T
from .errors import (
    ArchiveReadError,
    ConfigError,
    MissingTensorError,
    ShapeError,
    WeightShapeError,
)
from .images import decode_image, to_model_input


@dataclass(frozen=True)
class ViTConfig:
    """Backbone hyperparameters. ``preset`` builds the supported variants."""

    patch_size: int
    embed_dim: int
    depth: int
    num_heads: int
    mlp_ratio: float
    image_size: Tuple[int, int]
    layer_norm_eps: float = 1e-6

    def __post_init__(self):
        h, w = self.image_size
        if h % self.patch_size or w % self.patch_size:
            raise ConfigError(
                f"image size {self.image_size} not divisible by patch {self.patch_size}"
            )
        if self.embed_dim % self.num_heads:
            raise ConfigError(
                f"embed_dim {self.embed_dim} not divisible by {self.num_heads} heads"
            )

    @property
    def grid(self):
        return (self.image_size[0] // self.patch_size,
                self.image_size[1] // self.patch_size)

    @property
    def num_patches(self):
        gh, gw = self.grid
        return gh * gw

    @property
    def num_tokens(self):
        return self.num_patches + 1

    @property
    def head_dim(self):
        return self.embed_dim // self.num_heads

    @property
    def hidden_dim(self):
        return int(self.embed_dim * self.mlp_ratio)

    @classmethod
    def preset(cls, name, image_size=(256, 256)):
        if name == "vits16":
            return cls(16, 384, 12, 6, 4.0, tuple(image_size))
        if name == "vits8":
            return cls(8, 384, 12, 6, 4.0, tuple(image_size))
        raise ConfigError(f"unknown backbone preset {name!r}")


# Checkpoint-name -> canonical-name templates ({i} expands over depth).
# docs/weight_name_map.txt carries the same table for alternative archives.
DEFAULT_NAME_MAP = (
    ("cls_token", "cls_token"),
    ("pos_embed", "pos_embed"),
    ("patch_embed.proj.weight", "patch_embed.weight"),
    ("patch_embed.proj.bias", "patch_embed.bias"),
    ("blocks.{i}.norm1.weight", "blocks.{i}.ln1.gamma"),
    ("blocks.{i}.norm1.bias", "blocks.{i}.ln1.beta"),
    ("blocks.{i}.attn.qkv.weight", "blocks.{i}.attn.qkv.weight"),
    ("blocks.{i}.attn.qkv.bias", "blocks.{i}.attn.qkv.bias"),
    ("blocks.{i}.attn.proj.weight", "blocks.{i}.attn.proj.weight"),
    ("blocks.{i}.attn.proj.bias", "blocks.{i}.attn.proj.bias"),
    ("blocks.{i}.norm2.weight", "blocks.{i}.ln2.gamma"),
    ("blocks.{i}.norm2.bias", "blocks.{i}.ln2.beta"),
    ("blocks.{i}.mlp.fc1.weight", "blocks.{i}.mlp.fc1.weight"),
    ("blocks.{i}.mlp.fc1.bias", "blocks.{i}.mlp.fc1.bias"),
    ("blocks.{i}.mlp.fc2.weight", "blocks.{i}.mlp.fc2.weight"),
    ("blocks.{i}.mlp.fc2.bias", "blocks.{i}.mlp.fc2.bias"),
    ("norm.weight", "final_ln.gamma"),
    ("norm.bias", "final_ln.beta"),
)


def load_name_map(path):
    """Parse a `checkpoint-name -> canonical-name` table (one pair per line,
    `#` comments); the same format as docs/weight_name_map.txt."""
    entries = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" not in line:
            raise ConfigError(f"bad name-map line (no '->'): {raw!r}")
        src, dst = (part.strip() for part in line.split("->", 1))
        entries.append((src, dst))
    return tuple(entries)


class BlockWeights(NamedTuple):
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    qkv_wT: np.ndarray  # (d, 3d), applied as x @ qkv_wT
    qkv_b: np.ndarray
    proj_wT: np.ndarray
    proj_b: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray
    fc1_wT: np.ndarray
    fc1_b: np.ndarray
    fc2_wT: np.ndarray
    fc2_b: np.ndarray


@dataclass(frozen=True)
class WeightStore:
    """Immutable loaded backbone: fp32 tensors with projection matrices kept
    pre-transposed and positional embeddings pre-interpolated to the config
    grid. Shareable across worker threads."""

    config: ViTConfig
    cls_token: np.ndarray  # (d,)
    pos: np.ndarray  # (n+1, d) for the config grid
    patch_wT: np.ndarray  # (3*P*P, d)
    patch_b: np.ndarray
    blocks: Tuple[BlockWeights, ...]
    final_g: np.ndarray
    final_b: np.ndarray
    fingerprint: str
    source_path: str


@dataclass(frozen=True)
class FeatureBundle:
    """Per-image extraction result."""

    cls: np.ndarray  # (d,) final-LN CLS token
    keys: np.ndarray  # (n+1, d) last-layer key projections
    last_layer_input: np.ndarray  # (n+1, d) LN1 output entering the last block
    cls_attention: np.ndarray  # (h, n+1) last-layer CLS attention per head

    @property
    def num_tokens(self):
        return self.keys.shape[0]


def _expected_shapes(config):
    d = config.embed_dim
    p = config.patch_size
    hid = config.hidden_dim
    shapes = {
        "cls_token": (1, 1, d),
        "pos_embed": None,  # (1, m, d) with m-1 a square; checked separately
        "patch_embed.weight": (d, 3, p, p),
        "patch_embed.bias": (d,),
        "final_ln.gamma": (d,),
        "final_ln.beta": (d,),
    }
    for i in range(config.depth):
        shapes[f"blocks.{i}.ln1.gamma"] = (d,)
        shapes[f"blocks.{i}.ln1.beta"] = (d,)
        shapes[f"blocks.{i}.attn.qkv.weight"] = (3 * d, d)
        shapes[f"blocks.{i}.attn.qkv.bias"] = (3 * d,)
        shapes[f"blocks.{i}.attn.proj.weight"] = (d, d)
        shapes[f"blocks.{i}.attn.proj.bias"] = (d,)
        shapes[f"blocks.{i}.ln2.gamma"] = (d,)
        shapes[f"blocks.{i}.ln2.beta"] = (d,)
        shapes[f"blocks.{i}.mlp.fc1.weight"] = (hid, d)
        shapes[f"blocks.{i}.mlp.fc1.bias"] = (hid,)
        shapes[f"blocks.{i}.mlp.fc2.weight"] = (d, hid)
        shapes[f"blocks.{i}.mlp.fc2.bias"] = (d,)
    return shapes


def load_weights(archive_path, config, name_map=None):
    """Read a safetensors archive into a WeightStore.

    ``name_map`` may point at an alternative checkpoint-name table; default
    is the published-backbone naming (DEFAULT_NAME_MAP).
    """
    archive_path = Path(archive_path)
    try:
        raw = safetensors.numpy.load_file(str(archive_path))
    except FileNotFoundError:
        raise
    except Exception as exc:
        raise ArchiveReadError(f"cannot read {archive_path}: {exc}") from exc

    table = DEFAULT_NAME_MAP if name_map is None else load_name_map(name_map)
    to_checkpoint = {}
    for src, dst in table:
        if "{i}" in src or "{i}" in dst:
            for i in range(config.depth):
                to_checkpoint[dst.format(i=i)] = src.format(i=i)
        else:
            to_checkpoint[dst] = src

    shapes = _expected_shapes(config)
    tensors = {}
    used = set()
    for canon, want in shapes.items():
        ckpt_name = to_checkpoint.get(canon, canon)
        if ckpt_name not in raw:
            raise MissingTensorError(
                f"{archive_path}: missing tensor {ckpt_name!r} (canonical {canon!r})"
            )
        used.add(ckpt_name)
        arr = raw[ckpt_name]
        if arr.dtype == np.float16:
            arr = arr.astype(np.float32)
        if arr.dtype != np.float32:
            raise WeightShapeError(
                f"{canon}: unsupported dtype {arr.dtype} (need fp16/fp32)"
            )
        if want is not None and arr.shape != want:
            raise WeightShapeError(f"{canon}: shape {arr.shape}, expected {want}")
        tensors[canon] = np.ascontiguousarray(arr, dtype=np.float32)

    extra = sorted(set(raw) - used)
    if extra:
        warnings.warn(
            f"{archive_path.name}: ignoring {len(extra)} unknown tensors "
            f"(first: {extra[0]!r})"
        )

    pos = tensors["pos_embed"]
    d = config.embed_dim
    if pos.ndim != 3 or pos.shape[0] != 1 or pos.shape[2] != d:
        raise WeightShapeError(f"pos_embed: shape {pos.shape}, expected (1, m, {d})")
    m = pos.shape[1] - 1
    side = math.isqrt(m)
    if side * side != m:
        raise WeightShapeError(f"pos_embed: {m} patch positions is not a square grid")
    pos = interpolate_pos_embeddings(pos.reshape(-1, d), (side, side), config.grid)

    blocks = []
    for i in range(config.depth):
        g = lambda suffix: tensors[f"blocks.{i}.{suffix}"]  # noqa: E731
        blocks.append(
            BlockWeights(
                ln1_g=g("ln1.gamma"),
                ln1_b=g("ln1.beta"),
                qkv_wT=np.ascontiguousarray(g("attn.qkv.weight").T),
                qkv_b=g("attn.qkv.bias"),
                proj_wT=np.ascontiguousarray(g("attn.proj.weight").T),
                proj_b=g("attn.proj.bias"),
                ln2_g=g("ln2.gamma"),
                ln2_b=g("ln2.beta"),
                fc1_wT=np.ascontiguousarray(g("mlp.fc1.weight").T),
                fc1_b=g("mlp.fc1.bias"),
                fc2_wT=np.ascontiguousarray(g("mlp.fc2.weight").T),
                fc2_b=g("mlp.fc2.bias"),
            )
        )

    digest = hashlib.sha256()
    digest.update(archive_path.read_bytes())
    digest.update(
        json.dumps(
            {
                "patch_size": config.patch_size,
                "embed_dim": config.embed_dim,
                "depth": config.depth,
                "num_heads": config.num_heads,
                "mlp_ratio": config.mlp_ratio,
                "image_size": list(config.image_size),
                "layer_norm_eps": config.layer_norm_eps,
            },
            sort_keys=True,
        ).encode()
    )

    p = config.patch_size
    return WeightStore(
        config=config,
        cls_token=tensors["cls_token"].reshape(d),
        pos=pos,
        patch_wT=np.ascontiguousarray(
            tensors["patch_embed.weight"].reshape(d, 3 * p * p).T
        ),
        patch_b=tensors["patch_embed.bias"],
        blocks=tuple(blocks),
        final_g=tensors["final_ln.gamma"],
        final_b=tensors["final_ln.beta"],
        fingerprint=digest.hexdigest()[:16],
        source_path=str(archive_path),
    )


def _cubic_weight(x, a=-0.75):
    # Keys cubic convolution kernel; reproduces constants exactly.
    x = abs(x)
    if x < 1.0:
        return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0
    if x < 2.0:
        return ((x - 5.0) * x + 8.0) * x * a - 4.0 * a
    return 0.0


def _cubic_matrix(n_in, n_out):
    """Dense (n_out, n_in) bicubic resampling matrix, half-pixel centers,
    edge-clamped taps."""
    w = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for o in range(n_out):
        src = (o + 0.5) * scale - 0.5
        base = math.floor(src)
        frac = src - base
        for t in range(-1, 3):
            idx = min(max(base + t, 0), n_in - 1)
            w[o, idx] += _cubic_weight(frac - t)
    return w


def interpolate_pos_embeddings(pos, source_grid, target_grid):
    """Resample patch positional embeddings between grids (CLS row copied).

    Bicubic per embedding channel, matching the variable-resolution procedure
    the backbone was published with.
    """
    pos = T.as_f32(pos)
    sh, sw = source_grid
    if pos.ndim != 2 or pos.shape[0] != sh * sw + 1:
        raise WeightShapeError(
            f"pos embeddings {pos.shape} do not match source grid {source_grid}"
        )
    if tuple(source_grid) == tuple(target_grid):
        return pos.copy()
    th, tw = target_grid
    grid = pos[1:].astype(np.float64).reshape(sh, sw, -1)
    wy = _cubic_matrix(sh, th)
    wx = _cubic_matrix(sw, tw)
    resampled = np.einsum("oi,ijd,pj->opd", wy, grid, wx, optimize=True)
    out = np.empty((th * tw + 1, pos.shape[1]), dtype=np.float32)
    out[0] = pos[0]
    out[1:] = resampled.reshape(th * tw, -1).astype(np.float32)
    return out


def patchify_embed(image, weights, config=None):
    """NormalizedImage (3, H, W) -> token matrix (n+1, d) with CLS prepended
    and positional embeddings added."""
    config = config or weights.config
    image = T.as_f32(image)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ShapeError(f"expected (3, H, W) input, got {image.shape}")
    p = config.patch_size
    _, h, w = image.shape
    if h % p or w % p:
        raise ShapeError(f"image {h}x{w} not divisible by patch size {p}")
    gh, gw = h // p, w // p
    # (3, gh, p, gw, p) -> (gh, gw, 3, p, p): patch pixels flatten c-major,
    # the same ordering as the flattened patch-embedding matrix
    patches = image.reshape(3, gh, p, gw, p).transpose(1, 3, 0, 2, 4)
    patches = np.ascontiguousarray(patches.reshape(gh * gw, 3 * p * p))
    tokens = np.empty((gh * gw + 1, config.embed_dim), dtype=np.float32)
    tokens[0] = weights.cls_token
    tokens[1:] = T.matmul(patches, weights.patch_wT) + weights.patch_b
    if tokens.shape[0] != weights.pos.shape[0]:
        raise ShapeError(
            f"{tokens.shape[0]} tokens but {weights.pos.shape[0]} positional rows"
        )
    tokens += weights.pos
    return tokens


def encoder_forward(tokens, weights, config=None):
    """Run the pre-norm encoder stack and collect the FeatureBundle."""
    config = config or weights.config
    d = config.embed_dim
    nh = config.num_heads
    hd = config.head_dim
    scale = np.float32(1.0 / math.sqrt(hd))
    eps = config.layer_norm_eps
    n1 = tokens.shape[0]
    last = config.depth - 1

    z = T.as_f32(tokens).copy()
    keys = x_last = cls_attention = None
    for i, blk in enumerate(weights.blocks):
        x = T.layer_norm(z, blk.ln1_g, blk.ln1_b, eps)
        qkv = T.matmul(x, blk.qkv_wT) + blk.qkv_b
        if i == last:
            x_last = x
            keys = np.ascontiguousarray(qkv[:, d:2 * d])
        q = qkv[:, :d].reshape(n1, nh, hd).transpose(1, 0, 2)
        k = qkv[:, d:2 * d].reshape(n1, nh, hd).transpose(1, 0, 2)
        v = qkv[:, 2 * d:].reshape(n1, nh, hd).transpose(1, 0, 2)
        heads = np.empty((nh, n1, hd), dtype=np.float32)
        if i == last:
            cls_attention = np.empty((nh, n1), dtype=np.float32)
        for h in range(nh):
            logits = T.matmul(np.ascontiguousarray(q[h]) * scale,
                              np.ascontiguousarray(k[h].T))
            attn = T.softmax(logits, axis=-1)
            if i == last:
                cls_attention[h] = attn[0]
            heads[h] = T.matmul(attn, np.ascontiguousarray(v[h]))
        merged = np.ascontiguousarray(heads.transpose(1, 0, 2).reshape(n1, d))
        z += T.matmul(merged, blk.proj_wT) + blk.proj_b

        y = T.layer_norm(z, blk.ln2_g, blk.ln2_b, eps)
        hidden = T.gelu(T.matmul(y, blk.fc1_wT) + blk.fc1_b)
        z += T.matmul(hidden, blk.fc2_wT) + blk.fc2_b

    final = T.layer_norm(z, weights.final_g, weights.final_b, eps)
    return FeatureBundle(
        cls=final[0].copy(),
        keys=keys,
        last_layer_input=x_last,
        cls_attention=cls_attention,
    )


def extract_features(source, weights, config=None):
    """Image file path or (H, W, 3) uint8 buffer -> FeatureBundle."""
    config = config or weights.config
    if isinstance(source, (str, Path)):
        buf = decode_image(source)
    else:
        buf = np.asarray(source)
    tokens = patchify_embed(to_model_input(buf, config), weights, config)
    return encoder_forward(tokens, weights, config)
