#!/usr/bin/env python3
"""Generate the deterministic ViT-S/16 checkpoint shipped in weights/.

The archive follows the published self-supervised ViT-S/16 naming and shapes
(including the 14x14 positional grid, so the engine's interpolation path is
exercised at 256x256). Values are seeded draws with scales chosen so the
network is stable and content-sensitive: positional embeddings are smooth
low-frequency fields, layer norms sit near identity, and projection scales
keep per-block residual updates moderate.

Usage: python3 scripts/make_synth_weights.py [out.safetensors]
"""

import hashlib
import sys
from pathlib import Path

import numpy as np
import safetensors.numpy
from scipy import ndimage

SEED = 20260823

DEPTH = 12
DIM = 384
HEADS = 6
PATCH = 16
HIDDEN = 4 * DIM
POS_GRID = 14  # published checkpoints carry a 224-px (14x14) grid

PATCH_STD = 0.02
POS_STD = 0.10
CLS_STD = 0.02
QKV_STD = 0.04
PROJ_STD = 0.04
FC1_STD = 0.04
FC2_STD = 0.02
LN_JITTER = 0.05
BIAS_STD = 0.02


def smooth_pos_field(rng):
    """(1, POS_GRID^2 + 1, DIM) positional table, smooth over the grid."""
    coarse = rng.standard_normal((4, 4, DIM))
    zoom = (POS_GRID / 4, POS_GRID / 4, 1)
    field = ndimage.zoom(coarse, zoom, order=3, mode="nearest")
    field *= POS_STD / max(field.std(), 1e-9)
    cls_row = rng.normal(0.0, CLS_STD, (1, DIM))
    table = np.concatenate([cls_row, field.reshape(-1, DIM)], axis=0)
    return table[None].astype(np.float16)


def main(out_path):
    rng = np.random.default_rng(SEED)
    t = {}

    t["cls_token"] = rng.normal(0, CLS_STD, (1, 1, DIM)).astype(np.float16)
    t["pos_embed"] = smooth_pos_field(rng)
    t["patch_embed.proj.weight"] = rng.normal(
        0, PATCH_STD, (DIM, 3, PATCH, PATCH)
    ).astype(np.float16)
    t["patch_embed.proj.bias"] = rng.normal(0, BIAS_STD, (DIM,)).astype(np.float16)

    for i in range(DEPTH):
        p = f"blocks.{i}."
        t[p + "norm1.weight"] = (1 + rng.normal(0, LN_JITTER, DIM)).astype(np.float16)
        t[p + "norm1.bias"] = rng.normal(0, LN_JITTER, DIM).astype(np.float16)
        t[p + "attn.qkv.weight"] = rng.normal(0, QKV_STD, (3 * DIM, DIM)).astype(
            np.float16
        )
        t[p + "attn.qkv.bias"] = rng.normal(0, BIAS_STD, 3 * DIM).astype(np.float16)
        t[p + "attn.proj.weight"] = rng.normal(0, PROJ_STD, (DIM, DIM)).astype(
            np.float16
        )
        t[p + "attn.proj.bias"] = rng.normal(0, BIAS_STD, DIM).astype(np.float16)
        t[p + "norm2.weight"] = (1 + rng.normal(0, LN_JITTER, DIM)).astype(np.float16)
        t[p + "norm2.bias"] = rng.normal(0, LN_JITTER, DIM).astype(np.float16)
        t[p + "mlp.fc1.weight"] = rng.normal(0, FC1_STD, (HIDDEN, DIM)).astype(
            np.float16
        )
        t[p + "mlp.fc1.bias"] = rng.normal(0, BIAS_STD, HIDDEN).astype(np.float16)
        t[p + "mlp.fc2.weight"] = rng.normal(0, FC2_STD, (DIM, HIDDEN)).astype(
            np.float16
        )
        t[p + "mlp.fc2.bias"] = rng.normal(0, BIAS_STD, DIM).astype(np.float16)

    t["norm.weight"] = (1 + rng.normal(0, LN_JITTER, DIM)).astype(np.float16)
    t["norm.bias"] = rng.normal(0, LN_JITTER, DIM).astype(np.float16)

    out_path.parent.mkdir(parents=True, exist_ok=True)
    safetensors.numpy.save_file(t, str(out_path))
    n_params = sum(a.size for a in t.values())
    sha = hashlib.sha256(out_path.read_bytes()).hexdigest()
    print(f"wrote {out_path} ({len(t)} tensors, {n_params / 1e6:.1f}M params)")
    print(f"sha256 {sha}")


if __name__ == "__main__":
    default = Path(__file__).resolve().parent.parent / "weights" / "vits16-synthetic.safetensors"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
