#!/usr/bin/env python3
"""Render paired synthetic map / aerial scenes for fixtures and demos.

Each scene is built from one random street layout (axis-aligned road grid
with zoned city blocks) rendered three ways:

    <prefix>NN_map.png     clean cartographic render (the "target" map)
    <prefix>NN_gen.png     re-render from a jittered layout with light pixel
                           noise (a plausible "generated" map)
    <prefix>NN_aerial.png  textured aerial-style render of the same layout
    <prefix>NN_mask.png    road mask (255 on road pixels)

Determinism: fully seeded; the same --seed/--count/--size reproduce the
same bytes.

Usage: python3 scripts/gen_map_fixtures.py --out DIR [--count 5]
       [--seed 7] [--size 256] [--prefix scene]
"""

import argparse
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

MAP_COLORS = {
    "residential": (228, 226, 220),
    "park": (199, 232, 188),
    "water": (166, 204, 242),
    "road": (255, 255, 255),
    "major_road": (252, 221, 133),
}
AERIAL_COLORS = {
    "residential": (121, 117, 108),
    "park": (62, 96, 54),
    "water": (38, 58, 94),
    "road": (94, 94, 99),
    "major_road": (104, 101, 96),
}
AERIAL_NOISE = {
    "residential": 12.0,
    "park": 10.0,
    "water": 4.0,
    "road": 5.0,
    "major_road": 6.0,
}


@dataclass
class Layout:
    size: int
    v_roads: list  # (center, width, major)
    h_roads: list
    zones: dict  # (row, col) -> zone name


def make_layout(rng, size):
    def road_set():
        count = int(rng.integers(3, 6))
        centers = np.sort(rng.choice(np.arange(20, size - 20), count, replace=False))
        # keep roads from merging into one wide band
        keep = [centers[0]]
        for c in centers[1:]:
            if c - keep[-1] >= 28:
                keep.append(int(c))
        return [
            (int(c), int(rng.integers(5, 10)), bool(rng.random() < 0.3)) for c in keep
        ]

    v_roads = road_set()
    h_roads = road_set()
    zones = {}
    for r in range(len(h_roads) + 1):
        for c in range(len(v_roads) + 1):
            zones[(r, c)] = rng.choice(
                ["residential", "park", "water"], p=[0.6, 0.25, 0.15]
            )
    return Layout(size, v_roads, h_roads, zones)


def zone_map(layout):
    """(size, size) array of zone names covering the whole canvas."""
    size = layout.size
    h_edges = [0] + [c for c, _, _ in layout.h_roads] + [size]
    v_edges = [0] + [c for c, _, _ in layout.v_roads] + [size]
    names = np.empty((size, size), dtype=object)
    for r in range(len(h_edges) - 1):
        for c in range(len(v_edges) - 1):
            names[h_edges[r]:h_edges[r + 1], v_edges[c]:v_edges[c + 1]] = (
                layout.zones[(r, c)]
            )
    for center, width, major in layout.h_roads:
        lo, hi = max(center - width // 2, 0), min(center + (width + 1) // 2, size)
        names[lo:hi, :] = "major_road" if major else "road"
    for center, width, major in layout.v_roads:
        lo, hi = max(center - width // 2, 0), min(center + (width + 1) // 2, size)
        kind = "major_road" if major else "road"
        keep = names[:, lo:hi] != "major_road"
        names[:, lo:hi] = np.where(keep, kind, names[:, lo:hi])
    return names


def road_mask(layout):
    names = zone_map(layout)
    return (np.isin(names, ["road", "major_road"]) * 255).astype(np.uint8)


def render(layout, palette, noise=None, rng=None):
    names = zone_map(layout)
    img = np.zeros((layout.size, layout.size, 3), dtype=np.float64)
    for zone, color in palette.items():
        img[names == zone] = color
    if noise is not None:
        for zone, sigma in noise.items():
            sel = names == zone
            img[sel] += rng.normal(0.0, sigma, (int(sel.sum()), 3))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def render_aerial(layout, rng):
    img = render(layout, AERIAL_COLORS, AERIAL_NOISE, rng).astype(np.float64)
    names = zone_map(layout)
    # scatter building roofs over residential blocks
    for _ in range(int(rng.integers(25, 45))):
        y = int(rng.integers(0, layout.size - 12))
        x = int(rng.integers(0, layout.size - 12))
        h = int(rng.integers(5, 12))
        w = int(rng.integers(5, 12))
        block = names[y:y + h, x:x + w]
        if (block == "residential").mean() > 0.8:
            tone = rng.normal(150, 12)
            img[y:y + h, x:x + w] = np.clip(
                tone + rng.normal(0, 4, (h, w, 3)), 0, 255
            )
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def jitter_layout(layout, rng):
    """Perturb road geometry slightly, as an imperfect generator would."""

    def jitter_roads(roads):
        out = []
        for center, width, major in roads:
            out.append(
                (
                    int(np.clip(center + rng.integers(-2, 3), 5, layout.size - 5)),
                    int(np.clip(width + rng.integers(-1, 2), 4, 11)),
                    major,
                )
            )
        return out

    return Layout(
        layout.size,
        jitter_roads(layout.v_roads),
        jitter_roads(layout.h_roads),
        dict(layout.zones),
    )


def render_generated(layout, rng):
    jittered = jitter_layout(layout, rng)
    shift = rng.normal(0.0, 3.0, 3)
    palette = {
        k: tuple(np.clip(np.asarray(v, dtype=np.float64) + shift, 0, 255))
        for k, v in MAP_COLORS.items()
    }
    img = render(jittered, palette).astype(np.float64)
    img += rng.normal(0.0, 2.0, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def save(path, arr):
    if arr.ndim == 2:
        Image.fromarray(arr, mode="L").save(path)
    else:
        Image.fromarray(arr, mode="RGB").save(path)


def generate(out_dir, count, seed, size, prefix):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i in range(1, count + 1):
        rng = np.random.default_rng([seed, i])
        layout = make_layout(rng, size)
        stem = f"{prefix}{i:02d}"
        save(out_dir / f"{stem}_map.png", render(layout, MAP_COLORS))
        save(out_dir / f"{stem}_gen.png", render_generated(layout, rng))
        save(out_dir / f"{stem}_aerial.png", render_aerial(layout, rng))
        save(out_dir / f"{stem}_mask.png", road_mask(layout))
        written.append(stem)
    return written


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=5)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--prefix", default="scene")
    args = ap.parse_args()
    stems = generate(args.out, args.count, args.seed, args.size, args.prefix)
    print(f"wrote {len(stems)} scenes to {args.out}: {', '.join(stems)}")


if __name__ == "__main__":
    main()
