"""Deterministic synthetic raster datasets for tests and benchmarks.

Each category owns one tile pattern (stripes / checker / gradient) with a
palette far from every other category's palette; images within a category are
brightness-shifted copies with different block-row counts. That construction
keeps within-category block distances small, cross-category distances large,
and within-category nearness scores strictly positive (no two images of a
category split tolerance classes evenly, because their block counts differ).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

PATTERNS = ("stripes", "checker", "gradient")

# (pattern, bright color, dark color) per category id. Channel means sit on
# the default three-term bank centers (1/6, 1/2, 5/6) as per-category
# permutations, so any two of the first categories disagree on all three
# channels and their fuzzified block descriptions stay far apart (measured
# minimum cross-category distance ~0.51 under the default bank, versus ~0.13
# maximum within a category across the generator's brightness range).
_H, _M, _L = 5.0 / 6.0, 0.5, 1.0 / 6.0


def _palette(r, g, b, contrast):
    return ((r + contrast, g + contrast, b + contrast),
            (r - contrast, g - contrast, b - contrast))


CATEGORY_STYLES = (
    ("stripes", *_palette(_H, _L, _M, 0.15)),
    ("checker", *_palette(_M, _H, _L, 0.10)),
    ("gradient", *_palette(_L, _M, _H, 0.15)),
    ("stripes", *_palette(_H, _M, _L, 0.10)),
    ("checker", *_palette(_L, _H, _M, 0.15)),
    ("gradient", *_palette(_M, _L, _H, 0.10)),
    ("stripes", *_palette(_H, _H, _L, 0.12)),
    ("checker", *_palette(_L, _H, _H, 0.12)),
    ("gradient", *_palette(_H, _L, _H, 0.12)),
    ("stripes", *_palette(_L, _L, _H, 0.14)),
)


def make_tile(pattern: str, tile: int, color_a, color_b) -> np.ndarray:
    """One tile of the pattern as a (tile, tile, 3) float raster in [0, 1]."""
    if tile < 2:
        raise ValueError(f"tile must be at least 2, got {tile}")
    a = np.asarray(color_a, dtype=np.float64)
    b = np.asarray(color_b, dtype=np.float64)
    out = np.empty((tile, tile, 3), dtype=np.float64)
    half = tile // 2
    if pattern == "stripes":
        rows = (np.arange(tile) // half) % 2
        out[:] = np.where(rows[:, None, None] == 0, a, b)
    elif pattern == "checker":
        rr = (np.arange(tile) // half) % 2
        cc = (np.arange(tile) // half) % 2
        cells = (rr[:, None] + cc[None, :]) % 2
        out[:] = np.where(cells[:, :, None] == 0, a, b)
    elif pattern == "gradient":
        t = np.linspace(0.0, 1.0, tile)[:, None, None]
        out[:] = (1.0 - t) * a + t * b
    else:
        raise ValueError(f"unknown pattern {pattern!r} "
                         f"(choose from {', '.join(PATTERNS)})")
    return out


def make_raster(pattern: str, tile: int, rows: int, cols: int, color_a,
                color_b, brightness: float = 0.0,
                row_ramp: float = 0.0) -> np.ndarray:
    """Tile the pattern rows x cols times, with a per-tile-row brightness ramp.

    Every tile row is internally uniform (all its tiles identical), so block
    partitions aligned to the tile grid yield one distinct description per row.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    base = make_tile(pattern, tile, color_a, color_b)
    strip = np.tile(base, (1, cols, 1))
    bands = []
    for r in range(rows):
        bands.append(np.clip(strip + brightness + row_ramp * r, 0.0, 1.0))
    return np.concatenate(bands, axis=0)


def raster_to_bytes(raster: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(raster * 255.0), 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class GeneratedImage:
    path: Path
    image_id: int
    category: int
    rows: int
    cols: int


def generate_dataset(root, categories: int = 3, per_category: int = 10,
                     seed: int = 0, tile: int = 8, width_blocks: int = 4,
                     base_rows: int = 12, pattern: str = "mixed",
                     brightness_step: float = 0.004,
                     row_ramp: float = 0.002) -> list[GeneratedImage]:
    """Write a labeled PNG dataset under root; returns the manifest.

    Image ids follow the hundred-per-category convention (id = 100*category
    + slot); a labels.csv is also written. Each image in a category gets a
    distinct block-row count (base_rows + shuffled slot) and a distinct
    brightness offset, both derived from the seed.
    """
    from PIL import Image

    if not 1 <= categories <= len(CATEGORY_STYLES):
        raise ValueError(f"categories must be in 1..{len(CATEGORY_STYLES)}")
    if per_category < 1:
        raise ValueError("per_category must be positive")
    if pattern != "mixed" and pattern not in PATTERNS:
        raise ValueError(f"pattern must be 'mixed' or one of "
                         f"{', '.join(PATTERNS)}")
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    manifest: list[GeneratedImage] = []
    rows_csv = []
    for cat in range(categories):
        style_pattern, color_a, color_b = CATEGORY_STYLES[cat]
        if pattern != "mixed":
            style_pattern = pattern
        row_order = rng.permutation(per_category)
        for slot in range(per_category):
            image_id = 100 * cat + slot
            n_rows = base_rows + int(row_order[slot])
            brightness = (slot - (per_category - 1) / 2.0) * brightness_step
            raster = make_raster(style_pattern, tile, n_rows, width_blocks,
                                 color_a, color_b, brightness=brightness,
                                 row_ramp=row_ramp)
            path = root / f"{image_id}.png"
            Image.fromarray(raster_to_bytes(raster)).save(path)
            manifest.append(GeneratedImage(path, image_id, cat, n_rows,
                                           width_blocks))
            rows_csv.append((path.name, cat))
    with open(root / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["filename", "category"])
        writer.writerows(rows_csv)
    return manifest
