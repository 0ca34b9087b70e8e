"""Image ingestion, block partitioning, probe functions, fuzzification.

Every image becomes a list of perceptual objects: one per full block, each
carrying a raw feature vector (one value per probe, all in [0, 1]) and a pair
of fuzzified description vectors (lower/upper term grades, equal for type-1
banks). All emitted values are canonically rounded to 9 significant digits so
that descriptions survive text serialization bit-exactly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionMismatch, ImageTooSmall, UnknownProbe
from .membership import LinguisticBank, build_bank


def fmt9(v: float) -> str:
    """Canonical text form of a real value: 9 significant digits."""
    return f"{float(v):.9g}"


def round9(values):
    """Round value(s) to 9 significant decimal digits (idempotent)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        return float(fmt9(float(arr)))
    flat = np.fromiter((float(fmt9(v)) for v in arr.ravel()),
                       dtype=np.float64, count=arr.size)
    return flat.reshape(arr.shape)


def to_rgb01(pixels) -> np.ndarray:
    """Normalize a raster to float64 RGB with channels in [0, 1].

    Accepts HxW grayscale or HxWx3 color, integer (0..255) or float (0..1).
    """
    arr = np.asarray(pixels)
    if arr.ndim == 2:
        arr = np.stack([arr, arr, arr], axis=-1)
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise ValueError(f"expected HxW or HxWx3 raster, got shape {arr.shape}")
    arr = arr[:, :, :3]
    if np.issubdtype(arr.dtype, np.integer):
        out = arr.astype(np.float64) / 255.0
    else:
        out = arr.astype(np.float64)
    return np.clip(out, 0.0, 1.0)


def gray01(rgb: np.ndarray) -> np.ndarray:
    """Grayscale as the plain channel average (r + g + b)/3."""
    return (rgb[:, :, 0] + rgb[:, :, 1] + rgb[:, :, 2]) / 3.0


@dataclass(frozen=True)
class BlockGrid:
    image_id: object
    image_width: int
    image_height: int
    block_width: int
    block_height: int
    rows: int
    cols: int

    @property
    def block_count(self) -> int:
        return self.rows * self.cols


def partition_image(pixels, block_width: int, block_height: int,
                    image_id=None) -> tuple[BlockGrid, list[np.ndarray]]:
    """Split a raster into disjoint full blocks, row-major; drop partial strips."""
    if block_width < 1 or block_height < 1:
        raise ValueError(f"block size must be positive, got "
                         f"{block_width}x{block_height}")
    rgb = to_rgb01(pixels)
    height, width = rgb.shape[:2]
    cols = width // block_width
    rows = height // block_height
    if rows < 1 or cols < 1:
        raise ImageTooSmall(
            f"image {width}x{height} px cannot fit one {block_width}x"
            f"{block_height} block")
    grid = BlockGrid(image_id, width, height, block_width, block_height,
                     rows, cols)
    blocks = []
    for r in range(rows):
        for c in range(cols):
            blocks.append(rgb[r * block_height:(r + 1) * block_height,
                              c * block_width:(c + 1) * block_width, :])
    return grid, blocks


# --- probe functions --------------------------------------------------------

EDGE_THRESHOLD = 0.2

_SOBEL_NOTE = """3x3 Sobel responses on [0,1] grayscale with replicate
padding; a pixel counts as edge when hypot(gx, gy) > 0.2."""


def _probe_mean_gray(block: np.ndarray) -> float:
    return float(np.mean(gray01(block)))


def _probe_channel_mean(channel: int) -> Callable[[np.ndarray], float]:
    def probe(block: np.ndarray) -> float:
        return float(np.mean(block[:, :, channel]))
    return probe


def _probe_gray_std(block: np.ndarray) -> float:
    # population stddev of gray, normalized by the maximum attainable
    # stddev 127.5/255 (a half-split of extremes), clamped
    return min(float(np.std(gray01(block))) * 2.0, 1.0)


def _probe_edge_density(block: np.ndarray) -> float:
    g = np.pad(gray01(block), 1, mode="edge")
    gx = ((g[:-2, 2:] + 2.0 * g[1:-1, 2:] + g[2:, 2:])
          - (g[:-2, :-2] + 2.0 * g[1:-1, :-2] + g[2:, :-2]))
    gy = ((g[2:, :-2] + 2.0 * g[2:, 1:-1] + g[2:, 2:])
          - (g[:-2, :-2] + 2.0 * g[:-2, 1:-1] + g[:-2, 2:]))
    magnitude = np.hypot(gx, gy)
    return float(np.mean(magnitude > EDGE_THRESHOLD))


PROBE_REGISTRY: dict[str, Callable[[np.ndarray], float]] = {
    "mean_gray": _probe_mean_gray,
    "red_mean": _probe_channel_mean(0),
    "green_mean": _probe_channel_mean(1),
    "blue_mean": _probe_channel_mean(2),
    "gray_std": _probe_gray_std,
    "edge_density": _probe_edge_density,
}

DEFAULT_PROBES: tuple[str, ...] = (
    "mean_gray", "red_mean", "green_mean", "blue_mean", "gray_std",
    "edge_density",
)


def extract_features(block, probe_set: Sequence[str]) -> np.ndarray:
    """Evaluate each probe on one pixel block; values are in [0, 1]."""
    blk = to_rgb01(block)
    if blk.size == 0:
        raise ValueError("empty block")
    out = np.empty(len(probe_set), dtype=np.float64)
    for i, name in enumerate(probe_set):
        fn = PROBE_REGISTRY.get(name)
        if fn is None:
            raise UnknownProbe(f"probe {name!r} is not registered "
                               f"(known: {', '.join(sorted(PROBE_REGISTRY))})")
        out[i] = fn(blk)
    return np.clip(out, 0.0, 1.0)


def fuzzify(raw_features, bank: LinguisticBank) -> tuple[np.ndarray, np.ndarray]:
    """Grade features against every bank term, feature-major concatenation."""
    return bank.fuzzify(raw_features)


# --- description configuration ----------------------------------------------


@dataclass(frozen=True)
class BankSpec:
    """Declarative linguistic-bank configuration (serializable)."""

    family: str = "beta"
    m: int = 3
    it2_spread: float | None = 0.1
    alpha: float = 2.0
    beta: float = 2.0
    literal_centers: bool = False

    def build(self) -> LinguisticBank:
        return build_bank(self.m, family=self.family,
                          it2_spread=self.it2_spread, alpha=self.alpha,
                          beta=self.beta, literal_centers=self.literal_centers)

    def canonical(self) -> str:
        spread = "none" if self.it2_spread is None else fmt9(self.it2_spread)
        return (f"bank={self.family},m={self.m},spread={spread},"
                f"alpha={fmt9(self.alpha)},beta={fmt9(self.beta)},"
                f"literal={int(self.literal_centers)}")

    def with_spread(self, it2_spread: float | None) -> "BankSpec":
        return BankSpec(self.family, self.m, it2_spread, self.alpha,
                        self.beta, self.literal_centers)


@dataclass(frozen=True)
class DescribeConfig:
    """Everything that determines a description: block size, probes, bank."""

    block_width: int = 13
    block_height: int = 19
    probes: tuple[str, ...] = DEFAULT_PROBES
    bank: BankSpec = field(default_factory=BankSpec)

    def __post_init__(self):
        if self.block_width < 1 or self.block_height < 1:
            raise ValueError("block dimensions must be positive")
        if not self.probes:
            raise ValueError("at least one probe is required")
        for name in self.probes:
            if name not in PROBE_REGISTRY:
                raise UnknownProbe(f"probe {name!r} is not registered")

    def canonical(self) -> str:
        return (f"fmt=1;block={self.block_width}x{self.block_height};"
                f"probes={','.join(self.probes)};{self.bank.canonical()}")

    def fingerprint(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()[:16]

    @property
    def description_length(self) -> int:
        return len(self.probes) * self.bank.m


@dataclass(frozen=True)
class ObjectDescription:
    """One block's identity, raw features, and fuzzified description pair."""

    image_id: object
    block_row: int
    block_col: int
    raw_features: tuple[float, ...]
    fuzzy_lower: tuple[float, ...]
    fuzzy_upper: tuple[float, ...]

    @property
    def object_id(self) -> tuple:
        return (self.image_id, self.block_row, self.block_col)

    def vector(self, envelope: str) -> tuple[float, ...]:
        if envelope == "lower":
            return self.fuzzy_lower
        if envelope == "upper":
            return self.fuzzy_upper
        raise ValueError(f"envelope must be 'lower' or 'upper', got {envelope!r}")

    def retag(self, image_id) -> "ObjectDescription":
        return ObjectDescription(image_id, self.block_row, self.block_col,
                                 self.raw_features, self.fuzzy_lower,
                                 self.fuzzy_upper)


@dataclass(frozen=True)
class PerceptualSystem:
    """A finite set of described objects under one probe set."""

    objects: tuple[ObjectDescription, ...]
    probe_set: tuple[str, ...]

    def __post_init__(self):
        l = len(self.probe_set)
        for obj in self.objects:
            if len(obj.raw_features) != l:
                raise DimensionMismatch(
                    f"object {obj.object_id} has {len(obj.raw_features)} raw "
                    f"features, probe set has {l}")
            if len(obj.fuzzy_lower) != len(obj.fuzzy_upper):
                raise DimensionMismatch(
                    f"object {obj.object_id} lower/upper lengths differ")

    @property
    def description_length(self) -> int:
        return len(self.probe_set)


def describe_image(pixels, config: DescribeConfig,
                   image_id=None) -> list[ObjectDescription]:
    """Partition, probe, and fuzzify one raster into ObjectDescriptions."""
    grid, blocks = partition_image(pixels, config.block_width,
                                   config.block_height, image_id=image_id)
    bank = config.bank.build()
    n = len(blocks)
    raws = np.empty((n, len(config.probes)), dtype=np.float64)
    for i, blk in enumerate(blocks):
        raws[i] = extract_features(blk, config.probes)
    raws = round9(raws)
    lower_flat, upper_flat = bank.fuzzify(raws.ravel())
    m = bank.term_count
    lower = round9(lower_flat.reshape(n, len(config.probes) * m))
    upper = round9(upper_flat.reshape(n, len(config.probes) * m))
    out = []
    for i in range(n):
        r, c = divmod(i, grid.cols)
        out.append(ObjectDescription(
            image_id, r, c,
            tuple(raws[i].tolist()),
            tuple(lower[i].tolist()),
            tuple(upper[i].tolist()),
        ))
    return out
