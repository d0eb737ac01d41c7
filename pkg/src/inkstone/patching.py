"""Character-context-aware patch extraction.

Three steps, each driven by the connected components of a text mask:

1. Robust mean character height: component heights are trimmed to the
   interquartile range and averaged, so diacritic-sized specks and large
   decorative carvings cannot skew the estimate.
2. Foreground/background partition: component bounding boxes are
   rasterized and dilated twice with height-proportional rectangular
   kernels (the second pass with the kernel sides swapped), closing the
   gaps between characters; the complement is background.
3. Multi-scale sampling: anchor pixels are drawn uniformly inside each
   region and square patches of side k * mean_height (k uniform in a
   configured range) are cropped around them and resized to a fixed side.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMask, InvalidDims, InvalidParam
from .raster import (
    BinaryMask,
    Component,
    GrayImage,
    StructuringElement,
    dilate,
    ensure_gray,
    ensure_mask,
    odd_kernel_side,
    resize_gray,
    resize_mask,
)


@dataclass(frozen=True)
class HeightStats:
    """IQR-trimmed statistics of component heights."""

    q1: float
    q3: float
    iqr: float
    mean_iqr_height: float
    n_components: int


@dataclass(frozen=True)
class DilationConfig:
    """Scale factors for the two-stage region dilation kernels."""

    s1: float = 0.3
    s2: float = 0.9

    def __post_init__(self):
        if self.s1 <= 0 or self.s2 <= 0:
            raise InvalidParam("dilation scales must be positive")


@dataclass(frozen=True)
class RegionPartition:
    """Text-context region and its complement."""

    foreground: BinaryMask
    background: BinaryMask
    area_fg: int
    area_bg: int
    area_total: int


class Region(enum.Enum):
    FOREGROUND = "foreground"
    BACKGROUND = "background"


@dataclass(frozen=True)
class SamplingConfig:
    """Patch sampling knobs; defaults reproduce the reference protocol."""

    r_base: float = 0.5        # expected patches per valid component
    n_min: int = 10            # clamp floor for foreground patches
    n_max: int = 250           # clamp ceiling for foreground patches
    n_bg_max: int = 75         # background patches for an all-background image
    k_min: float = 4.0         # patch side multipliers: side = k * mean height
    k_max: float = 12.0
    q1_fence: float = 1.5      # IQR fence factors for valid components
    q2_fence: float = 1.5
    out_side: int = 512        # patches are resized to out_side x out_side
    rng_seed: int = 0

    def __post_init__(self):
        if not (0 < self.k_min <= self.k_max):
            raise InvalidParam("require 0 < k_min <= k_max")
        if self.n_min > self.n_max:
            raise InvalidParam("require n_min <= n_max")
        if min(self.n_min, self.n_max, self.n_bg_max) < 0:
            raise InvalidParam("patch counts must be >= 0")
        if self.out_side < 1:
            raise InvalidParam("out_side must be >= 1")


@dataclass(frozen=True)
class PatchSpec:
    """One sampled square crop, fully inside the image."""

    x: int
    y: int
    side: int
    region: Region


@dataclass
class PatchBatch:
    """Sampled patches with their resized images and optional labels."""

    specs: list[PatchSpec] = field(default_factory=list)
    images: list[GrayImage] = field(default_factory=list)
    labels: list[BinaryMask] | None = None


def height_stats(components: list[Component]) -> HeightStats:
    """Quartiles of component heights and the mean over the [q1, q3] band.

    Quartiles use linear interpolation between closest ranks; the band is
    inclusive at both ends, so a constant height set keeps every component.
    Two distinct heights are the one case where interpolation leaves the
    band empty; the mean then falls back to all heights.
    """
    if not components:
        raise EmptyMask("height statistics need at least one component")
    heights = np.array([c.height for c in components], dtype=np.float64)
    q1, q3 = np.percentile(heights, [25.0, 75.0], method="linear")
    kept = heights[(heights >= q1) & (heights <= q3)]
    if kept.size == 0:
        kept = heights
    return HeightStats(
        q1=float(q1),
        q3=float(q3),
        iqr=float(q3 - q1),
        mean_iqr_height=float(np.mean(kept)),
        n_components=len(components),
    )


def dilation_kernels(mean_height: float, cfg: DilationConfig) -> tuple[StructuringElement, StructuringElement]:
    """Stage-1 kernel (s1*h tall, s2*h wide) and stage-2 with sides swapped."""
    kh = odd_kernel_side(cfg.s1 * mean_height)
    kw = odd_kernel_side(cfg.s2 * mean_height)
    return (
        StructuringElement(kernel_w=kw, kernel_h=kh),
        StructuringElement(kernel_w=kh, kernel_h=kw),
    )


def rasterize_bboxes(components: list[Component], img_w: int, img_h: int) -> BinaryMask:
    """Paint component bounding boxes onto a blank mask."""
    mask = np.zeros((img_h, img_w), dtype=bool)
    for c in components:
        x0, y0, x1, y1 = c.bbox
        mask[y0:y1 + 1, x0:x1 + 1] = True
    return mask


def partition_regions(
    components: list[Component],
    h_stats: HeightStats,
    cfg: DilationConfig,
    img_dims: tuple[int, int],
) -> RegionPartition:
    """Two-stage dilation of the bounding-box raster; complement = background."""
    if not components:
        raise EmptyMask("region partition needs at least one component")
    img_w, img_h = img_dims
    se1, se2 = dilation_kernels(h_stats.mean_iqr_height, cfg)
    fg = dilate(dilate(rasterize_bboxes(components, img_w, img_h), se1), se2)
    area_fg = int(np.count_nonzero(fg))
    return RegionPartition(
        foreground=fg,
        background=~fg,
        area_fg=area_fg,
        area_bg=fg.size - area_fg,
        area_total=fg.size,
    )


def valid_components(
    components: list[Component],
    h_stats: HeightStats,
    cfg: SamplingConfig,
) -> list[Component]:
    """Components whose height lies inside the IQR fence, order preserved."""
    lo = h_stats.q1 - cfg.q1_fence * h_stats.iqr
    hi = h_stats.q3 + cfg.q2_fence * h_stats.iqr
    return [c for c in components if lo <= c.height <= hi]


def patch_counts(n_valid: int, partition: RegionPartition, cfg: SamplingConfig) -> tuple[int, int]:
    """Clamped foreground count and area-proportional background count.

    Foreground: round(n_valid * r_base) clamped to [n_min, n_max] (half-up
    rounding). Background: floor(area_bg / area_total * n_bg_max).
    """
    if partition.area_total <= 0:
        raise InvalidDims("partition covers no pixels")
    raw = int(np.floor(n_valid * cfg.r_base + 0.5))
    n_fg = max(cfg.n_min, min(raw, cfg.n_max))
    n_bg = int(np.floor(partition.area_bg / partition.area_total * cfg.n_bg_max))
    return n_fg, n_bg


def _clamped_square(ax: int, ay: int, side: int, img_w: int, img_h: int) -> tuple[int, int]:
    """Top-left corner of a side-sized square centered on the anchor,
    shifted minimally to fit inside the image."""
    x = min(max(ax - side // 2, 0), img_w - side)
    y = min(max(ay - side // 2, 0), img_h - side)
    return x, y


def _draw_region_specs(
    rng: np.random.Generator,
    region_mask: BinaryMask,
    count: int,
    region: Region,
    mean_height: float,
    cfg: SamplingConfig,
) -> list[PatchSpec]:
    flat = np.flatnonzero(region_mask)
    if flat.size == 0 or count <= 0:
        # an empty region simply contributes no patches
        return []
    img_h, img_w = region_mask.shape
    max_side = min(img_w, img_h)
    picks = flat[rng.integers(0, flat.size, size=count)]
    ks = rng.uniform(cfg.k_min, cfg.k_max, size=count)
    specs = []
    for pick, k in zip(picks, ks):
        ay, ax = divmod(int(pick), img_w)
        side = max(1, min(int(np.floor(k * mean_height + 0.5)), max_side))
        x, y = _clamped_square(ax, ay, side, img_w, img_h)
        specs.append(PatchSpec(x=x, y=y, side=side, region=region))
    return specs


def extract_patch(img: GrayImage, spec: PatchSpec, out_side: int) -> GrayImage:
    crop = img[spec.y:spec.y + spec.side, spec.x:spec.x + spec.side]
    return resize_gray(crop, out_side, out_side)


def extract_label(gt: BinaryMask, spec: PatchSpec, out_side: int) -> BinaryMask:
    crop = gt[spec.y:spec.y + spec.side, spec.x:spec.x + spec.side]
    return resize_mask(crop, out_side, out_side)


def sample_patches(
    img: GrayImage,
    gt: BinaryMask | None,
    partition: RegionPartition,
    h_stats: HeightStats,
    cfg: SamplingConfig,
    n_valid: int | None = None,
) -> PatchBatch:
    """Draw the foreground and background patch sets for one image.

    Anchors are drawn uniformly (with replacement) from each region's
    pixels; each patch side is an independent uniform k in
    [k_min, k_max] times the mean character height, clamped to the
    smaller image dimension. Deterministic for a fixed rng_seed:
    foreground anchors, foreground sides, background anchors, background
    sides are consumed from the generator in that order.

    ``n_valid`` defaults to the total component count when not supplied.
    """
    img = ensure_gray(img)
    if gt is not None:
        gt = ensure_mask(gt)
        if gt.shape != img.shape:
            raise InvalidDims("ground truth shape differs from image")
    if partition.foreground.shape != img.shape:
        raise InvalidDims("partition shape differs from image")
    if n_valid is None:
        n_valid = h_stats.n_components
    n_fg, n_bg = patch_counts(n_valid, partition, cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.rng_seed))
    specs = _draw_region_specs(rng, partition.foreground, n_fg, Region.FOREGROUND,
                               h_stats.mean_iqr_height, cfg)
    specs += _draw_region_specs(rng, partition.background, n_bg, Region.BACKGROUND,
                                h_stats.mean_iqr_height, cfg)
    batch = PatchBatch(specs=specs, labels=None if gt is None else [])
    for spec in specs:
        batch.images.append(extract_patch(img, spec, cfg.out_side))
        if gt is not None:
            batch.labels.append(extract_label(gt, spec, cfg.out_side))
    return batch


def grid_positions(dim: int, side: int, stride: int) -> list[int]:
    """Stride-spaced offsets along one axis, last one snapped to the edge."""
    last = max(dim - side, 0)
    xs = list(range(0, last + 1, max(stride, 1)))
    if xs[-1] != last:
        xs.append(last)
    return xs


def fixed_grid_patches(img: GrayImage, size: int, overlap_fraction: float,
                       out_side: int | None = None) -> PatchBatch:
    """Fixed-size tiling with fractional overlap, for baseline comparisons.

    The grid is snapped to the right/bottom edges so coverage is total;
    if the image is smaller than ``size`` in either dimension the tile
    side shrinks to the smaller image side.
    """
    img = ensure_gray(img)
    if not (0.0 <= overlap_fraction < 1.0):
        raise InvalidParam("overlap_fraction must be in [0, 1)")
    if size < 1:
        raise InvalidParam("size must be >= 1")
    img_h, img_w = img.shape
    side = min(size, img_w, img_h)
    stride = max(1, int(np.floor(side * (1.0 - overlap_fraction) + 0.5)))
    batch = PatchBatch()
    for y in grid_positions(img_h, side, stride):
        for x in grid_positions(img_w, side, stride):
            spec = PatchSpec(x=x, y=y, side=side, region=Region.FOREGROUND)
            batch.specs.append(spec)
            batch.images.append(extract_patch(img, spec, out_side or side))
    return batch
