"""Two-stage self-refining binarization.

Stage 1 slides square windows of several scales over the image, predicts
each window with the patch backend, averages overlapping predictions
within a scale, and max-fuses across scales into a coarse probability
map; thresholding it yields a pseudo ground truth.

Stage 2 re-estimates the mean character height from the pseudo ground
truth, partitions the image into text-context and background regions,
deterministically tiles the text-context region with windows sized to
the character height, predicts those, and averages them through a
sum/count accumulator. Pixels never covered by a refinement window stay
at probability 0 (background). The pseudo ground truth is returned
unchanged when stage 1 finds no text at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import PatchBinarizer, Window
from .errors import DimMismatch, InvalidParam
from .patching import (
    DilationConfig,
    grid_positions,
    height_stats,
    partition_regions,
)
from .raster import (
    BinaryMask,
    GrayImage,
    ProbabilityMap,
    connected_components,
    ensure_gray,
    resize_gray,
    resize_prob,
)

DEFAULT_EPSILON = 1e-8


@dataclass(frozen=True)
class InferenceConfig:
    scales: tuple[int, ...] = (256, 384, 512, 768)
    stride_fraction: float = 0.5
    threshold: float = 0.5
    refine_k: float = 8.0
    refine_overlap: float = 0.5

    def __post_init__(self):
        if not self.scales or list(self.scales) != sorted(self.scales):
            raise InvalidParam("scales must be nonempty and ascending")
        if not (0.0 < self.stride_fraction <= 1.0):
            raise InvalidParam("stride_fraction must be in (0, 1]")
        if not (0.0 < self.threshold < 1.0):
            raise InvalidParam("threshold must be in (0, 1)")
        if self.refine_k <= 0:
            raise InvalidParam("refine_k must be positive")
        if not (0.0 <= self.refine_overlap < 1.0):
            raise InvalidParam("refine_overlap must be in [0, 1)")


@dataclass
class Accumulator:
    """Sum/count maps for averaging overlapping window predictions."""

    sum: np.ndarray
    count: np.ndarray
    epsilon: float = DEFAULT_EPSILON

    @classmethod
    def zeros(cls, h: int, w: int, epsilon: float = DEFAULT_EPSILON) -> "Accumulator":
        return cls(sum=np.zeros((h, w), dtype=np.float64),
                   count=np.zeros((h, w), dtype=np.int32),
                   epsilon=epsilon)

    def add(self, pred: ProbabilityMap, window: Window) -> None:
        x, y, side = window
        if pred.shape != (side, side):
            raise DimMismatch(f"prediction {pred.shape} does not fit window side {side}")
        self.sum[y:y + side, x:x + side] += pred.astype(np.float64)
        self.count[y:y + side, x:x + side] += 1

    def finalize(self) -> ProbabilityMap:
        """A / (C + epsilon): averaged where covered, ~0 where uncovered."""
        return (self.sum / (self.count + self.epsilon)).astype(np.float32)


@dataclass
class PipelineResult:
    p_coarse: ProbabilityMap
    b_pseudo: BinaryMask
    p_final: ProbabilityMap
    b_final: BinaryMask


def sliding_window(
    img: GrayImage,
    scale: int,
    stride_fraction: float,
    out_side: int | None = None,
) -> tuple[list[GrayImage], list[Window]]:
    """Square windows covering the whole image.

    Window side is the scale clamped to the smaller image dimension;
    stride is side * stride_fraction (the clamped side, so coverage
    survives clamping) with the final row/column snapped to the image
    edge. Crops are resized to ``out_side`` when given.
    """
    img = ensure_gray(img)
    if scale < 1:
        raise InvalidParam("scale must be >= 1")
    h, w = img.shape
    side = min(scale, h, w)
    stride = max(1, int(np.floor(side * stride_fraction + 0.5)))
    patches: list[GrayImage] = []
    windows: list[Window] = []
    for y in grid_positions(h, side, stride):
        for x in grid_positions(w, side, stride):
            crop = img[y:y + side, x:x + side]
            if out_side is not None and out_side != side:
                crop = resize_gray(crop, out_side, out_side)
            patches.append(crop)
            windows.append((x, y, side))
    return patches, windows


def merge_patch_pred(
    preds: list[ProbabilityMap],
    windows: list[Window],
    h: int,
    w: int,
) -> ProbabilityMap:
    """Average overlapping window predictions (plain sum/count) into an
    h x w map; uncovered pixels are 0. Predictions must already be at
    their window's native side."""
    sums = np.zeros((h, w), dtype=np.float64)
    counts = np.zeros((h, w), dtype=np.int32)
    for pred, (x, y, side) in zip(preds, windows):
        if pred.shape != (side, side):
            raise DimMismatch(f"prediction {pred.shape} vs window side {side}")
        sums[y:y + side, x:x + side] += pred.astype(np.float64)
        counts[y:y + side, x:x + side] += 1
    out = np.zeros((h, w), dtype=np.float64)
    np.divide(sums, counts, out=out, where=counts > 0)
    return out.astype(np.float32)


def _predict_windows(
    img: GrayImage,
    windows: list[Window],
    backend: PatchBinarizer,
    workers: int,
) -> list[ProbabilityMap]:
    """Crop, resize to the backend side, predict, resize back to native."""
    side_in = backend.input_side
    crops = []
    for (x, y, side) in windows:
        crop = img[y:y + side, x:x + side]
        if side_in is not None and side != side_in:
            crop = resize_gray(crop, side_in, side_in)
        crops.append(crop)
    preds = backend.predict_batch(crops, windows, workers=workers)
    out = []
    for pred, (x, y, side) in zip(preds, windows):
        if pred.shape != (side, side):
            pred = resize_prob(pred, side, side)
        out.append(pred)
    return out


def coarse_predict(
    img: GrayImage,
    backend: PatchBinarizer,
    cfg: InferenceConfig | None = None,
    workers: int = 1,
) -> tuple[ProbabilityMap, BinaryMask]:
    """Stage 1: multi-scale sliding windows, per-scale averaging, max-fusion."""
    img = ensure_gray(img)
    cfg = cfg or InferenceConfig()
    h, w = img.shape
    p_coarse = np.zeros((h, w), dtype=np.float32)
    for scale in cfg.scales:
        _, windows = sliding_window(img, scale, cfg.stride_fraction)
        preds = _predict_windows(img, windows, backend, workers)
        merged = merge_patch_pred(preds, windows, h, w)
        np.maximum(p_coarse, merged, out=p_coarse)
    return p_coarse, p_coarse > cfg.threshold


def refine(
    img: GrayImage,
    b_pseudo: BinaryMask,
    backend: PatchBinarizer,
    cfg: InferenceConfig | None = None,
    dilation_cfg: DilationConfig | None = None,
    workers: int = 1,
    epsilon: float = DEFAULT_EPSILON,
) -> tuple[ProbabilityMap, BinaryMask]:
    """Stage 2: character-height-sized tiling of the text-context region.

    Returns (p_final, b_final); falls back to the pseudo ground truth when
    it has no components.
    """
    img = ensure_gray(img)
    cfg = cfg or InferenceConfig()
    dilation_cfg = dilation_cfg or DilationConfig()
    h, w = img.shape
    components = connected_components(b_pseudo)
    if not components:
        return b_pseudo.astype(np.float32), b_pseudo.copy()
    stats = height_stats(components)
    partition = partition_regions(components, stats, dilation_cfg, (w, h))
    side = max(1, min(int(np.floor(cfg.refine_k * stats.mean_iqr_height + 0.5)), min(h, w)))
    stride = max(1, int(np.floor(side * (1.0 - cfg.refine_overlap) + 0.5)))
    windows = tile_foreground(partition.foreground, side, stride)
    acc = Accumulator.zeros(h, w, epsilon)
    preds = _predict_windows(img, windows, backend, workers)
    for pred, window in zip(preds, windows):
        acc.add(pred, window)
    p_final = acc.finalize()
    return p_final, p_final > cfg.threshold


def tile_foreground(foreground: BinaryMask, side: int, stride: int) -> list[Window]:
    """Grid windows restricted to those containing text-context pixels.

    The grid is edge-snapped, so every foreground pixel is covered by at
    least one kept window.
    """
    h, w = foreground.shape
    # integral image gives O(1) any-foreground tests per window
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(foreground, axis=0), axis=1, out=ii[1:, 1:])
    windows: list[Window] = []
    for y in grid_positions(h, side, stride):
        for x in grid_positions(w, side, stride):
            covered = (ii[y + side, x + side] - ii[y, x + side]
                       - ii[y + side, x] + ii[y, x])
            if covered > 0:
                windows.append((x, y, side))
    return windows


def run_pipeline(
    img: GrayImage,
    backend: PatchBinarizer,
    cfg: InferenceConfig | None = None,
    dilation_cfg: DilationConfig | None = None,
    workers: int = 1,
) -> PipelineResult:
    """Both stages; deterministic for fixed inputs and config."""
    cfg = cfg or InferenceConfig()
    p_coarse, b_pseudo = coarse_predict(img, backend, cfg, workers)
    p_final, b_final = refine(img, b_pseudo, backend, cfg, dilation_cfg, workers)
    return PipelineResult(p_coarse=p_coarse, b_pseudo=b_pseudo,
                          p_final=p_final, b_final=b_final)


def binarize(
    img: GrayImage,
    backend: PatchBinarizer,
    cfg: InferenceConfig | None = None,
    dilation_cfg: DilationConfig | None = None,
    workers: int = 1,
) -> BinaryMask:
    """End-to-end binarization; returns the final mask."""
    return run_pipeline(img, backend, cfg, dilation_cfg, workers).b_final
