"""Raster primitives shared by the whole pipeline.

Conventions
-----------
- A gray image is a 2-D ``uint8`` array, shape (height, width), 0 = black.
- A binary mask is a 2-D ``bool`` array of the same shape, True = text.
- A probability map is a 2-D ``float32`` array with values in [0, 1].
- Coordinates are (x, y) with x = column, y = row; bounding boxes are
  inclusive (x_min, y_min, x_max, y_max).

All operations are pure functions; rasters are treated as immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from . import _kernels
from .errors import InvalidDims, InvalidParam

GrayImage = np.ndarray
BinaryMask = np.ndarray
ProbabilityMap = np.ndarray


@dataclass(frozen=True)
class Component:
    """One 8-connected foreground component."""

    label: int
    bbox: tuple[int, int, int, int]  # x_min, y_min, x_max, y_max, inclusive
    pixel_count: int

    @property
    def height(self) -> int:
        return self.bbox[3] - self.bbox[1] + 1

    @property
    def width(self) -> int:
        return self.bbox[2] - self.bbox[0] + 1


@dataclass(frozen=True)
class StructuringElement:
    """All-ones rectangular kernel; both sides must be odd."""

    kernel_w: int
    kernel_h: int

    def __post_init__(self):
        if self.kernel_w < 1 or self.kernel_h < 1:
            raise InvalidParam("kernel sides must be >= 1")
        if self.kernel_w % 2 == 0 or self.kernel_h % 2 == 0:
            raise InvalidParam("kernel sides must be odd")


def ensure_gray(img: np.ndarray) -> GrayImage:
    """Validate and coerce to a 2-D uint8 raster."""
    arr = np.asarray(img)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidDims(f"expected a nonempty 2-D raster, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        raise InvalidParam(f"gray image must be uint8, got {arr.dtype}")
    return arr


def ensure_mask(mask: np.ndarray) -> BinaryMask:
    """Validate and coerce to a 2-D bool raster."""
    arr = np.asarray(mask)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidDims(f"expected a nonempty 2-D mask, got shape {arr.shape}")
    if arr.dtype != np.bool_:
        raise InvalidParam(f"mask must be bool, got {arr.dtype}")
    return arr


def normalized(img: GrayImage) -> np.ndarray:
    """View of a uint8 image as float32 intensities in [0, 1]."""
    return ensure_gray(img).astype(np.float32) / 255.0


def odd_kernel_side(value: float) -> int:
    """Round a real-valued kernel side to the nearest odd integer, minimum 1.

    Exact midpoints (even values) round up.
    """
    if value <= 1.0:
        return 1
    return 2 * int(np.floor((value - 1.0) / 2.0 + 0.5)) + 1


def connected_components(mask: BinaryMask) -> list[Component]:
    """All 8-connected components, labeled 1..N in raster-scan encounter order."""
    mask = ensure_mask(mask)
    labels, n = _kernels.label_8(mask)
    if n == 0:
        return []
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    counts = np.bincount(ids, minlength=n + 1)
    x_min = np.full(n + 1, mask.shape[1], dtype=np.int64)
    x_max = np.full(n + 1, -1, dtype=np.int64)
    y_min = np.full(n + 1, mask.shape[0], dtype=np.int64)
    y_max = np.full(n + 1, -1, dtype=np.int64)
    np.minimum.at(x_min, ids, xs)
    np.maximum.at(x_max, ids, xs)
    np.minimum.at(y_min, ids, ys)
    np.maximum.at(y_max, ids, ys)
    return [
        Component(
            label=i,
            bbox=(int(x_min[i]), int(y_min[i]), int(x_max[i]), int(y_max[i])),
            pixel_count=int(counts[i]),
        )
        for i in range(1, n + 1)
    ]


def dilate(mask: BinaryMask, se: StructuringElement) -> BinaryMask:
    """Binary dilation by a centered rectangle; outside the image counts as background."""
    mask = ensure_mask(mask)
    if se.kernel_w == 1 and se.kernel_h == 1:
        return mask.copy()
    return _kernels.dilate_rect(mask, se.kernel_w, se.kernel_h)


def resize_gray(img: GrayImage, out_w: int, out_h: int) -> GrayImage:
    """Bilinear resize; values rounded back to uint8."""
    img = ensure_gray(img)
    if out_w < 1 or out_h < 1:
        raise InvalidDims("target dimensions must be >= 1")
    if (out_h, out_w) == img.shape:
        return img.copy()
    out = _kernels.resize_bilinear(img.astype(np.float64), out_w, out_h)
    return np.rint(out).astype(np.uint8)


def resize_prob(pmap: ProbabilityMap, out_w: int, out_h: int) -> ProbabilityMap:
    """Bilinear resize of a probability map; output stays within [0, 1]."""
    if out_w < 1 or out_h < 1:
        raise InvalidDims("target dimensions must be >= 1")
    if (out_h, out_w) == pmap.shape:
        return np.asarray(pmap, dtype=np.float32).copy()
    out = _kernels.resize_bilinear(np.asarray(pmap, dtype=np.float64), out_w, out_h)
    return out.astype(np.float32)


def resize_mask(mask: BinaryMask, out_w: int, out_h: int) -> BinaryMask:
    """Nearest-neighbor resize; output is strictly boolean."""
    mask = ensure_mask(mask)
    if out_w < 1 or out_h < 1:
        raise InvalidDims("target dimensions must be >= 1")
    if (out_h, out_w) == mask.shape:
        return mask.copy()
    return _kernels.resize_nearest(mask, out_w, out_h)


def load_gray(path: str | Path) -> GrayImage:
    """Read an image file as 8-bit grayscale."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_gray(img: GrayImage, path: str | Path) -> None:
    Image.fromarray(ensure_gray(img), mode="L").save(path)


def load_mask(path: str | Path) -> BinaryMask:
    """Read a mask PNG; any value > 127 counts as text."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8) > 127


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as a single-channel PNG with values {0, 255}."""
    arr = np.where(ensure_mask(mask), np.uint8(255), np.uint8(0))
    Image.fromarray(arr, mode="L").save(path)
