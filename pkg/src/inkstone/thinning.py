"""Morphological skeletonization by two-subiteration parallel thinning.

Each pass encodes a pixel's 8-neighborhood as a byte (east neighbor =
bit 0, then counterclockwise) and deletes pixels flagged by one of two
lookup tables. A pixel is deletable when its neighborhood crossing
number is one, between two and three of its edge-pair groups are
occupied, and a direction condition (alternating between the two
subiterations) holds. Deletions within a subiteration are applied
simultaneously; iteration stops at a fixed point, leaving an
8-connected, unit-width skeleton.
"""

from __future__ import annotations

import numpy as np

from .raster import BinaryMask, ensure_mask

# neighbor bit layout: x1..x8 = E, NE, N, NW, W, SW, S, SE -> bits 0..7
_OFFSETS = [(0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1)]


def _build_luts() -> tuple[np.ndarray, np.ndarray]:
    odd = np.zeros(256, dtype=bool)
    even = np.zeros(256, dtype=bool)
    for code in range(256):
        x = [(code >> b) & 1 for b in range(8)]  # x[0] = x1 ... x[7] = x8

        def n(i):  # 1-based, wraps
            return x[(i - 1) % 8]

        crossing = sum(
            (not n(i)) and (n(i + 1) or n(i + 2)) for i in (1, 3, 5, 7)
        )
        n1 = sum(n(2 * k - 1) or n(2 * k) for k in (1, 2, 3, 4))
        n2 = sum(n(2 * k) or n(2 * k + 1) for k in (1, 2, 3, 4))
        if crossing != 1 or not (2 <= min(n1, n2) <= 3):
            continue
        odd[code] = not ((n(2) or n(3) or not n(8)) and n(1))
        even[code] = not ((n(6) or n(7) or not n(4)) and n(5))
    return odd, even


_LUT_ODD, _LUT_EVEN = _build_luts()


def _neighbor_codes(img: np.ndarray) -> np.ndarray:
    """Byte code of each pixel's 8-neighborhood (outside = background)."""
    h, w = img.shape
    padded = np.zeros((h + 2, w + 2), dtype=np.uint8)
    padded[1:-1, 1:-1] = img
    codes = np.zeros((h, w), dtype=np.uint8)
    for bit, (dy, dx) in enumerate(_OFFSETS):
        codes |= padded[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx] << bit
    return codes


def skeletonize(mask: BinaryMask, max_iter: int | None = None) -> BinaryMask:
    """Thin a mask to its skeleton; optionally cap the iteration count."""
    mask = ensure_mask(mask)
    img = mask.astype(np.uint8)
    remaining = -1 if max_iter is None else max_iter
    while remaining != 0:
        before = int(img.sum())
        for lut in (_LUT_ODD, _LUT_EVEN):
            deletable = lut[_neighbor_codes(img)] & (img == 1)
            img[deletable] = 0
        if int(img.sum()) == before:
            break
        remaining -= 1
    return img.astype(bool)
