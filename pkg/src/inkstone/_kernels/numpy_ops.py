"""Numpy implementations of the raster kernels.

This is the fallback lane used when the compiled extension is not built.
Both lanes must produce bit-identical output; `tests/test_kernel_parity.py`
enforces this on random inputs.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage


def label_8(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected component labeling.

    Returns an int32 label map (0 = background) and the number of
    components. Labels are 1..N in order of first encounter during a
    row-major scan.
    """
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=bool))
    if n == 0:
        return labels.astype(np.int32), 0
    flat = labels.ravel()
    nz = np.flatnonzero(flat)
    # remap scipy's label ids to first-encounter scan order
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat[nz], nz)
    order = np.argsort(first[1:], kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return remap[labels], n


def dilate_rect(mask: np.ndarray, kernel_w: int, kernel_h: int) -> np.ndarray:
    """Binary dilation by a centered all-ones kernel_w x kernel_h rectangle.

    Pixels outside the image are treated as background. A pixel is set iff
    any input pixel inside its window is set, i.e. the windowed true-count
    is positive; the count comes from an integral image, which keeps the
    operation O(n) for any kernel size.
    """
    h, w = mask.shape
    rx, ry = kernel_w // 2, kernel_h // 2
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(mask, axis=0), axis=1, out=ii[1:, 1:])
    y0 = np.clip(np.arange(h) - ry, 0, h)
    y1 = np.clip(np.arange(h) + ry + 1, 0, h)
    x0 = np.clip(np.arange(w) - rx, 0, w)
    x1 = np.clip(np.arange(w) + rx + 1, 0, w)
    counts = (ii[y1[:, None], x1[None, :]] - ii[y0[:, None], x1[None, :]]
              - ii[y1[:, None], x0[None, :]] + ii[y0[:, None], x0[None, :]])
    return counts > 0


def _src_coords(n_out: int, n_src: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    scale = n_src / n_out
    sx = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    sx = np.clip(sx, 0.0, float(n_src - 1))
    i0 = np.floor(sx).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_src - 1)
    return i0, i1, sx - i0


def resize_bilinear(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize of a float64 raster, half-pixel center convention."""
    h, w = src.shape
    x0, x1, tx = _src_coords(out_w, w)
    y0, y1, ty = _src_coords(out_h, h)
    a = src[y0[:, None], x0[None, :]]
    b = src[y0[:, None], x1[None, :]]
    c = src[y1[:, None], x0[None, :]]
    d = src[y1[:, None], x1[None, :]]
    top = a + tx[None, :] * (b - a)
    bot = c + tx[None, :] * (d - c)
    return top + ty[:, None] * (bot - top)


def resize_nearest(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Nearest-neighbor resize (any dtype), half-pixel center convention."""
    h, w = src.shape
    xs = np.minimum(((np.arange(out_w) + 0.5) * (w / out_w)).astype(np.int64), w - 1)
    ys = np.minimum(((np.arange(out_h) + 0.5) * (h / out_h)).astype(np.int64), h - 1)
    return src[ys[:, None], xs[None, :]]
