"""Raster kernel dispatch: compiled extension when built, numpy otherwise.

Set ``INKSTONE_FORCE_NUMPY=1`` to force the fallback lane (used by the
parity tests and the kernel benchmark).
"""

import os

from . import numpy_ops

try:
    from . import _core
except ImportError:
    _core = None

HAVE_COMPILED = _core is not None
_FORCED = os.environ.get("INKSTONE_FORCE_NUMPY", "") not in ("", "0")
_active = _core if (HAVE_COMPILED and not _FORCED) else numpy_ops

KERNEL_LANE = "compiled" if _active is not numpy_ops else "numpy"

label_8 = _active.label_8
dilate_rect = _active.dilate_rect
resize_bilinear = _active.resize_bilinear
resize_nearest = _active.resize_nearest
