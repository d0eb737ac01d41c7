"""Binarization quality metrics: PSNR, F-measure, pseudo-F-measure, DRD.

All metrics compare a predicted mask against a ground-truth mask of the
same shape, with True = text = positive class.

DRD charges each mispredicted pixel the inverse-distance-weighted
disagreement between its predicted value and the ground truth over a
5x5 neighborhood (weights normalized to sum 1, center 0, out-of-image
neighbors contribute nothing), then divides the total by NUBN, the
number of non-uniform 8x8 ground-truth blocks. The weighting is applied
with the raw inverse-distance matrix and normalized once at the end,
which keeps the uniform-neighborhood case exactly 1 per flipped pixel.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimMismatch, EmptySet
from .raster import BinaryMask, ensure_mask
from .thinning import skeletonize

PSNR_CAP_DB = 100.0  # stands in for infinite PSNR when the masks agree


def _raw_drd_weights() -> np.ndarray:
    w = np.zeros((5, 5), dtype=np.float64)
    for i in range(5):
        for j in range(5):
            if (i, j) != (2, 2):
                w[i, j] = 1.0 / math.hypot(i - 2, j - 2)
    return w


_W_RAW = _raw_drd_weights()
# row-major accumulation, the same order the per-pixel sums use below
_W_SUM = 0.0
for _v in _W_RAW.flat:
    _W_SUM += float(_v)
del _v

DRD_WEIGHTS = _W_RAW / _W_SUM


@dataclass(frozen=True)
class EvalReport:
    psnr: float
    fm: float
    f_ps: float
    drd: float
    tp: int
    fp: int
    fn: int
    tn: int


def _check_pair(pred: BinaryMask, gt: BinaryMask) -> tuple[BinaryMask, BinaryMask]:
    pred = ensure_mask(pred)
    gt = ensure_mask(gt)
    if pred.shape != gt.shape:
        raise DimMismatch(f"pred {pred.shape} vs gt {gt.shape}")
    return pred, gt


def confusion(pred: BinaryMask, gt: BinaryMask) -> tuple[int, int, int, int]:
    """Pixel counts (tp, fp, fn, tn) with text as the positive class."""
    pred, gt = _check_pair(pred, gt)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = pred.size - tp - fp - fn
    return tp, fp, fn, tn


def f_measure(pred: BinaryMask, gt: BinaryMask) -> float:
    """Harmonic mean of precision and recall, in percent; 0 when undefined."""
    tp, fp, fn, _ = confusion(pred, gt)
    return _fm_from_counts(tp, fp, fn)


def _fm_from_counts(tp: int, fp: int, fn: int) -> float:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r) * 100.0


def psnr(pred: BinaryMask, gt: BinaryMask, cap: float = PSNR_CAP_DB) -> float:
    """Peak signal-to-noise ratio over {0,1} rasters, capped for averaging."""
    pred, gt = _check_pair(pred, gt)
    wrong = int(np.count_nonzero(pred != gt))
    if wrong == 0:
        return cap
    mse = wrong / pred.size
    return min(10.0 * math.log10(1.0 / mse), cap)


def pseudo_f_measure(pred: BinaryMask, gt: BinaryMask) -> float:
    """F-measure with recall taken against the ground-truth skeleton.

    Thin strokes are judged on their centerlines: missing a stroke's
    border costs little, missing its core costs everything.
    """
    pred, gt = _check_pair(pred, gt)
    tp, fp, _, _ = confusion(pred, gt)
    p = tp / (tp + fp) if tp + fp else 0.0
    skel = skeletonize(gt)
    n_skel = int(np.count_nonzero(skel))
    r = int(np.count_nonzero(pred & skel)) / n_skel if n_skel else 0.0
    if p + r == 0.0:
        return 0.0
    return 2.0 * p * r / (p + r) * 100.0


def nubn(gt: BinaryMask) -> int:
    """Non-uniform 8x8 ground-truth blocks, grid anchored at (0,0).

    Partial blocks at the right/bottom edges participate and are judged
    on their actual pixels.
    """
    gt = ensure_mask(gt)
    h, w = gt.shape
    ys = np.arange(0, h, 8)
    xs = np.arange(0, w, 8)
    sums = np.add.reduceat(np.add.reduceat(gt.astype(np.int64), ys, axis=0), xs, axis=1)
    block_h = np.diff(np.append(ys, h))
    block_w = np.diff(np.append(xs, w))
    areas = block_h[:, None] * block_w[None, :]
    return int(np.count_nonzero((sums > 0) & (sums < areas)))


def drd(pred: BinaryMask, gt: BinaryMask) -> float:
    """Distance-reciprocal distortion, normalized by NUBN.

    With a uniform ground truth (NUBN = 0), a perfect prediction scores 0
    and any error is normalized by 1 with a degenerate-input warning.
    """
    pred, gt = _check_pair(pred, gt)
    diff = pred != gt
    n_blocks = nubn(gt)
    if not diff.any():
        return 0.0
    if n_blocks == 0:
        warnings.warn("uniform ground truth: DRD normalized by 1", RuntimeWarning)
        n_blocks = 1
    h, w = gt.shape
    gt_pad = np.zeros((h + 4, w + 4), dtype=np.float64)
    gt_pad[2:-2, 2:-2] = gt
    valid = np.zeros((h + 4, w + 4), dtype=np.float64)
    valid[2:-2, 2:-2] = 1.0
    pred_f = pred.astype(np.float64)
    acc = np.zeros((h, w), dtype=np.float64)
    for i in range(5):
        for j in range(5):
            wij = _W_RAW[i, j]
            if wij == 0.0:
                continue
            g = gt_pad[i:i + h, j:j + w]
            v = valid[i:i + h, j:j + w]
            acc += wij * (np.abs(g - pred_f) * v)
    total = float(acc[diff].sum())
    return float(total / _W_SUM / n_blocks)


def evaluate_pair(pred: BinaryMask, gt: BinaryMask) -> EvalReport:
    tp, fp, fn, tn = confusion(pred, gt)
    return EvalReport(
        psnr=psnr(pred, gt),
        fm=_fm_from_counts(tp, fp, fn),
        f_ps=pseudo_f_measure(pred, gt),
        drd=drd(pred, gt),
        tp=tp, fp=fp, fn=fn, tn=tn,
    )


def evaluate_set(pairs: list[tuple[BinaryMask, BinaryMask]]) -> EvalReport:
    """Mean of per-image metrics (PSNR already capped); counts are summed."""
    if not pairs:
        raise EmptySet("no prediction/ground-truth pairs to evaluate")
    reports = [evaluate_pair(p, g) for p, g in pairs]
    return mean_report(reports)


def mean_report(reports: list[EvalReport]) -> EvalReport:
    if not reports:
        raise EmptySet("no reports to average")
    n = len(reports)
    return EvalReport(
        psnr=sum(r.psnr for r in reports) / n,
        fm=sum(r.fm for r in reports) / n,
        f_ps=sum(r.f_ps for r in reports) / n,
        drd=sum(r.drd for r in reports) / n,
        tp=sum(r.tp for r in reports),
        fp=sum(r.fp for r in reports),
        fn=sum(r.fn for r in reports),
        tn=sum(r.tn for r in reports),
    )


def write_csv(rows: list[tuple[str, EvalReport]], path: str | Path) -> None:
    """Per-image CSV: image_id,psnr,fm,fps,drd (full float precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_id", "psnr", "fm", "fps", "drd"])
        for image_id, r in rows:
            writer.writerow([image_id, repr(float(r.psnr)), repr(float(r.fm)),
                             repr(float(r.f_ps)), repr(float(r.drd))])


def write_summary(rows: list[tuple[str, EvalReport]], path: str | Path) -> EvalReport:
    """JSON summary with metric means over the evaluated set."""
    mean = mean_report([r for _, r in rows])
    payload = {
        "n_images": len(rows),
        "psnr": mean.psnr,
        "fm": mean.fm,
        "fps": mean.f_ps,
        "drd": mean.drd,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return mean
