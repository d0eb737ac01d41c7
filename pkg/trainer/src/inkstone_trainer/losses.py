"""Hybrid Dice + binary cross-entropy objective.

Dice directly optimizes segmentation overlap (stable targets for the
sparse text class); BCE keeps per-pixel gradients well-conditioned. The
two are weighted equally by default. Dice uses a smoothing constant of
1.0 in numerator and denominator.
"""

from __future__ import annotations

import torch

DICE_SMOOTH = 1.0


def dice_loss(pred: torch.Tensor, target: torch.Tensor, smooth: float = DICE_SMOOTH) -> torch.Tensor:
    p = pred.reshape(-1)
    t = target.reshape(-1)
    inter = (p * t).sum()
    return 1.0 - (2.0 * inter + smooth) / (p.sum() + t.sum() + smooth)


def dice_bce_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    dice_weight: float = 0.5,
    bce_weight: float = 0.5,
) -> torch.Tensor:
    """pred must hold probabilities in (0, 1); target is {0, 1} float."""
    bce = torch.nn.functional.binary_cross_entropy(pred, target)
    return dice_weight * dice_loss(pred, target) + bce_weight * bce


def dice_score(pred: torch.Tensor, target: torch.Tensor, threshold: float = 0.5) -> float:
    """Hard Dice overlap used for checkpoint selection."""
    p = (pred >= threshold).float().reshape(-1)
    t = target.reshape(-1)
    inter = float((p * t).sum())
    denom = float(p.sum() + t.sum())
    if denom == 0.0:
        return 1.0  # both empty: perfect agreement
    return 2.0 * inter / denom
