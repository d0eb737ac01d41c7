import math

import pytest
import torch

from inkstone_trainer.losses import dice_bce_loss, dice_loss, dice_score


def naive_dice_bce(pred, target, dw=0.5, bw=0.5, smooth=1.0):
    p = pred.flatten().tolist()
    t = target.flatten().tolist()
    inter = sum(a * b for a, b in zip(p, t))
    dice = 1.0 - (2.0 * inter + smooth) / (sum(p) + sum(t) + smooth)
    eps = 1e-12
    bce = -sum(b * math.log(max(a, eps)) + (1 - b) * math.log(max(1 - a, eps))
               for a, b in zip(p, t)) / len(p)
    return dw * dice + bw * bce


class TestDiceBce:
    def test_perfect_ones_is_zero(self):
        ones = torch.ones(1, 1, 8, 8)
        assert float(dice_bce_loss(ones, ones)) == pytest.approx(0.0, abs=1e-6)

    def test_uniform_half_bce_component(self):
        pred = torch.full((1, 1, 8, 8), 0.5)
        target = torch.ones(1, 1, 8, 8)
        bce_part = float(torch.nn.functional.binary_cross_entropy(pred, target))
        assert bce_part == pytest.approx(math.log(2.0), abs=1e-6)
        loss = float(dice_bce_loss(pred, target))
        dice_part = float(dice_loss(pred, target))
        assert loss == pytest.approx(0.5 * dice_part + 0.5 * math.log(2.0), abs=1e-6)

    def test_matches_naive_on_random(self):
        gen = torch.Generator().manual_seed(3)
        pred = torch.rand(2, 1, 6, 6, generator=gen) * 0.98 + 0.01
        target = (torch.rand(2, 1, 6, 6, generator=gen) > 0.5).float()
        mine = float(dice_bce_loss(pred, target))
        ref = naive_dice_bce(pred, target)
        assert mine == pytest.approx(ref, abs=1e-6)

    def test_nonnegative_and_zero_only_at_match(self):
        gen = torch.Generator().manual_seed(9)
        for _ in range(10):
            pred = torch.rand(1, 1, 5, 5, generator=gen) * 0.98 + 0.01
            target = (torch.rand(1, 1, 5, 5, generator=gen) > 0.5).float()
            assert float(dice_bce_loss(pred, target)) > 0.0

    def test_weights_must_sum_to_one(self):
        from inkstone_trainer.train import TrainConfig
        with pytest.raises(ValueError):
            TrainConfig(patch_root=".", dice_weight=0.7, bce_weight=0.5)


class TestDiceScore:
    def test_perfect(self):
        t = (torch.rand(1, 1, 8, 8) > 0.5).float()
        assert dice_score(t, t) == 1.0

    def test_disjoint(self):
        a = torch.zeros(1, 1, 4, 4)
        a[..., :2, :] = 1.0
        assert dice_score(a, 1.0 - a) == 0.0

    def test_both_empty(self):
        z = torch.zeros(1, 1, 4, 4)
        assert dice_score(z, z) == 1.0
