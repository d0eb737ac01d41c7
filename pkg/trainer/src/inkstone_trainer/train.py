"""Training loop, checkpoint selection, and model export.

The best checkpoint is picked on held-out Dice (10% of the patches,
split by seed). Export serializes the model as a ``torch.export``
program (.pt2) with a dynamic batch dimension and verifies that the
reloaded program matches the in-framework model to 1e-4 max-abs on
random inputs before the file is considered valid.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.utils.data import DataLoader, Subset

from .data import PatchFolder
from .losses import dice_bce_loss, dice_score
from .model import build_model

EXPORT_PARITY_TOL = 1e-4


class ExportMismatch(Exception):
    """Reloaded exported program disagrees with the source model."""


@dataclass
class TrainConfig:
    patch_root: str
    lr: float = 1e-4
    batch: int = 16
    epochs: int = 50
    dice_weight: float = 0.5
    bce_weight: float = 0.5
    seed: int = 0
    checkpoint_dir: str = "checkpoints"
    side: int = 512          # training resolution; export contract side
    val_fraction: float = 0.1
    tiny: bool = False       # width-reduced variant for smoke tests
    max_steps: int | None = None  # optional hard cap for smoke runs

    def __post_init__(self):
        if abs(self.dice_weight + self.bce_weight - 1.0) > 1e-9:
            raise ValueError("loss weights must sum to 1")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")


@dataclass
class TrainResult:
    best_val_dice: float
    best_state: dict
    checkpoint_path: Path
    log_path: Path
    train_dice: float = 0.0
    history: list[tuple[int, float, float]] = field(default_factory=list)


def _split(dataset, val_fraction: float, seed: int):
    n = len(dataset)
    order = torch.randperm(n, generator=torch.Generator().manual_seed(seed)).tolist()
    n_val = int(n * val_fraction)
    if n >= 2 and n_val == 0:
        n_val = 1
    return Subset(dataset, order[n_val:]), Subset(dataset, order[:n_val])


@torch.no_grad()
def _mean_dice(model, loader) -> float:
    model.eval()
    scores = []
    for x, y in loader:
        scores.append(dice_score(model(x), y))
    return sum(scores) / len(scores) if scores else 0.0


def train(cfg: TrainConfig) -> TrainResult:
    torch.manual_seed(cfg.seed)
    dataset = PatchFolder(cfg.patch_root, side=cfg.side)
    train_set, val_set = _split(dataset, cfg.val_fraction, cfg.seed)
    loader = DataLoader(
        train_set, batch_size=cfg.batch, shuffle=True,
        generator=torch.Generator().manual_seed(cfg.seed), num_workers=0)
    val_loader = DataLoader(val_set, batch_size=cfg.batch, num_workers=0)

    model = build_model(tiny=cfg.tiny)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr)

    ckpt_dir = Path(cfg.checkpoint_dir)
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    log_path = ckpt_dir / "train_log.csv"
    best_dice = -1.0
    best_state = copy.deepcopy(model.state_dict())
    history = []
    step = 0

    with open(log_path, "w", newline="") as log_file:
        log = csv.writer(log_file)
        log.writerow(["epoch", "train_loss", "val_dice"])
        for epoch in range(1, cfg.epochs + 1):
            model.train()
            losses = []
            for x, y in loader:
                optimizer.zero_grad()
                loss = dice_bce_loss(model(x), y, cfg.dice_weight, cfg.bce_weight)
                loss.backward()
                optimizer.step()
                losses.append(float(loss.detach()))
                step += 1
                if cfg.max_steps is not None and step >= cfg.max_steps:
                    break
            train_loss = sum(losses) / len(losses) if losses else 0.0
            val_dice = _mean_dice(model, val_loader)
            log.writerow([epoch, repr(train_loss), repr(val_dice)])
            history.append((epoch, train_loss, val_dice))
            if val_dice > best_dice:
                best_dice = val_dice
                best_state = copy.deepcopy(model.state_dict())
            if cfg.max_steps is not None and step >= cfg.max_steps:
                break

    ckpt_path = ckpt_dir / "best.ckpt"
    torch.save({"state_dict": best_state, "tiny": cfg.tiny, "side": cfg.side,
                "val_dice": best_dice}, ckpt_path)
    model.load_state_dict(best_state)
    train_dice = _mean_dice(model, DataLoader(train_set, batch_size=cfg.batch))
    return TrainResult(best_val_dice=best_dice, best_state=best_state,
                       checkpoint_path=ckpt_path, log_path=log_path,
                       train_dice=train_dice, history=history)


def load_checkpoint(path: str | Path):
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = build_model(tiny=payload["tiny"])
    model.load_state_dict(payload["state_dict"])
    return model, payload


def export(model: torch.nn.Module, out_path: str | Path, side: int = 512,
           n_parity: int = 100, seed: int = 0) -> Path:
    """Export to a .pt2 program and verify reload parity on random inputs."""
    model = model.eval()
    batch_dim = torch.export.Dim("n")
    example = torch.zeros(2, 1, side, side)
    program = torch.export.export(model, (example,),
                                  dynamic_shapes={"input": {0: batch_dim}})
    out_path = Path(out_path)
    torch.export.save(program, str(out_path))

    reloaded = torch.export.load(str(out_path)).module()
    gen = torch.Generator().manual_seed(seed)
    worst = 0.0
    with torch.no_grad():
        for _ in range(n_parity):
            x = torch.rand(1, 1, side, side, generator=gen)
            worst = max(worst, float((model(x) - reloaded(x)).abs().max()))
    if worst > EXPORT_PARITY_TOL:
        out_path.unlink(missing_ok=True)
        raise ExportMismatch(
            f"export parity {worst:.2e} exceeds {EXPORT_PARITY_TOL:.0e}")
    return out_path


def export_checkpoint(ckpt_path: str | Path, out_path: str | Path,
                      n_parity: int = 100) -> Path:
    model, payload = load_checkpoint(ckpt_path)
    return export(model, out_path, side=payload["side"], n_parity=n_parity)
