"""Trainer CLI: fit the attention U-Net on an exported patch directory
and emit the .pt2 model consumed by the binarization pipeline."""

from __future__ import annotations

import sys

import click

from .data import EmptyDataset
from .train import ExportMismatch, TrainConfig, export_checkpoint, train


@click.group()
def main():
    """Attention U-Net training for inscription binarization."""


@main.command("train")
@click.option("--patches", "patch_root", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Patch directory produced by the pipeline's export.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False),
              help="Exported model path (.pt2).")
@click.option("--lr", default=1e-4, show_default=True)
@click.option("--batch", default=16, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--dice-weight", default=0.5, show_default=True)
@click.option("--bce-weight", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--checkpoint-dir", default="checkpoints", show_default=True)
@click.option("--side", default=512, show_default=True,
              help="Training resolution and export contract side.")
@click.option("--tiny", is_flag=True, help="Width-reduced variant for smoke runs.")
def train_cmd(patch_root, out_path, lr, batch, epochs, dice_weight, bce_weight,
              seed, checkpoint_dir, side, tiny):
    cfg = TrainConfig(patch_root=patch_root, lr=lr, batch=batch, epochs=epochs,
                      dice_weight=dice_weight, bce_weight=bce_weight, seed=seed,
                      checkpoint_dir=checkpoint_dir, side=side, tiny=tiny)
    try:
        result = train(cfg)
        click.echo(f"best val dice {result.best_val_dice:.4f} "
                   f"(checkpoint {result.checkpoint_path})")
        export_checkpoint(result.checkpoint_path, out_path)
        click.echo(f"exported {out_path}")
    except (EmptyDataset, ExportMismatch) as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(5)


@main.command("export")
@click.option("--checkpoint", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def export_cmd(checkpoint, out_path):
    try:
        export_checkpoint(checkpoint, out_path)
        click.echo(f"exported {out_path}")
    except ExportMismatch as exc:
        click.echo(f"error: ExportMismatch: {exc}", err=True)
        sys.exit(5)


if __name__ == "__main__":
    main()
