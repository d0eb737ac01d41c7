"""Dataset over exported patch directories.

Expects the layout written by the pipeline's patch export::

    <root>/<image_id>/fg_000.png      gray patch
    <root>/<image_id>/fg_000_mask.png binary label ({0, 255}, 255 = text)
    <root>/<image_id>/bg_000.png      (and so on)

Any ``<stem>.png`` with a sibling ``<stem>_mask.png`` counts as a sample;
``specs.json`` files are ignored here.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset


class EmptyDataset(Exception):
    """No patch/mask pairs were found under the root."""


class PatchFolder(Dataset):
    def __init__(self, root: str | Path, side: int | None = None):
        self.root = Path(root)
        self.side = side
        self.pairs: list[tuple[Path, Path]] = []
        for img in sorted(self.root.rglob("*.png")):
            if img.stem.endswith("_mask"):
                continue
            mask = img.with_name(f"{img.stem}_mask.png")
            if mask.is_file():
                self.pairs.append((img, mask))
        if not self.pairs:
            raise EmptyDataset(f"no patch/mask pairs under {self.root}")

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, idx: int) -> tuple[torch.Tensor, torch.Tensor]:
        img_path, mask_path = self.pairs[idx]
        with Image.open(img_path) as im:
            img = im.convert("L")
            if self.side and img.size != (self.side, self.side):
                img = img.resize((self.side, self.side), Image.BILINEAR)
            x = np.asarray(img, dtype=np.float32) / 255.0
        with Image.open(mask_path) as im:
            mask = im.convert("L")
            if self.side and mask.size != (self.side, self.side):
                mask = mask.resize((self.side, self.side), Image.NEAREST)
            y = (np.asarray(mask, dtype=np.uint8) > 127).astype(np.float32)
        return torch.from_numpy(x)[None], torch.from_numpy(y)[None]
