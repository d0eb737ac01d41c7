from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def write_patch(dest: Path, stem: str, rng, side=64):
    """One synthetic patch pair: dark blob characters on light stone."""
    mask = np.zeros((side, side), dtype=bool)
    for _ in range(rng.integers(2, 5)):
        h = int(rng.integers(side // 6, side // 3))
        w = int(rng.integers(side // 8, side // 3))
        y = int(rng.integers(0, side - h))
        x = int(rng.integers(0, side - w))
        mask[y:y + h, x:x + w] = True
    gray = rng.normal(175, 10, (side, side))
    gray[mask] = rng.normal(70, 10, int(mask.sum()))
    gray = np.clip(gray, 0, 255).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(dest / f"{stem}.png")
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8), mode="L").save(
        dest / f"{stem}_mask.png")


@pytest.fixture
def rng():
    return np.random.default_rng(77)


@pytest.fixture
def patch_dir(tmp_path, rng):
    """Ten patches across two image directories, pipeline export layout."""
    for image_id, count in (("img_a", 6), ("img_b", 4)):
        d = tmp_path / "patches" / image_id
        d.mkdir(parents=True)
        for i in range(count):
            prefix = "fg" if i % 3 else "bg"
            write_patch(d, f"{prefix}_{i:03d}", rng)
        (d / "specs.json").write_text("{}")  # present in real exports; ignored
    return tmp_path / "patches"
