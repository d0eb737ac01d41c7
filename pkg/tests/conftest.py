import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def make_inscription(
    rng: np.random.Generator,
    width: int = 640,
    height: int = 480,
    char_h: tuple[int, int] = (20, 32),
    char_w: tuple[int, int] = (12, 28),
    fg_mean: float = 70.0,
    bg_mean: float = 170.0,
    noise_sd: float = 12.0,
    with_outliers: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic inscription: rows of dark rectangular 'characters' on a
    noisy light background, plus the exact text mask."""
    mask = np.zeros((height, width), dtype=bool)
    row_h = char_h[1] + 14
    y = 12
    while y + char_h[1] < height - 12:
        x = 12
        while x + char_w[1] < width - 12:
            if rng.random() < 0.75:
                ch = int(rng.integers(char_h[0], char_h[1] + 1))
                cw = int(rng.integers(char_w[0], char_w[1] + 1))
                mask[y:y + ch, x:x + cw] = True
            x += char_w[1] + int(rng.integers(6, 16))
        y += row_h
    if with_outliers:
        mask[2:4, 2:5] = True  # diacritic-sized speck
        gh = min(height - 20, 3 * char_h[1] * 4)
        mask[10:10 + gh, width - 9:width - 3] = True  # tall decorative band
    gray = rng.normal(bg_mean, noise_sd, size=(height, width))
    gray[mask] = rng.normal(fg_mean, noise_sd, size=int(mask.sum()))
    return np.clip(gray, 0, 255).astype(np.uint8), mask


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def fixture_models() -> dict[str, Path]:
    """Pre-committed TorchScript fixtures; regenerated if absent."""
    paths = {
        "tiny": FIXTURES / "tinyconv_512.pt2",
        "const05": FIXTURES / "const05_512.pt2",
        "wrong_side": FIXTURES / "pool256_512.pt2",
    }
    if not all(p.is_file() for p in paths.values()):
        subprocess.run(
            [sys.executable, str(FIXTURES / "make_fixture_models.py")],
            check=True,
        )
    return paths
