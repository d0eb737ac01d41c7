"""Corpus manifest handling, statistics, splitting, and patch export.

A manifest is a JSON file::

    {
      "entries": [
        {"image_id": "slab_001", "image": "img/slab_001.png",
         "mask": "gt/slab_001.png", "tags": ["eroded"]},
        ...
      ],
      "split": {"slab_001": "train", ...}   // optional
    }

Paths are relative to the manifest file. Masks are single-channel PNGs
with {0, 255}, 255 = text.

Exported patches land in ``<out_dir>/<image_id>/`` as ``fg_<n>.png`` /
``bg_<n>.png`` with sibling ``fg_<n>_mask.png`` label images, plus a
``specs.json`` recording the seed, the configuration, and every patch
rectangle.
"""

from __future__ import annotations

import json
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyMask, InvalidParam
from .patching import (
    DilationConfig,
    PatchBatch,
    Region,
    SamplingConfig,
    height_stats,
    partition_regions,
    sample_patches,
    valid_components,
)
from .raster import connected_components, load_gray, load_mask, save_gray, save_mask


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    image_path: Path
    mask_path: Path | None
    tags: tuple[str, ...] = ()


@dataclass
class Manifest:
    entries: list[ManifestEntry]
    split: dict[str, str] = field(default_factory=dict)

    def train_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if self.split.get(e.image_id) == "train"]

    def test_entries(self) -> list[ManifestEntry]:
        return [e for e in self.entries if self.split.get(e.image_id) == "test"]


def load_manifest(path: str | Path) -> Manifest:
    path = Path(path)
    with open(path) as fh:
        raw = json.load(fh)
    root = path.parent
    entries = []
    seen = set()
    for item in raw["entries"]:
        image_id = item["image_id"]
        if image_id in seen:
            raise InvalidParam(f"duplicate image_id in manifest: {image_id}")
        seen.add(image_id)
        mask = item.get("mask")
        entries.append(ManifestEntry(
            image_id=image_id,
            image_path=root / item["image"],
            mask_path=(root / mask) if mask else None,
            tags=tuple(item.get("tags", ())),
        ))
    split = dict(raw.get("split", {}))
    for image_id in split:
        if image_id not in seen:
            raise InvalidParam(f"split references unknown image_id: {image_id}")
    return Manifest(entries=entries, split=split)


def save_manifest(manifest: Manifest, path: str | Path) -> None:
    path = Path(path)
    root = path.parent
    payload = {
        "entries": [
            {
                "image_id": e.image_id,
                "image": _relative(e.image_path, root),
                **({"mask": _relative(e.mask_path, root)} if e.mask_path else {}),
                **({"tags": list(e.tags)} if e.tags else {}),
            }
            for e in manifest.entries
        ],
    }
    if manifest.split:
        payload["split"] = dict(sorted(manifest.split.items()))
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _relative(p: Path, root: Path) -> str:
    try:
        return p.relative_to(root).as_posix()
    except ValueError:
        return p.as_posix()


@dataclass(frozen=True)
class ImageStats:
    image_id: str
    n_components: int
    width: int
    height: int
    aspect: float


@dataclass(frozen=True)
class CorpusStats:
    per_image: tuple[ImageStats, ...]

    def ranges(self) -> dict[str, tuple[float, float]]:
        comp = [s.n_components for s in self.per_image]
        width = [s.width for s in self.per_image]
        height = [s.height for s in self.per_image]
        aspect = [s.aspect for s in self.per_image]
        return {
            "components": (min(comp), max(comp)),
            "width": (min(width), max(width)),
            "height": (min(height), max(height)),
            "aspect": (min(aspect), max(aspect)),
        }


def compute_stats(manifest: Manifest) -> CorpusStats:
    """Per-image component counts and dimensions plus corpus ranges."""
    per_image = []
    for e in manifest.entries:
        img = load_gray(e.image_path)
        h, w = img.shape
        n = 0
        if e.mask_path is not None:
            n = len(connected_components(load_mask(e.mask_path)))
        per_image.append(ImageStats(
            image_id=e.image_id, n_components=n,
            width=w, height=h, aspect=w / h,
        ))
    if not per_image:
        raise EmptyMask("manifest has no entries")
    return CorpusStats(per_image=tuple(per_image))


def split(manifest: Manifest, train_fraction: float = 0.85, seed: int = 0) -> Manifest:
    """Assign train/test with a seeded shuffle, stratified by tag group.

    Entries sharing the same tag set form a group; each group contributes
    round(n * train_fraction) training entries, so per-group proportions
    hold within one entry. Untagged corpora degrade to one plain random
    split.
    """
    if not (0.0 < train_fraction < 1.0):
        raise InvalidParam("train_fraction must be in (0, 1)")
    groups: dict[tuple[str, ...], list[str]] = {}
    for e in manifest.entries:
        groups.setdefault(tuple(sorted(e.tags)), []).append(e.image_id)
    rng = np.random.Generator(np.random.PCG64(seed))
    assignment: dict[str, str] = {}
    for key in sorted(groups):
        ids = groups[key]
        order = rng.permutation(len(ids))
        n_train = int(np.floor(len(ids) * train_fraction + 0.5))
        for rank, idx in enumerate(order):
            assignment[ids[idx]] = "train" if rank < n_train else "test"
    return Manifest(entries=list(manifest.entries), split=assignment)


@dataclass
class ExportSummary:
    per_image: dict[str, tuple[int, int]] = field(default_factory=dict)  # id -> (n_fg, n_bg)
    skipped: list[str] = field(default_factory=list)

    @property
    def total_patches(self) -> int:
        return sum(f + b for f, b in self.per_image.values())


def image_seed(global_seed: int, image_id: str) -> int:
    """Stable per-image seed so parallel export order cannot matter."""
    return (global_seed * 1_000_003 + zlib.crc32(image_id.encode("utf-8"))) % (2 ** 63)


def export_patches(
    manifest: Manifest,
    sampling_cfg: SamplingConfig | None = None,
    dilation_cfg: DilationConfig | None = None,
    out_dir: str | Path = "patches",
    workers: int = 1,
    entries: list[ManifestEntry] | None = None,
) -> ExportSummary:
    """Run the patch pipeline for every entry and write the patch layout.

    Images whose mask has no components are skipped with a warning.
    Re-running with the same seed reproduces the directory byte for byte.
    """
    sampling_cfg = sampling_cfg or SamplingConfig()
    dilation_cfg = dilation_cfg or DilationConfig()
    out_dir = Path(out_dir)
    todo = entries if entries is not None else manifest.entries
    summary = ExportSummary()

    def one(entry: ManifestEntry):
        if entry.mask_path is None:
            raise EmptyMask(f"{entry.image_id}: no ground-truth mask in manifest")
        img = load_gray(entry.image_path)
        gt = load_mask(entry.mask_path)
        components = connected_components(gt)
        if not components:
            raise EmptyMask(f"{entry.image_id}: mask has no components")
        stats = height_stats(components)
        partition = partition_regions(components, stats, dilation_cfg,
                                      (img.shape[1], img.shape[0]))
        n_valid = len(valid_components(components, stats, sampling_cfg))
        cfg = SamplingConfig(**{**_cfg_dict(sampling_cfg),
                                "rng_seed": image_seed(sampling_cfg.rng_seed, entry.image_id)})
        batch = sample_patches(img, gt, partition, stats, cfg, n_valid=n_valid)
        write_patch_dir(out_dir / entry.image_id, entry.image_id, batch, cfg,
                        dilation_cfg, stats)
        n_fg = sum(1 for s in batch.specs if s.region is Region.FOREGROUND)
        return entry.image_id, (n_fg, len(batch.specs) - n_fg)

    def run(entry: ManifestEntry):
        try:
            return one(entry), None
        except EmptyMask as exc:
            return None, (entry.image_id, str(exc))

    if workers <= 1:
        results = [run(e) for e in todo]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, todo))
    for ok, err in results:
        if ok is not None:
            image_id, counts = ok
            summary.per_image[image_id] = counts
        else:
            image_id, msg = err
            warnings.warn(f"skipping {image_id}: {msg}")
            summary.skipped.append(image_id)
    return summary


def _cfg_dict(cfg) -> dict:
    return asdict(cfg)


def write_patch_dir(
    dest: Path,
    image_id: str,
    batch: PatchBatch,
    sampling_cfg: SamplingConfig,
    dilation_cfg: DilationConfig,
    stats,
) -> None:
    dest.mkdir(parents=True, exist_ok=True)
    records = []
    counters = {Region.FOREGROUND: 0, Region.BACKGROUND: 0}
    for i, spec in enumerate(batch.specs):
        prefix = "fg" if spec.region is Region.FOREGROUND else "bg"
        n = counters[spec.region]
        counters[spec.region] += 1
        stem = f"{prefix}_{n:03d}"
        save_gray(batch.images[i], dest / f"{stem}.png")
        if batch.labels is not None:
            save_mask(batch.labels[i], dest / f"{stem}_mask.png")
        records.append({
            "file": f"{stem}.png",
            "x": spec.x, "y": spec.y, "side": spec.side,
            "region": spec.region.value,
        })
    payload = {
        "image_id": image_id,
        "seed": sampling_cfg.rng_seed,
        "sampling": _cfg_dict(sampling_cfg),
        "dilation": _cfg_dict(dilation_cfg),
        "height_stats": _cfg_dict(stats),
        "patches": records,
    }
    with open(dest / "specs.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
