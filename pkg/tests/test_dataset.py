import json

import numpy as np
import pytest

from inkstone.dataset import (
    Manifest,
    ManifestEntry,
    compute_stats,
    export_patches,
    image_seed,
    load_manifest,
    save_manifest,
    split,
)
from inkstone.errors import InvalidParam
from inkstone.patching import SamplingConfig
from inkstone.raster import save_gray, save_mask
from tests.conftest import make_inscription


def write_corpus(tmp_path, rng, n=4, tags=None, size=(220, 170)):
    entries = []
    for i in range(n):
        image_id = f"img_{i:02d}"
        gray, mask = make_inscription(rng, width=size[0], height=size[1])
        save_gray(gray, tmp_path / f"{image_id}.png")
        save_mask(mask, tmp_path / f"{image_id}_gt.png")
        entries.append({
            "image_id": image_id,
            "image": f"{image_id}.png",
            "mask": f"{image_id}_gt.png",
            **({"tags": [tags[i % len(tags)]]} if tags else {}),
        })
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps({"entries": entries}))
    return path


class TestManifest:
    def test_roundtrip(self, tmp_path, rng):
        path = write_corpus(tmp_path, rng, n=3, tags=["a", "b"])
        manifest = load_manifest(path)
        assert len(manifest.entries) == 3
        assert manifest.entries[0].image_path.is_file()
        out = tmp_path / "copy.json"
        save_manifest(manifest, out)
        again = load_manifest(out)
        assert [e.image_id for e in again.entries] == [e.image_id for e in manifest.entries]
        assert again.entries[1].tags == manifest.entries[1].tags

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"entries": [
            {"image_id": "x", "image": "a.png"},
            {"image_id": "x", "image": "b.png"},
        ]}))
        with pytest.raises(InvalidParam):
            load_manifest(path)

    def test_unknown_split_id_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({
            "entries": [{"image_id": "x", "image": "a.png"}],
            "split": {"y": "train"},
        }))
        with pytest.raises(InvalidParam):
            load_manifest(path)


class TestStats:
    def test_counts_and_aspect(self, tmp_path, rng):
        gray = np.full((50, 100), 200, dtype=np.uint8)
        mask = np.zeros((50, 100), dtype=bool)
        mask[10:20, 10:20] = True
        mask[10:20, 30:40] = True
        mask[30:40, 10:20] = True
        save_gray(gray, tmp_path / "a.png")
        save_mask(mask, tmp_path / "a_gt.png")
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"entries": [
            {"image_id": "a", "image": "a.png", "mask": "a_gt.png"},
        ]}))
        stats = compute_stats(load_manifest(path))
        s = stats.per_image[0]
        assert s.n_components == 3
        assert s.width == 100 and s.height == 50
        assert s.aspect == 2.0

    def test_empty_mask_still_listed(self, tmp_path):
        save_gray(np.full((20, 20), 128, dtype=np.uint8), tmp_path / "a.png")
        save_mask(np.zeros((20, 20), dtype=bool), tmp_path / "a_gt.png")
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"entries": [
            {"image_id": "a", "image": "a.png", "mask": "a_gt.png"},
        ]}))
        stats = compute_stats(load_manifest(path))
        assert stats.per_image[0].n_components == 0


class TestSplit:
    def entries(self, n, tags=None):
        return [
            ManifestEntry(image_id=f"e{i:02d}", image_path=None, mask_path=None,
                          tags=(tags[i % len(tags)],) if tags else ())
            for i in range(n)
        ]

    def test_20_entries_default_fraction(self):
        manifest = Manifest(entries=self.entries(20))
        out = split(manifest, 0.85, seed=5)
        values = list(out.split.values())
        assert values.count("train") == 17
        assert values.count("test") == 3

    def test_deterministic(self):
        manifest = Manifest(entries=self.entries(30))
        assert split(manifest, 0.85, seed=9).split == split(manifest, 0.85, seed=9).split

    def test_partition(self):
        manifest = Manifest(entries=self.entries(25))
        out = split(manifest, 0.7, seed=1)
        assert set(out.split) == {e.image_id for e in manifest.entries}
        assert set(out.split.values()) <= {"train", "test"}

    def test_stratified_proportions(self):
        manifest = Manifest(entries=self.entries(40, tags=["worn", "clean"]))
        out = split(manifest, 0.75, seed=3)
        for tag in ("worn", "clean"):
            ids = [e.image_id for e in manifest.entries if tag in e.tags]
            n_train = sum(1 for i in ids if out.split[i] == "train")
            assert abs(n_train - 0.75 * len(ids)) <= 1

    def test_bad_fraction(self):
        with pytest.raises(InvalidParam):
            split(Manifest(entries=self.entries(4)), 1.0, 0)


class TestExport:
    def test_layout_and_counts(self, tmp_path, rng):
        path = write_corpus(tmp_path, rng, n=2)
        manifest = load_manifest(path)
        out = tmp_path / "patches"
        cfg = SamplingConfig(out_side=64, rng_seed=7)
        summary = export_patches(manifest, cfg, out_dir=out)
        assert set(summary.per_image) == {"img_00", "img_01"}
        for image_id, (n_fg, n_bg) in summary.per_image.items():
            d = out / image_id
            assert len(list(d.glob("fg_*.png"))) == 2 * n_fg  # image + mask
            assert len(list(d.glob("bg_*.png"))) == 2 * n_bg
            spec = json.loads((d / "specs.json").read_text())
            assert len(spec["patches"]) == n_fg + n_bg
            assert spec["sampling"]["out_side"] == 64
            for rec in spec["patches"]:
                assert rec["side"] >= 1
                assert rec["region"] in ("foreground", "background")

    def test_min_clamp_for_sparse_image(self, tmp_path, rng):
        gray = np.full((200, 200), 180, dtype=np.uint8)
        mask = np.zeros((200, 200), dtype=bool)
        mask[90:110, 90:105] = True  # single component
        save_gray(gray, tmp_path / "one.png")
        save_mask(mask, tmp_path / "one_gt.png")
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"entries": [
            {"image_id": "one", "image": "one.png", "mask": "one_gt.png"},
        ]}))
        summary = export_patches(load_manifest(p), SamplingConfig(out_side=32, rng_seed=1),
                                 out_dir=tmp_path / "out")
        n_fg, _ = summary.per_image["one"]
        assert n_fg == 10  # clamped to the floor

    def test_rerun_byte_identical(self, tmp_path, rng):
        path = write_corpus(tmp_path, rng, n=2)
        manifest = load_manifest(path)
        cfg = SamplingConfig(out_side=48, rng_seed=3)
        a, b = tmp_path / "a", tmp_path / "b"
        export_patches(manifest, cfg, out_dir=a)
        export_patches(manifest, cfg, out_dir=b)
        files_a = sorted(f.relative_to(a) for f in a.rglob("*") if f.is_file())
        files_b = sorted(f.relative_to(b) for f in b.rglob("*") if f.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes()

    def test_workers_byte_identical(self, tmp_path, rng):
        path = write_corpus(tmp_path, rng, n=3)
        manifest = load_manifest(path)
        cfg = SamplingConfig(out_side=48, rng_seed=3)
        a, b = tmp_path / "w1", tmp_path / "w4"
        export_patches(manifest, cfg, out_dir=a, workers=1)
        export_patches(manifest, cfg, out_dir=b, workers=4)
        files_a = sorted(f.relative_to(a) for f in a.rglob("*") if f.is_file())
        files_b = sorted(f.relative_to(b) for f in b.rglob("*") if f.is_file())
        assert files_a == files_b
        for rel in files_a:
            assert (a / rel).read_bytes() == (b / rel).read_bytes()

    def test_empty_mask_skipped_with_warning(self, tmp_path, rng):
        save_gray(np.full((60, 60), 128, dtype=np.uint8), tmp_path / "z.png")
        save_mask(np.zeros((60, 60), dtype=bool), tmp_path / "z_gt.png")
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"entries": [
            {"image_id": "z", "image": "z.png", "mask": "z_gt.png"},
        ]}))
        with pytest.warns(UserWarning):
            summary = export_patches(load_manifest(p), SamplingConfig(rng_seed=1),
                                     out_dir=tmp_path / "out")
        assert summary.skipped == ["z"]
        assert not summary.per_image

    def test_specs_fit_inside_image(self, tmp_path, rng):
        path = write_corpus(tmp_path, rng, n=1, size=(150, 130))
        out = tmp_path / "patches"
        export_patches(load_manifest(path), SamplingConfig(out_side=32, rng_seed=2),
                       out_dir=out)
        spec = json.loads((out / "img_00" / "specs.json").read_text())
        for rec in spec["patches"]:
            assert rec["x"] >= 0 and rec["y"] >= 0
            assert rec["x"] + rec["side"] <= 150
            assert rec["y"] + rec["side"] <= 130


class TestImageSeed:
    def test_stable_and_distinct(self):
        assert image_seed(0, "a") == image_seed(0, "a")
        assert image_seed(0, "a") != image_seed(0, "b")
        assert image_seed(0, "a") != image_seed(1, "a")
