import numpy as np
import pytest

from inkstone.backends import (
    ModelBinarizer,
    OracleBinarizer,
    OtsuBinarizer,
    Polarity,
    SauvolaBinarizer,
    SauvolaParams,
    load_backend,
    model_binarizer,
    oracle_binarizer,
    otsu_binarize,
    otsu_threshold,
    sauvola_binarize,
    sauvola_threshold_map,
)
from inkstone.errors import (
    InferenceError,
    InvalidParam,
    MissingGroundTruth,
    ModelLoadError,
    SignatureMismatch,
    UnknownMethod,
)
from tests import oracles


class TestOtsu:
    def test_bimodal_split(self):
        img = np.empty((10, 10), dtype=np.uint8)
        img[:5] = 40
        img[5:] = 200
        t = otsu_threshold(img)
        assert 40 < t <= 200
        prob = otsu_binarize(img, Polarity.DARK_TEXT)
        assert prob[img == 40].min() == 1.0 and prob[img == 40].max() == 1.0
        assert (prob[img == 200] == 0.0).all()

    def test_constant_image(self):
        img = np.full((8, 8), 77, dtype=np.uint8)
        assert otsu_threshold(img) == 77
        prob = otsu_binarize(img, Polarity.DARK_TEXT)
        assert np.unique(prob).tolist() == [0.0]  # single class, no crash

    def test_attains_bruteforce_argmax(self, rng):
        for _ in range(10):
            img = rng.integers(0, 256, (20, 20)).astype(np.uint8)
            t = otsu_threshold(img)
            variances = oracles.brute_otsu_variances(img)
            assert variances[t] == variances.max()
            assert t == int(np.argmax(variances))  # smallest tie wins

    def test_polarity_involution(self, rng):
        img = rng.integers(0, 256, (12, 12)).astype(np.uint8)
        dark = otsu_binarize(img, Polarity.DARK_TEXT)
        light = otsu_binarize(img, Polarity.LIGHT_TEXT)
        assert np.array_equal(dark == 1.0, light == 0.0)

    def test_matches_scalar_threshold(self, rng):
        img = rng.integers(0, 256, (15, 15)).astype(np.uint8)
        t = otsu_threshold(img)
        prob = otsu_binarize(img)
        assert np.array_equal(prob == 1.0, img < t)


class TestSauvola:
    def test_constant_image_all_background(self):
        img = np.full((20, 20), 150, dtype=np.uint8)
        prob = sauvola_binarize(img)
        assert (prob == 0.0).all()

    def test_dark_dot_detected(self):
        img = np.full((21, 21), 220, dtype=np.uint8)
        img[10, 10] = 20
        prob = sauvola_binarize(img, SauvolaParams(window=11, k=0.2, r=128.0))
        assert prob[10, 10] == 1.0
        t = oracles.naive_sauvola_map(img, 11, 0.2, 128.0)
        assert (20 < t[10, 10])  # oracle agrees the dot is below threshold

    def test_matches_naive_exactly(self, rng):
        for side, window in ((32, 9), (64, 25)):
            img = rng.integers(0, 256, (side, side)).astype(np.uint8)
            params = SauvolaParams(window=window, k=0.2, r=128.0)
            tmap = sauvola_threshold_map(img, params)
            expected = oracles.naive_sauvola_map(img, window, 0.2, 128.0)
            assert np.array_equal(tmap, expected)  # bitwise, not approx
            prob = sauvola_binarize(img, params)
            assert np.array_equal(prob == 1.0, img < expected)

    def test_even_window_rejected(self):
        with pytest.raises(InvalidParam):
            SauvolaParams(window=24)

    def test_values_binary(self, rng):
        img = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        prob = sauvola_binarize(img)
        assert set(np.unique(prob)) <= {0.0, 1.0}


class TestOracleBackend:
    def test_full_image_window_native(self, rng):
        gt = rng.random((40, 40)) < 0.5
        backend = oracle_binarizer(gt, side=None)
        img = rng.integers(0, 256, (40, 40)).astype(np.uint8)
        pred = backend.predict(img, (0, 0, 40))
        assert np.array_equal(pred == 1.0, gt)

    def test_values_binary_after_resize(self, rng):
        gt = rng.random((64, 64)) < 0.5
        backend = oracle_binarizer(gt, side=32)
        patch = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        pred = backend.predict(patch, (8, 8, 48))
        assert pred.shape == (32, 32)
        assert set(np.unique(pred)) <= {0.0, 1.0}

    def test_requires_window(self, rng):
        backend = oracle_binarizer(rng.random((10, 10)) < 0.5)
        with pytest.raises(MissingGroundTruth):
            backend.predict(np.zeros((10, 10), dtype=np.uint8))

    def test_out_of_bounds_window(self, rng):
        backend = oracle_binarizer(rng.random((10, 10)) < 0.5, side=None)
        with pytest.raises(MissingGroundTruth):
            backend.predict(np.zeros((8, 8), dtype=np.uint8), (5, 5, 8))

    def test_requires_gt(self):
        with pytest.raises(MissingGroundTruth):
            OracleBinarizer(None)


class TestModelBackend:
    def test_constant_half_model(self, fixture_models, rng):
        backend = model_binarizer(fixture_models["const05"])
        patch = rng.integers(0, 256, (512, 512)).astype(np.uint8)
        pred = backend.predict(patch)
        assert pred.shape == (512, 512)
        assert np.allclose(pred, 0.5)

    def test_output_range_on_random_patches(self, fixture_models, rng):
        backend = model_binarizer(fixture_models["tiny"])
        for _ in range(5):
            patch = rng.integers(0, 256, (512, 512)).astype(np.uint8)
            pred = backend.predict(patch)
            assert pred.min() >= 0.0 and pred.max() <= 1.0

    def test_batch_matches_single(self, fixture_models, rng):
        backend = model_binarizer(fixture_models["tiny"])
        patches = [rng.integers(0, 256, (512, 512)).astype(np.uint8) for _ in range(3)]
        singles = [backend.predict(p) for p in patches]
        batched = backend.predict_batch(patches)
        for a, b in zip(singles, batched):
            assert np.allclose(a, b, atol=1e-6)

    def test_wrong_signature_rejected(self, fixture_models):
        with pytest.raises(SignatureMismatch):
            model_binarizer(fixture_models["wrong_side"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelLoadError):
            model_binarizer(tmp_path / "nope.pt")

    def test_garbage_file(self, tmp_path):
        bad = tmp_path / "bad.pt"
        bad.write_bytes(b"not a model")
        with pytest.raises(ModelLoadError):
            model_binarizer(bad)

    def test_wrong_patch_side_at_predict(self, fixture_models, rng):
        backend = model_binarizer(fixture_models["tiny"])
        with pytest.raises(InferenceError):
            backend.predict(rng.integers(0, 256, (64, 64)).astype(np.uint8))


class TestLoadBackend:
    def test_selectors(self, rng, fixture_models):
        assert isinstance(load_backend("otsu"), OtsuBinarizer)
        assert isinstance(load_backend("sauvola"), SauvolaBinarizer)
        gt = rng.random((5, 5)) < 0.5
        assert isinstance(load_backend("oracle", gt=gt), OracleBinarizer)
        assert isinstance(load_backend(f"model:{fixture_models['tiny']}"), ModelBinarizer)

    def test_oracle_needs_gt(self):
        with pytest.raises(MissingGroundTruth):
            load_backend("oracle")

    def test_model_env_fallback(self, fixture_models, monkeypatch):
        monkeypatch.setenv("INKSTONE_MODEL", str(fixture_models["tiny"]))
        assert isinstance(load_backend("model"), ModelBinarizer)
        monkeypatch.delenv("INKSTONE_MODEL")
        with pytest.raises(ModelLoadError):
            load_backend("model")

    def test_unknown(self):
        with pytest.raises(UnknownMethod):
            load_backend("howe")

    def test_output_dims_match_input(self, rng):
        for backend in (OtsuBinarizer(), SauvolaBinarizer()):
            patch = rng.integers(0, 256, (33, 47)).astype(np.uint8)
            pred = backend.predict(patch)
            assert pred.shape == patch.shape
            assert pred.min() >= 0.0 and pred.max() <= 1.0
