"""Patch-level binarizer backends.

Every backend maps a gray patch to a probability map of the same shape
with values in [0, 1]. ``input_side`` declares the square side the
backend expects (None = any side, no resizing needed). ``predict`` also
receives the patch's window in source-image coordinates so that
location-aware backends (the ground-truth oracle) can work; content-only
backends ignore it.

The neural backend loads a ``torch.export`` program archive (.pt2) with
the contract ``forward(input: float32 N x 1 x 512 x 512 in [0, 1]) ->
prob`` of the same shape, sigmoid already applied inside the graph and
the batch dimension exported as dynamic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InferenceError,
    InvalidParam,
    MissingGroundTruth,
    ModelLoadError,
    SignatureMismatch,
    UnknownMethod,
)
from .raster import (
    BinaryMask,
    GrayImage,
    ProbabilityMap,
    ensure_gray,
    ensure_mask,
    resize_mask,
)

MODEL_SIDE = 512
MODEL_PATH_ENV = "INKSTONE_MODEL"

Window = tuple[int, int, int]  # x, y, side in source-image coordinates


class Polarity:
    DARK_TEXT = "dark"
    LIGHT_TEXT = "light"


class PatchBinarizer:
    """Base class; subclasses implement predict()."""

    name: str = "base"
    input_side: int | None = None

    def predict(self, patch: GrayImage, window: Window | None = None) -> ProbabilityMap:
        raise NotImplementedError

    def predict_batch(
        self,
        patches: list[GrayImage],
        windows: list[Window] | None = None,
        workers: int = 1,
    ) -> list[ProbabilityMap]:
        """Predict many patches; output order always matches input order."""
        if windows is None:
            windows = [None] * len(patches)
        if workers <= 1 or len(patches) <= 1:
            return [self.predict(p, w) for p, w in zip(patches, windows)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(self.predict, patches, windows))


def otsu_threshold(img: GrayImage) -> int:
    """Threshold T maximizing between-class variance of {p < T} vs {p >= T}.

    Ties pick the smallest T; a constant image returns its own value.
    """
    img = ensure_gray(img)
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    total = img.size
    lo = int(img.min())
    if lo == int(img.max()):
        return lo
    # cumulative counts/sums of the dark class {p < T} for T = 0..255
    w0 = np.concatenate(([0.0], np.cumsum(hist)))[:256]
    s0 = np.concatenate(([0.0], np.cumsum(hist * np.arange(256))))[:256]
    w1 = total - w0
    s1 = s0[-1] + hist[255] * 255 - s0
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = np.where(w0 > 0, s0 / w0, 0.0)
        mu1 = np.where(w1 > 0, s1 / w1, 0.0)
    var_between = np.where((w0 > 0) & (w1 > 0), w0 * w1 * (mu0 - mu1) ** 2, 0.0)
    return int(np.argmax(var_between))


def otsu_binarize(img: GrayImage, polarity: str = Polarity.DARK_TEXT) -> ProbabilityMap:
    """Global threshold classification as a hard {0, 1} probability map."""
    img = ensure_gray(img)
    t = otsu_threshold(img)
    dark = img < t
    text = dark if polarity == Polarity.DARK_TEXT else ~dark
    return text.astype(np.float32)


@dataclass(frozen=True)
class SauvolaParams:
    window: int = 25
    k: float = 0.2
    r: float = 128.0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise InvalidParam("sauvola window must be odd and >= 3")
        if self.r <= 0:
            raise InvalidParam("sauvola r must be positive")


def sauvola_threshold_map(img: GrayImage, params: SauvolaParams) -> np.ndarray:
    """Per-pixel threshold m * (1 + k * (s/r - 1)) from windowed statistics.

    Windows are clipped at the image border. Statistics come from integral
    images; the variance is computed as E[x^2] - E[x]^2, which is exact
    here because the integer window sums are exactly representable.
    """
    img = ensure_gray(img)
    h, w = img.shape
    rad = params.window // 2
    ii1 = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii2 = np.zeros((h + 1, w + 1), dtype=np.float64)
    f = img.astype(np.float64)
    np.cumsum(np.cumsum(f, axis=0), axis=1, out=ii1[1:, 1:])
    np.cumsum(np.cumsum(f * f, axis=0), axis=1, out=ii2[1:, 1:])
    y0 = np.clip(np.arange(h) - rad, 0, h)
    y1 = np.clip(np.arange(h) + rad + 1, 0, h)
    x0 = np.clip(np.arange(w) - rad, 0, w)
    x1 = np.clip(np.arange(w) + rad + 1, 0, w)

    def window_sum(ii):
        return (ii[y1[:, None], x1[None, :]] - ii[y0[:, None], x1[None, :]]
                - ii[y1[:, None], x0[None, :]] + ii[y0[:, None], x0[None, :]])

    n = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    mean = window_sum(ii1) / n
    var = window_sum(ii2) / n - mean * mean
    std = np.sqrt(np.maximum(var, 0.0))
    return mean * (1.0 + params.k * (std / params.r - 1.0))


def sauvola_binarize(
    img: GrayImage,
    params: SauvolaParams | None = None,
    polarity: str = Polarity.DARK_TEXT,
) -> ProbabilityMap:
    """Local adaptive threshold classification as a hard {0, 1} map."""
    params = params or SauvolaParams()
    t = sauvola_threshold_map(img, params)
    dark = img < t
    text = dark if polarity == Polarity.DARK_TEXT else ~dark
    return text.astype(np.float32)


class OtsuBinarizer(PatchBinarizer):
    name = "otsu"
    input_side = None

    def __init__(self, polarity: str = Polarity.DARK_TEXT):
        self.polarity = polarity

    def predict(self, patch, window=None):
        return otsu_binarize(patch, self.polarity)


class SauvolaBinarizer(PatchBinarizer):
    name = "sauvola"
    input_side = None

    def __init__(self, params: SauvolaParams | None = None, polarity: str = Polarity.DARK_TEXT):
        self.params = params or SauvolaParams()
        self.polarity = polarity

    def predict(self, patch, window=None):
        return sauvola_binarize(patch, self.params, self.polarity)


class OracleBinarizer(PatchBinarizer):
    """Test double that answers with the registered ground truth.

    With ``side`` set it mimics a fixed-input model (the pipeline resizes
    crops to that side and the oracle returns the ground-truth crop resized
    the same way); with ``side=None`` it answers at native resolution.
    """

    name = "oracle"

    def __init__(self, gt: BinaryMask, side: int | None = MODEL_SIDE):
        if gt is None:
            raise MissingGroundTruth("oracle backend requires a ground-truth mask")
        self.gt = ensure_mask(gt)
        self.input_side = side

    def predict(self, patch, window=None):
        patch = ensure_gray(patch)
        if window is None:
            raise MissingGroundTruth("oracle backend needs the patch window")
        x, y, side = window
        gh, gw = self.gt.shape
        if x < 0 or y < 0 or x + side > gw or y + side > gh:
            raise MissingGroundTruth(
                f"window {window} outside the registered ground truth {gw}x{gh}")
        crop = self.gt[y:y + side, x:x + side]
        oh, ow = patch.shape
        return resize_mask(crop, ow, oh).astype(np.float32)


class ModelBinarizer(PatchBinarizer):
    """Exported-program model runner satisfying the N x 1 x 512 x 512 contract."""

    name = "model"
    input_side = MODEL_SIDE

    def __init__(self, model_path: str | Path, batch_size: int = 8):
        try:
            import torch
        except ImportError as exc:
            raise ModelLoadError("torch is required for the model backend") from exc
        self._torch = torch
        path = Path(model_path)
        if not path.is_file():
            raise ModelLoadError(f"model file not found: {path}")
        try:
            self.model = torch.export.load(str(path)).module()
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {path}: {exc}") from exc
        self.batch_size = batch_size
        self._probe()

    def _probe(self):
        torch = self._torch
        side = self.input_side
        for n in (1, 2):
            probe = torch.zeros((n, 1, side, side), dtype=torch.float32)
            try:
                with torch.no_grad():
                    out = self.model(probe)
            except Exception as exc:
                if n == 2:
                    # static-batch export: degrade to one patch per call
                    self.batch_size = 1
                    return
                raise SignatureMismatch(
                    f"model rejected a 1x1x{side}x{side} input: {exc}") from exc
            if not torch.is_tensor(out) or tuple(out.shape) != (n, 1, side, side):
                got = tuple(out.shape) if torch.is_tensor(out) else type(out).__name__
                raise SignatureMismatch(
                    f"model output {got} does not match {n}x1x{side}x{side}")

    def _run(self, batch: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = torch.from_numpy(batch[:, None, :, :].astype(np.float32) / 255.0)
        try:
            with torch.no_grad():
                out = self.model(x)
        except Exception as exc:
            raise InferenceError(f"model forward failed: {exc}") from exc
        prob = out.numpy()[:, 0, :, :]
        if not np.isfinite(prob).all():
            raise InferenceError("model produced non-finite probabilities")
        if prob.min() < -1e-3 or prob.max() > 1.0 + 1e-3:
            raise InferenceError(
                f"model output range [{prob.min():.4f}, {prob.max():.4f}] "
                "violates the [0, 1] contract")
        return np.clip(prob, 0.0, 1.0)

    def predict(self, patch, window=None):
        patch = ensure_gray(patch)
        if patch.shape != (self.input_side, self.input_side):
            raise InferenceError(
                f"model backend expects {self.input_side}x{self.input_side} patches, "
                f"got {patch.shape}")
        return self._run(patch[None, :, :])[0]

    def predict_batch(self, patches, windows=None, workers: int = 1):
        # chunked tensor batching; chunking is fixed so results do not
        # depend on the worker setting
        out: list[ProbabilityMap] = []
        for i in range(0, len(patches), self.batch_size):
            chunk = patches[i:i + self.batch_size]
            for p in chunk:
                ensure_gray(p)
                if p.shape != (self.input_side, self.input_side):
                    raise InferenceError(
                        f"model backend expects {self.input_side}x{self.input_side} "
                        f"patches, got {p.shape}")
            preds = self._run(np.stack(chunk))
            out.extend(preds[j] for j in range(preds.shape[0]))
        return out


def model_binarizer(model_path: str | Path) -> ModelBinarizer:
    return ModelBinarizer(model_path)


def oracle_binarizer(gt: BinaryMask, side: int | None = MODEL_SIDE) -> OracleBinarizer:
    return OracleBinarizer(gt, side)


def load_backend(
    selector: str,
    *,
    gt: BinaryMask | None = None,
    sauvola: SauvolaParams | None = None,
    polarity: str = Polarity.DARK_TEXT,
) -> PatchBinarizer:
    """Resolve a CLI backend selector: otsu, sauvola, oracle, model[:path]."""
    if selector == "otsu":
        return OtsuBinarizer(polarity)
    if selector == "sauvola":
        return SauvolaBinarizer(sauvola, polarity)
    if selector == "oracle":
        if gt is None:
            raise MissingGroundTruth("oracle backend requires --gt")
        return OracleBinarizer(gt)
    if selector == "model" or selector.startswith("model:"):
        path = selector[len("model:"):] if ":" in selector else os.environ.get(MODEL_PATH_ENV, "")
        if not path:
            raise ModelLoadError(
                f"no model path given and ${MODEL_PATH_ENV} is not set")
        return ModelBinarizer(path)
    raise UnknownMethod(f"unknown backend: {selector!r}")
