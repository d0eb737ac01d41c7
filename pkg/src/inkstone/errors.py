"""Exception hierarchy for the inkstone pipeline."""


class InkstoneError(Exception):
    """Base class for all pipeline errors."""


class InvalidDims(InkstoneError):
    """Raster dimensions are unusable (empty or negative)."""


class DimMismatch(InkstoneError):
    """Two rasters that must share a shape do not."""


class InvalidParam(InkstoneError):
    """A configuration value violates its invariant."""


class EmptyMask(InkstoneError):
    """An operation requiring foreground components got none."""


class MissingGroundTruth(InkstoneError):
    """The oracle backend has no ground truth for the requested region."""


class ModelLoadError(InkstoneError):
    """The model file is missing or cannot be deserialized."""


class SignatureMismatch(ModelLoadError):
    """The model does not satisfy the N x 1 x 512 x 512 contract."""


class InferenceError(InkstoneError):
    """The model produced unusable output at predict time."""


class EmptySet(InkstoneError):
    """An aggregate was requested over zero items."""


class UnmatchedPair(InkstoneError):
    """Prediction/ground-truth directories do not pair up by stem."""


class UnknownMethod(InkstoneError):
    """An unrecognized algorithm name was requested."""
