"""Character-context-aware binarization of degraded stone inscriptions."""

from ._kernels import HAVE_COMPILED, KERNEL_LANE
from .backends import (
    ModelBinarizer,
    OracleBinarizer,
    OtsuBinarizer,
    PatchBinarizer,
    Polarity,
    SauvolaBinarizer,
    SauvolaParams,
    load_backend,
)
from .inference import InferenceConfig, binarize, coarse_predict, refine, run_pipeline
from .metrics import EvalReport, evaluate_pair, evaluate_set
from .patching import (
    DilationConfig,
    HeightStats,
    PatchBatch,
    PatchSpec,
    Region,
    RegionPartition,
    SamplingConfig,
    fixed_grid_patches,
    height_stats,
    partition_regions,
    sample_patches,
)
from .raster import (
    BinaryMask,
    Component,
    GrayImage,
    ProbabilityMap,
    StructuringElement,
    connected_components,
    dilate,
    load_gray,
    load_mask,
    resize_gray,
    resize_mask,
    save_gray,
    save_mask,
)

__version__ = "0.1.0"
