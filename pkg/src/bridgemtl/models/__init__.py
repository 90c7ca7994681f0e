from .config import (
    BASELINE_VARIANTS,
    CROSSTALK_MODES,
    KINDS,
    LOSSES,
    MTL_VARIANTS,
    PROJECTIONS,
    Dims,
    ModelConfig,
    variant_config,
    variant_names,
)
from .extractor import ReferenceTinyExtractor, build_extractor, register_extractor
from .heads import BranchHead, ScoreUpsampler
from .network import CrossTalkState, ModelOutput, MultiTaskSegmenter, build_model
from .projection import FeatureProjection

__all__ = [
    "BASELINE_VARIANTS",
    "BranchHead",
    "CROSSTALK_MODES",
    "CrossTalkState",
    "Dims",
    "FeatureProjection",
    "KINDS",
    "LOSSES",
    "MTL_VARIANTS",
    "ModelConfig",
    "ModelOutput",
    "MultiTaskSegmenter",
    "PROJECTIONS",
    "ReferenceTinyExtractor",
    "ScoreUpsampler",
    "build_extractor",
    "build_model",
    "register_extractor",
    "variant_config",
    "variant_names",
]
