"""Joint bridge-element parsing and corrosion segmentation toolkit."""

from .augment import AugmentationConfig, augment, derive_sample_seed
from .catalog import DEFAULT_CATALOG, ClassCatalog, merge_labels, split_merged
from .checkpoint import (
    load_checkpoint,
    load_pretrained_backbone,
    save_backbone,
    save_checkpoint,
)
from .errors import ValidationError
from .manifest import DatasetManifest, SplitStats, compute_split_stats, load_manifest
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    TaskReport,
    accumulate_confusion,
    class_metrics,
    condition_assessment,
    mean_metrics,
    merged_to_task_reports,
)
from .models import (
    CrossTalkState,
    Dims,
    ModelConfig,
    MultiTaskSegmenter,
    build_model,
    register_extractor,
    variant_config,
    variant_names,
)
from .samples import Sample, load_sample
from .synthetic import make_synthetic_dataset
from .training import TrainConfig, TrainHistory, evaluate, lr_at, train

__all__ = [
    "AugmentationConfig",
    "ClassCatalog",
    "ClassMetrics",
    "ConfusionMatrix",
    "CrossTalkState",
    "DEFAULT_CATALOG",
    "DatasetManifest",
    "Dims",
    "ModelConfig",
    "MultiTaskSegmenter",
    "Sample",
    "SplitStats",
    "TaskReport",
    "TrainConfig",
    "TrainHistory",
    "ValidationError",
    "accumulate_confusion",
    "augment",
    "build_model",
    "class_metrics",
    "compute_split_stats",
    "condition_assessment",
    "derive_sample_seed",
    "evaluate",
    "load_checkpoint",
    "load_manifest",
    "load_pretrained_backbone",
    "load_sample",
    "lr_at",
    "make_synthetic_dataset",
    "mean_metrics",
    "merge_labels",
    "merged_to_task_reports",
    "register_extractor",
    "save_backbone",
    "save_checkpoint",
    "split_merged",
    "train",
    "variant_config",
    "variant_names",
]
