"""Confusion-matrix accumulation and class/task-level segmentation metrics.

Per class k with TP = counts[k][k], FP = column sum - TP, FN = row sum - TP:

    precision = TP / (TP + FP)
    recall    = TP / (TP + FN)
    F1        = 2 * precision * recall / (precision + recall)
    IoU       = TP / (TP + FP + FN)

A quotient with zero denominator is undefined and carried as NaN; task-level
means run over the classes where the metric is defined.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import DEFAULT_CATALOG, ClassCatalog, merge_labels, split_merged
from .errors import ValidationError


@dataclass
class ConfusionMatrix:
    """Pixel counts indexed [ground truth, prediction]."""

    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.ndim != 2 or self.counts.shape[0] != self.counts.shape[1]:
            raise ValidationError(f"confusion matrix must be square, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ValidationError("confusion matrix entries must be nonnegative")

    @classmethod
    def empty(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(np.zeros((num_classes, num_classes), dtype=np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def merge(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Associative merge of per-worker accumulations."""
        if other.num_classes != self.num_classes:
            raise ValidationError("cannot merge confusion matrices of different sizes")
        return ConfusionMatrix(self.counts + other.counts)


def accumulate_confusion(
    pred_map: np.ndarray,
    gt_map: np.ndarray,
    num_classes: int,
    cm: ConfusionMatrix | None = None,
) -> ConfusionMatrix:
    """Add one prediction/ground-truth map pair into ``cm`` (created if absent).

    Order-independent across images: accumulating two maps equals accumulating
    their concatenation.
    """
    pred = np.asarray(pred_map).ravel()
    gt = np.asarray(gt_map).ravel()
    if pred.shape != gt.shape:
        raise ValidationError(f"map shapes differ: {pred_map.shape} vs {gt_map.shape}")
    for name, values in (("prediction", pred), ("ground truth", gt)):
        if values.size and (values.min() < 0 or values.max() >= num_classes):
            raise ValidationError(f"{name} map has values outside [0, {num_classes})")
    if cm is None:
        cm = ConfusionMatrix.empty(num_classes)
    elif cm.num_classes != num_classes:
        raise ValidationError("confusion matrix size does not match num_classes")
    hist = np.bincount(
        gt.astype(np.int64) * num_classes + pred.astype(np.int64),
        minlength=num_classes * num_classes,
    ).reshape(num_classes, num_classes)
    cm.counts += hist
    return cm


@dataclass
class ClassMetrics:
    """Per-class metric arrays; undefined values (0/0) are NaN."""

    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    iou: np.ndarray
    support: np.ndarray


@dataclass
class TaskReport:
    """Class-level metrics plus their unweighted means for one task."""

    class_names: tuple[str, ...]
    classes: ClassMetrics
    m_precision: float
    m_recall: float
    m_f1: float
    m_iou: float


def _safe_divide(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.full(num.shape, np.nan)
    mask = den > 0
    out[mask] = num[mask] / den[mask]
    return out


def class_metrics(cm: ConfusionMatrix) -> ClassMetrics:
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    precision = _safe_divide(tp, tp + fp)
    recall = _safe_divide(tp, tp + fn)
    with np.errstate(invalid="ignore"):
        f1 = _safe_divide(2.0 * precision * recall, precision + recall)
    iou = _safe_divide(tp, tp + fp + fn)
    return ClassMetrics(
        precision=precision,
        recall=recall,
        f1=f1,
        iou=iou,
        support=cm.counts.sum(axis=1),
    )


def _defined_mean(values: np.ndarray) -> float:
    defined = values[~np.isnan(values)]
    return float(defined.mean()) if defined.size else math.nan


def mean_metrics(classes: ClassMetrics, class_names: tuple[str, ...]) -> TaskReport:
    """Unweighted means over classes with defined values."""
    if len(class_names) != len(classes.iou):
        raise ValidationError("class name count does not match metric arrays")
    stacked = np.stack([classes.precision, classes.recall, classes.f1, classes.iou])
    if np.isnan(stacked).all():
        raise ValidationError("all classes undefined: nothing to average")
    return TaskReport(
        class_names=tuple(class_names),
        classes=classes,
        m_precision=_defined_mean(classes.precision),
        m_recall=_defined_mean(classes.recall),
        m_f1=_defined_mean(classes.f1),
        m_iou=_defined_mean(classes.iou),
    )


def score_maps(pred_map, gt_map, num_classes: int, class_names) -> TaskReport:
    """Convenience: one map pair -> accumulated -> scored."""
    cm = accumulate_confusion(pred_map, gt_map, num_classes)
    return mean_metrics(class_metrics(cm), tuple(class_names))


def merged_to_task_reports(
    merged_pred: np.ndarray,
    gt_element: np.ndarray,
    gt_defect: np.ndarray,
    catalog: ClassCatalog = DEFAULT_CATALOG,
) -> tuple[TaskReport, TaskReport]:
    """Score merged-taxonomy predictions on both underlying tasks."""
    pred_element, pred_defect = split_merged(merged_pred)
    element = score_maps(pred_element, gt_element, catalog.num_element, catalog.element_classes)
    defect = score_maps(pred_defect, gt_defect, catalog.num_defect, catalog.defect_classes)
    return element, defect


def condition_assessment(element_pred: np.ndarray, defect_pred: np.ndarray) -> dict[int, float]:
    """Corrosion-area proportion per element class present in the prediction.

    Returns {class index: corroded fraction} for every class with at least one
    predicted pixel; classes without pixels are absent from the result.
    """
    element = np.asarray(element_pred)
    defect = np.asarray(defect_pred)
    if element.shape != defect.shape:
        raise ValidationError(f"map shapes differ: {element.shape} vs {defect.shape}")
    flat_e = element.ravel().astype(np.int64)
    flat_d = defect.ravel().astype(np.int64)
    area = np.bincount(flat_e, minlength=7)
    corroded = np.bincount(flat_e, weights=(flat_d == 1).astype(np.float64), minlength=7)
    return {
        k: float(corroded[k] / area[k])
        for k in range(len(area))
        if area[k] > 0
    }
