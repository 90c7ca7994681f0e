"""The optimization loop: schedule, batching, losses, history, evaluation.

Learning rate decays geometrically from lr_init to lr_min over total_steps,
applied per optimization step. Shuffling is per-epoch with a seed-derived
permutation and the last partial batch is kept, so a fixed seed yields a
bit-identical trajectory in single-worker mode.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .augment import AugmentationConfig, augment, derive_sample_seed
from .catalog import DEFAULT_CATALOG, merge_labels, split_merged
from .checkpoint import save_checkpoint
from .errors import ValidationError
from .losses import additive_loss, cross_entropy, uncertainty_loss
from .manifest import DatasetManifest
from .metrics import (
    ConfusionMatrix,
    TaskReport,
    accumulate_confusion,
    class_metrics,
    mean_metrics,
)
from .models import CrossTalkState, MultiTaskSegmenter
from .samples import Sample, load_sample


@dataclass
class TrainConfig:
    total_steps: int
    lr_init: float = 5e-4
    lr_min: float = 5e-6
    batch_size: int = 8
    seed: int = 0
    optimizer: str = "adam"
    eval_every: int = 0
    augmentation: AugmentationConfig = field(default_factory=AugmentationConfig)

    def __post_init__(self):
        if self.total_steps < 1:
            raise ValidationError(f"total_steps must be >= 1, got {self.total_steps}")
        if not 0 < self.lr_min <= self.lr_init:
            raise ValidationError(
                f"need 0 < lr_min <= lr_init, got lr_min={self.lr_min}, lr_init={self.lr_init}"
            )
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.optimizer != "adam":
            raise ValidationError(f"unsupported optimizer {self.optimizer!r}")
        if self.eval_every < 0:
            raise ValidationError("eval_every must be >= 0 (0 disables)")


def lr_at(step: int, cfg: TrainConfig) -> float:
    """Geometric decay lr_init * (lr_min / lr_init) ** (step / total_steps)."""
    if not 0 <= step <= cfg.total_steps:
        raise ValidationError(f"step {step} outside [0, {cfg.total_steps}]")
    if step == 0:
        return cfg.lr_init
    if step == cfg.total_steps:
        return cfg.lr_min
    return cfg.lr_init * (cfg.lr_min / cfg.lr_init) ** (step / cfg.total_steps)


@dataclass
class StepRecord:
    step: int
    lr: float
    loss_total: float
    loss_element: float | None = None
    loss_defect: float | None = None
    s_element: float | None = None
    s_defect: float | None = None


@dataclass
class EvalRecord:
    step: int
    element: TaskReport | None
    defect: TaskReport | None


@dataclass
class TrainHistory:
    steps: list[StepRecord] = field(default_factory=list)
    evals: list[EvalRecord] = field(default_factory=list)


def batch_tensors(samples: list[Sample]):
    """Stack samples into model-ready tensors (images scaled to [0, 1])."""
    images = torch.from_numpy(
        np.stack([s.image for s in samples]).astype(np.float32) / 255.0
    ).permute(0, 3, 1, 2)
    elements = torch.from_numpy(np.stack([s.element_map for s in samples]).astype(np.int64))
    defects = torch.from_numpy(np.stack([s.defect_map for s in samples]).astype(np.int64))
    return images, elements, defects


def _epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng(derive_sample_seed(seed, "epoch-order", epoch)).permutation(n)


def _needs_state(model: MultiTaskSegmenter) -> bool:
    cfg = model.config
    return cfg.kind == "mtl" and cfg.crosstalk and cfg.crosstalk_mode == "stale_buffer"


def _step_losses(model: MultiTaskSegmenter, out, elements, defects):
    """(total, loss_element, loss_defect) per the model kind and loss choice."""
    kind = model.config.kind
    if kind == "mtl":
        loss_e = cross_entropy(out.element_logits, elements)
        loss_d = cross_entropy(out.defect_logits, defects)
        if model.config.loss == "uncertainty":
            total = uncertainty_loss(loss_e, loss_d, model.uncertainty)
        else:
            total = additive_loss(loss_e, loss_d)
        return total, loss_e, loss_d
    if kind == "single_element":
        loss_e = cross_entropy(out.element_logits, elements)
        return loss_e, loss_e, None
    if kind == "single_defect":
        loss_d = cross_entropy(out.defect_logits, defects)
        return loss_d, None, loss_d
    merged = torch.from_numpy(
        merge_labels(elements.numpy().astype(np.uint8), defects.numpy().astype(np.uint8))
    ).long()
    total = cross_entropy(out.merged_logits, merged)
    return total, None, None


def train(
    model: MultiTaskSegmenter,
    manifest: DatasetManifest,
    cfg: TrainConfig,
    run_dir: str | Path | None = None,
) -> tuple[MultiTaskSegmenter, TrainHistory]:
    """Optimize the model on the train split; deterministic for a fixed seed."""
    entries = manifest.split_entries("train")
    if not entries:
        raise ValidationError("train split is empty")
    dims = model.config.dims
    if (dims.num_element_classes, dims.num_defect_classes) != (
        DEFAULT_CATALOG.num_element,
        DEFAULT_CATALOG.num_defect,
    ):
        raise ValidationError("model class counts do not match the label taxonomy")

    torch.manual_seed(cfg.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=cfg.lr_init)
    state = CrossTalkState() if _needs_state(model) else None
    history = TrainHistory()
    history_file = None
    if run_dir is not None:
        run_dir = Path(run_dir)
        run_dir.mkdir(parents=True, exist_ok=True)
        history_file = (run_dir / "history.jsonl").open("w", encoding="utf-8")

    best_miou = -math.inf
    model.train()
    step = 0
    epoch = 0
    try:
        while step < cfg.total_steps:
            order = _epoch_order(len(entries), cfg.seed, epoch)
            for start in range(0, len(order), cfg.batch_size):
                if step >= cfg.total_steps:
                    break
                batch_entries = [entries[i] for i in order[start : start + cfg.batch_size]]
                samples = []
                for entry in batch_entries:
                    sample = load_sample(entry, dims.image_size)
                    rng = np.random.default_rng(
                        derive_sample_seed(cfg.augmentation.seed, entry.id, epoch)
                    )
                    samples.append(augment(sample, cfg.augmentation, rng))
                images, elements, defects = batch_tensors(samples)

                lr = lr_at(step, cfg)
                for group in optimizer.param_groups:
                    group["lr"] = lr
                out = model(images, state)
                total, loss_e, loss_d = _step_losses(model, out, elements, defects)
                if not torch.isfinite(total):
                    raise RuntimeError(
                        f"non-finite loss at step {step}: total={float(total)}, "
                        f"element={None if loss_e is None else float(loss_e)}, "
                        f"defect={None if loss_d is None else float(loss_d)}"
                    )
                optimizer.zero_grad()
                total.backward()
                optimizer.step()

                record = StepRecord(
                    step=step,
                    lr=lr,
                    loss_total=float(total.detach()),
                    loss_element=None if loss_e is None else float(loss_e.detach()),
                    loss_defect=None if loss_d is None else float(loss_d.detach()),
                )
                if hasattr(model, "uncertainty"):
                    record.s_element = float(model.uncertainty.s_element.detach())
                    record.s_defect = float(model.uncertainty.s_defect.detach())
                history.steps.append(record)
                if history_file is not None:
                    history_file.write(json.dumps(asdict(record)) + "\n")
                step += 1

                if cfg.eval_every and step % cfg.eval_every == 0:
                    if manifest.split_entries("test"):
                        element_rep, defect_rep = evaluate(model, manifest, "test")
                        history.evals.append(EvalRecord(step, element_rep, defect_rep))
                        mious = [r.m_iou for r in (element_rep, defect_rep) if r is not None]
                        mean_miou = sum(mious) / len(mious)
                        if run_dir is not None:
                            save_checkpoint(run_dir / "last.pt", model)
                            if mean_miou > best_miou:
                                best_miou = mean_miou
                                save_checkpoint(run_dir / "best.pt", model)
            epoch += 1
    finally:
        if history_file is not None:
            history_file.close()
    if run_dir is not None:
        save_checkpoint(run_dir / "last.pt", model)
    return model, history


def predict_maps(model: MultiTaskSegmenter, images: torch.Tensor, state=None):
    """Argmax class maps per task: {"element": ..., "defect": ...} as numpy.

    Merged models are projected back onto both tasks.
    """
    out = model(images, state)
    preds = {}
    if model.config.kind == "merged":
        merged = out.merged_logits.argmax(dim=1).numpy().astype(np.uint8)
        preds["element"], preds["defect"] = split_merged(merged)
        return preds
    if out.element_logits is not None:
        preds["element"] = out.element_logits.argmax(dim=1).numpy().astype(np.uint8)
    if out.defect_logits is not None:
        preds["defect"] = out.defect_logits.argmax(dim=1).numpy().astype(np.uint8)
    return preds


def evaluate(
    model: MultiTaskSegmenter,
    manifest: DatasetManifest,
    split: str = "test",
) -> tuple[TaskReport | None, TaskReport | None]:
    """Score the model over a split with one global confusion matrix per task."""
    entries = manifest.split_entries(split)
    if not entries:
        raise ValidationError(f"{split} split is empty")
    catalog = DEFAULT_CATALOG
    dims = model.config.dims
    was_training = model.training
    model.eval()
    state = CrossTalkState() if _needs_state(model) else None
    cm_element: ConfusionMatrix | None = None
    cm_defect: ConfusionMatrix | None = None
    with torch.no_grad():
        for entry in entries:
            sample = load_sample(entry, dims.image_size)
            images, _, _ = batch_tensors([sample])
            preds = predict_maps(model, images, state)
            if "element" in preds:
                cm_element = accumulate_confusion(
                    preds["element"][0], sample.element_map, catalog.num_element, cm_element
                )
            if "defect" in preds:
                cm_defect = accumulate_confusion(
                    preds["defect"][0], sample.defect_map, catalog.num_defect, cm_defect
                )
    model.train(was_training)
    element_report = (
        mean_metrics(class_metrics(cm_element), catalog.element_classes)
        if cm_element is not None
        else None
    )
    defect_report = (
        mean_metrics(class_metrics(cm_defect), catalog.defect_classes)
        if cm_defect is not None
        else None
    )
    return element_report, defect_report
