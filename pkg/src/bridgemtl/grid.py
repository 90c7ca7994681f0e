"""Experiment-grid runner: train and score every variant under one protocol.

Each variant gets the same data, seed, and schedule; training re-seeds per
variant, so results do not depend on execution order. A variant failure is
recorded and the grid continues.
"""

import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .manifest import DatasetManifest
from .metrics import TaskReport
from .models import Dims, ModelConfig, build_model, variant_config, variant_names
from .report import (
    ComparisonRow,
    render_comparison_text,
    write_comparison_csv,
    write_comparison_json,
    write_task_reports,
)
from .training import TrainConfig, evaluate, train
from .viz import save_comparison_figure, save_loss_figure


@dataclass
class GridSpec:
    train: TrainConfig
    output_dir: Path
    variants: list[str] = field(default_factory=variant_names)
    dims: Dims = field(default_factory=Dims)
    extractor: str = "reference_tiny"
    crosstalk_mode: str | None = None
    eval_split: str = "test"
    figures: bool = True

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if len(set(self.variants)) != len(self.variants):
            raise ValidationError("variant names must be unique")
        for name in self.variants:
            variant_config(name, self.dims, self.extractor, self.crosstalk_mode)  # validates


@dataclass
class VariantResult:
    name: str
    config: ModelConfig | None
    element: TaskReport | None = None
    defect: TaskReport | None = None
    train_seconds: float | None = None
    error: str | None = None


def run_variant(
    name: str, spec: GridSpec, manifest: DatasetManifest
) -> VariantResult:
    config = variant_config(name, spec.dims, spec.extractor, spec.crosstalk_mode)
    out_dir = spec.output_dir / name
    model = build_model(config, seed=spec.train.seed)
    started = time.perf_counter()
    _, history = train(model, manifest, spec.train, run_dir=out_dir)
    elapsed = time.perf_counter() - started
    element, defect = evaluate(model, manifest, spec.eval_split)
    write_task_reports(element, defect, out_dir, stem="report")
    if spec.figures:
        save_loss_figure(history, out_dir / "loss_curves.png")
    return VariantResult(
        name=name,
        config=config,
        element=element,
        defect=defect,
        train_seconds=elapsed,
    )


def run_grid(spec: GridSpec, manifest: DatasetManifest) -> list[VariantResult]:
    """Run every variant; write the comparison table, records, and figure."""
    spec.output_dir.mkdir(parents=True, exist_ok=True)
    results: list[VariantResult] = []
    for name in spec.variants:
        try:
            results.append(run_variant(name, spec, manifest))
        except Exception as exc:  # keep the grid going, remember the failure
            results.append(
                VariantResult(name=name, config=None, error=f"{type(exc).__name__}: {exc}")
            )
            (spec.output_dir / name).mkdir(parents=True, exist_ok=True)
            (spec.output_dir / name / "error.txt").write_text(
                traceback.format_exc(), encoding="utf-8"
            )
    rows = [
        ComparisonRow.from_reports(r.name, r.element, r.defect, r.train_seconds)
        if r.error is None
        else ComparisonRow(name=r.name, error=r.error)
        for r in results
    ]
    (spec.output_dir / "comparison.txt").write_text(
        render_comparison_text(rows), encoding="utf-8"
    )
    write_comparison_csv(rows, spec.output_dir / "comparison.csv")
    write_comparison_json(rows, spec.output_dir / "comparison.json")
    if spec.figures:
        save_comparison_figure(rows, spec.output_dir / "comparison.png")
    return results


def grid_failed(results: list[VariantResult]) -> bool:
    return any(r.error is not None for r in results)
