"""Plain-text tables and machine-readable records for evaluation results.

Text tables show percentages with two decimals; the highest value in each
metric column is marked with surrounding asterisks. The CSV/JSON records keep
full float precision, so re-rendering a parsed record reproduces the text
table exactly.
"""

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import DEFAULT_CATALOG, ClassCatalog
from .manifest import SplitStats
from .metrics import TaskReport, condition_assessment

TASK_TITLES = {"element": "Bridge Element Parsing", "defect": "Corrosion Segmentation"}
METRIC_KEYS = ("m_iou", "m_precision", "m_recall", "m_f1")
METRIC_TITLES = ("mIoU", "mPrecision", "mRecall", "mF1")


@dataclass
class ComparisonRow:
    """One model's task-level numbers in the comparison table."""

    name: str
    element: dict[str, float] | None = None
    defect: dict[str, float] | None = None
    train_seconds: float | None = None
    error: str | None = None

    @classmethod
    def from_reports(
        cls,
        name: str,
        element: TaskReport | None,
        defect: TaskReport | None,
        train_seconds: float | None = None,
    ) -> "ComparisonRow":
        def pack(report):
            if report is None:
                return None
            return {key: getattr(report, key) for key in METRIC_KEYS}

        return cls(name=name, element=pack(element), defect=pack(defect), train_seconds=train_seconds)


def _fmt_pct(value: float | None) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return "-"
    return f"{100.0 * value:.2f}"


def render_comparison_text(rows: list[ComparisonRow]) -> str:
    """Comparison-table rendering: 8 metric columns, column maxima in asterisks."""
    columns = [("element", key) for key in METRIC_KEYS] + [("defect", key) for key in METRIC_KEYS]
    cells: list[list[str]] = []
    numeric: list[list[float | None]] = []
    for row in rows:
        if row.error is not None:
            numeric.append([None] * len(columns))
            cells.append([f"FAILED: {row.error}"] + [""] * (len(columns) - 1))
            continue
        values = [
            (getattr(row, task) or {}).get(key) if getattr(row, task) else None
            for task, key in columns
        ]
        numeric.append(values)
        cells.append([_fmt_pct(v) for v in values])
    for j in range(len(columns)):
        defined = [
            (i, v) for i, v in enumerate(r[j] for r in numeric)
            if v is not None and not math.isnan(v)
        ]
        if not defined:
            continue
        best = max(v for _, v in defined)
        for i, v in defined:
            if v == best:
                cells[i][j] = f"*{cells[i][j]}*"

    header_top = (
        f"{'':20s} | {TASK_TITLES['element'] + ' Task':^37s} | {TASK_TITLES['defect'] + ' Task':^37s}"
    )
    header = f"{'Network':20s} | " + " | ".join(
        " ".join(f"{t:>8s}" for t in METRIC_TITLES) for _ in range(2)
    )
    lines = [header_top, header, "-" * len(header)]
    for row, row_cells in zip(rows, cells):
        if row.error is not None:
            lines.append(f"{row.name:20s} | {row_cells[0]}")
        else:
            lines.append(
                f"{row.name:20s} | "
                + " | ".join(
                    " ".join(f"{c:>8s}" for c in row_cells[k : k + 4]) for k in (0, 4)
                )
            )
    return "\n".join(lines) + "\n"


_CSV_FIELDS = [
    "variant",
    *(f"element_{key}" for key in METRIC_KEYS),
    *(f"defect_{key}" for key in METRIC_KEYS),
    "train_seconds",
    "error",
]


def write_comparison_csv(rows: list[ComparisonRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=_CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            record: dict[str, object] = {"variant": row.name, "error": row.error or ""}
            for task in ("element", "defect"):
                values = getattr(row, task)
                for key in METRIC_KEYS:
                    value = None if values is None else values.get(key)
                    record[f"{task}_{key}"] = "" if value is None else repr(float(value))
            record["train_seconds"] = (
                "" if row.train_seconds is None else repr(float(row.train_seconds))
            )
            writer.writerow(record)


def read_comparison_csv(path: str | Path) -> list[ComparisonRow]:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for record in csv.DictReader(handle):
            def unpack(task):
                values = {
                    key: float(record[f"{task}_{key}"])
                    for key in METRIC_KEYS
                    if record[f"{task}_{key}"] != ""
                }
                return values or None

            rows.append(
                ComparisonRow(
                    name=record["variant"],
                    element=unpack("element"),
                    defect=unpack("defect"),
                    train_seconds=(
                        float(record["train_seconds"]) if record["train_seconds"] else None
                    ),
                    error=record["error"] or None,
                )
            )
    return rows


def write_comparison_json(rows: list[ComparisonRow], path: str | Path) -> None:
    payload = []
    for row in rows:
        payload.append(
            {
                "variant": row.name,
                "element": row.element,
                "defect": row.defect,
                "train_seconds": row.train_seconds,
                "error": row.error,
            }
        )
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


# --- per-class (task report) tables ------------------------------------------


def render_task_report_text(report: TaskReport, title: str) -> str:
    """One row per class plus the mean row; IoU/Precision/Recall/F1 columns."""
    lines = [
        title,
        f"{'Class':16s} " + " ".join(f"{t:>10s}" for t in ("IoU", "Precision", "Recall", "F1")),
    ]
    lines.append("-" * len(lines[1]))
    arrays = (report.classes.iou, report.classes.precision, report.classes.recall, report.classes.f1)
    for k, name in enumerate(report.class_names):
        lines.append(
            f"{name:16s} " + " ".join(f"{_fmt_pct(float(a[k])):>10s}" for a in arrays)
        )
    lines.append(
        f"{'Mean':16s} "
        + " ".join(
            f"{_fmt_pct(v):>10s}"
            for v in (report.m_iou, report.m_precision, report.m_recall, report.m_f1)
        )
    )
    return "\n".join(lines) + "\n"


def task_report_to_record(report: TaskReport) -> dict:
    def clean(values):
        return [None if math.isnan(float(v)) else float(v) for v in values]

    return {
        "class_names": list(report.class_names),
        "iou": clean(report.classes.iou),
        "precision": clean(report.classes.precision),
        "recall": clean(report.classes.recall),
        "f1": clean(report.classes.f1),
        "support": [int(v) for v in report.classes.support],
        "m_iou": report.m_iou,
        "m_precision": report.m_precision,
        "m_recall": report.m_recall,
        "m_f1": report.m_f1,
    }


def write_task_reports(
    element: TaskReport | None,
    defect: TaskReport | None,
    out_dir: str | Path,
    stem: str = "report",
) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_parts = []
    record = {}
    for task, report in (("element", element), ("defect", defect)):
        if report is None:
            continue
        text_parts.append(render_task_report_text(report, f"{TASK_TITLES[task]} Task"))
        record[task] = task_report_to_record(report)
    (out_dir / f"{stem}.txt").write_text("\n".join(text_parts), encoding="utf-8")
    (out_dir / f"{stem}.json").write_text(json.dumps(record, indent=2), encoding="utf-8")


# --- condition assessment ------------------------------------------------------


@dataclass
class ConditionRecord:
    class_name: str
    proportion: float
    corroded_pixels: int
    total_pixels: int


def condition_records(
    element_pred: np.ndarray,
    defect_pred: np.ndarray,
    catalog: ClassCatalog = DEFAULT_CATALOG,
) -> list[ConditionRecord]:
    """Per-element corrosion proportions, background excluded, sorted descending."""
    proportions = condition_assessment(element_pred, defect_pred)
    flat_e = np.asarray(element_pred).ravel()
    flat_d = np.asarray(defect_pred).ravel()
    records = []
    for k, proportion in proportions.items():
        if k == 0:
            continue  # background is not an element kind
        total = int((flat_e == k).sum())
        corroded = int(((flat_e == k) & (flat_d == 1)).sum())
        records.append(
            ConditionRecord(
                class_name=catalog.element_classes[k],
                proportion=proportion,
                corroded_pixels=corroded,
                total_pixels=total,
            )
        )
    records.sort(key=lambda r: (-r.proportion, r.class_name))
    return records


def render_split_stats(stats: SplitStats) -> str:
    """Split statistics table: counts, element pixel shares, defect area."""
    order = [name for name in ("train", "test", "total") if name in stats.splits]
    first = stats.splits[order[0]]
    element_names = list(first.element_fractions)
    defect_names = list(first.defect_fractions)
    short = [n[:7] for n in element_names]
    header = (
        f"{'Split':8s} {'Images':>6s} | "
        + " ".join(f"{s:>8s}" for s in short)
        + " | "
        + " ".join(f"{n[:9]:>9s}" for n in defect_names)
    )
    lines = ["Pixel shares per split (%)", header, "-" * len(header)]
    for name in order:
        summary = stats.splits[name]
        lines.append(
            f"{name:8s} {summary.image_count:>6d} | "
            + " ".join(f"{100 * summary.element_fractions[c]:>8.2f}" for c in element_names)
            + " | "
            + " ".join(f"{100 * summary.defect_fractions[c]:>9.2f}" for c in defect_names)
        )
    if any(stats.splits[name].instance_counts for name in order):
        lines.append("")
        lines.append("Element instance counts")
        lines.append(header.replace("Images", "      "))
        for name in order:
            counts = stats.splits[name].instance_counts or {}
            lines.append(
                f"{name:8s} {'':>6s} | "
                + " ".join(f"{counts.get(c, 0):>8d}" for c in element_names)
                + " |"
            )
    return "\n".join(lines) + "\n"


def write_split_stats_records(
    stats: SplitStats, csv_path: str | Path, json_path: str | Path
) -> None:
    order = [name for name in ("train", "test", "total") if name in stats.splits]
    first = stats.splits[order[0]]
    element_names = list(first.element_fractions)
    defect_names = list(first.defect_fractions)
    with open(csv_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["split", "images", *element_names, *defect_names])
        for name in order:
            summary = stats.splits[name]
            writer.writerow(
                [
                    name,
                    summary.image_count,
                    *(repr(summary.element_fractions[c]) for c in element_names),
                    *(repr(summary.defect_fractions[c]) for c in defect_names),
                ]
            )
    payload = {
        name: {
            "images": stats.splits[name].image_count,
            "element_fractions": stats.splits[name].element_fractions,
            "defect_fractions": stats.splits[name].defect_fractions,
            "instance_counts": stats.splits[name].instance_counts,
        }
        for name in order
    }
    Path(json_path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def render_condition_report(
    element_pred: np.ndarray,
    defect_pred: np.ndarray,
    catalog: ClassCatalog = DEFAULT_CATALOG,
) -> tuple[str, list[ConditionRecord]]:
    records = condition_records(element_pred, defect_pred, catalog)
    lines = [
        "Condition assessment (corrosion share per detected element)",
        f"{'Element':16s} {'Corroded %':>10s} {'Corroded px':>12s} {'Element px':>12s}",
    ]
    lines.append("-" * len(lines[1]))
    if not records:
        lines.append("no elements detected")
    for rec in records:
        lines.append(
            f"{rec.class_name:16s} {100.0 * rec.proportion:>10.2f} "
            f"{rec.corroded_pixels:>12d} {rec.total_pixels:>12d}"
        )
    return "\n".join(lines) + "\n", records
