"""Overlay composites (pixel-exact, via PIL) and report figures (matplotlib).

The overlay palette is fixed so outputs are comparable across runs:

    Background   (64, 64, 64)     Floor beam  (166, 86, 40)
    Bearing      (31, 119, 180)   Girder      (148, 103, 189)
    Bracing      (44, 160, 44)    Substructure(23, 190, 207)
    Deck         (255, 215, 0)    Corrosion   (214, 39, 40)
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from PIL import Image

from .errors import ValidationError
from .report import ComparisonRow, ConditionRecord

ELEMENT_PALETTE = np.array(
    [
        [64, 64, 64],
        [31, 119, 180],
        [44, 160, 44],
        [255, 215, 0],
        [166, 86, 40],
        [148, 103, 189],
        [23, 190, 207],
    ],
    dtype=np.uint8,
)
CORROSION_COLOR = np.array([214, 39, 40], dtype=np.uint8)
NO_CORROSION_COLOR = np.array([225, 225, 225], dtype=np.uint8)
HATCH_COLOR = np.array([30, 10, 10], dtype=np.uint8)
GUTTER = 4


def colorize_mask(mask: np.ndarray, palette: np.ndarray = ELEMENT_PALETTE) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.size and (mask.min() < 0 or mask.max() >= len(palette)):
        raise ValidationError(f"mask values exceed palette size {len(palette)}")
    return palette[mask]


def _hatch(base: np.ndarray, where: np.ndarray) -> np.ndarray:
    """Diagonal stripes over ``where`` pixels; period 6, width 2."""
    h, w = where.shape
    yy, xx = np.mgrid[0:h, 0:w]
    stripes = ((xx + yy) % 6) < 2
    out = base.copy()
    out[where & stripes] = HATCH_COLOR
    return out


def render_overlay(
    image: np.ndarray,
    element_pred: np.ndarray,
    defect_pred: np.ndarray,
    path: str | Path,
    palette: np.ndarray = ELEMENT_PALETTE,
) -> Path:
    """Write a 4-panel composite: input | elements | corrosion | combined.

    Byte-deterministic for fixed inputs; panel pixels are exact palette
    lookups (the combined panel hatches corrosion over the element colors).
    """
    image = np.asarray(image)
    element_pred = np.asarray(element_pred)
    defect_pred = np.asarray(defect_pred)
    if image.shape[:2] != element_pred.shape or element_pred.shape != defect_pred.shape:
        raise ValidationError("image and prediction shapes disagree")
    element_panel = colorize_mask(element_pred, palette)
    corroded = defect_pred == 1
    defect_panel = np.where(corroded[..., None], CORROSION_COLOR, NO_CORROSION_COLOR).astype(np.uint8)
    combined_panel = _hatch(element_panel, corroded)
    h = image.shape[0]
    gutter = np.full((h, GUTTER, 3), 255, dtype=np.uint8)
    composite = np.concatenate(
        [image, gutter, element_panel, gutter, defect_panel, gutter, combined_panel], axis=1
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(composite).save(path)
    return path


def panel_origins(width: int) -> dict[str, int]:
    """Column offset of each panel in a composite of per-panel width ``width``."""
    return {
        "input": 0,
        "element": width + GUTTER,
        "defect": 2 * (width + GUTTER),
        "combined": 3 * (width + GUTTER),
    }


def save_mask_png(mask: np.ndarray, path: str | Path) -> Path:
    """Write a class-index map as an 8-bit single-channel PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(mask).astype(np.uint8)).save(path)
    return path


# --- matplotlib report figures -------------------------------------------------


def save_loss_figure(history, path: str | Path) -> Path:
    """Loss curves (and learning rate / task-noise terms) over steps."""
    steps = [r.step for r in history.steps]
    fig, (ax_loss, ax_lr) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    ax_loss.plot(steps, [r.loss_total for r in history.steps], label="total")
    if history.steps and history.steps[0].loss_element is not None:
        ax_loss.plot(steps, [r.loss_element for r in history.steps], label="element")
    if history.steps and history.steps[0].loss_defect is not None:
        ax_loss.plot(steps, [r.loss_defect for r in history.steps], label="defect")
    ax_loss.set_ylabel("loss")
    ax_loss.legend()
    ax_lr.plot(steps, [r.lr for r in history.steps], label="lr")
    if history.steps and history.steps[0].s_element is not None:
        ax_s = ax_lr.twinx()
        ax_s.plot(steps, [r.s_element for r in history.steps], "C2", label="s_element")
        ax_s.plot(steps, [r.s_defect for r in history.steps], "C3", label="s_defect")
        ax_s.set_ylabel("log variance")
        ax_s.legend(loc="upper right")
    ax_lr.set_yscale("log")
    ax_lr.set_xlabel("step")
    ax_lr.set_ylabel("learning rate")
    ax_lr.legend(loc="upper left")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_comparison_figure(rows: list[ComparisonRow], path: str | Path) -> Path:
    """Grouped bars of task mIoU per variant."""
    ok = [r for r in rows if r.error is None]
    names = [r.name for r in ok]
    x = np.arange(len(ok))
    fig, ax = plt.subplots(figsize=(max(6, 0.8 * len(ok) + 2), 4.5))
    width = 0.38
    element = [100 * r.element["m_iou"] if r.element else np.nan for r in ok]
    defect = [100 * r.defect["m_iou"] if r.defect else np.nan for r in ok]
    ax.bar(x - width / 2, element, width, label="element mIoU")
    ax.bar(x + width / 2, defect, width, label="defect mIoU")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=45, ha="right")
    ax.set_ylabel("mIoU (%)")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def save_condition_figure(records: list[ConditionRecord], path: str | Path) -> Path:
    """Horizontal bars of the corrosion share per detected element class."""
    fig, ax = plt.subplots(figsize=(6, max(2.0, 0.5 * len(records) + 1)))
    if records:
        names = [r.class_name for r in records][::-1]
        values = [100 * r.proportion for r in records][::-1]
        ax.barh(names, values, color="firebrick")
    else:
        ax.text(0.5, 0.5, "no elements detected", ha="center", va="center")
        ax.set_axis_off()
    ax.set_xlabel("corroded area (%)")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
