"""Label taxonomies for bridge element parsing and corrosion segmentation.

The element taxonomy has 7 classes (background + 6 structural elements),
the defect taxonomy 2 (no-corrosion / corrosion). The merged taxonomy is
their full 14-class product, so merging and splitting label maps are exact
inverses of each other.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

ELEMENT_CLASSES = (
    "Background",
    "Bearing",
    "Bracing",
    "Deck",
    "Floor beam",
    "Girder",
    "Substructure",
)
DEFECT_CLASSES = ("No corrosion", "Corrosion")

BACKGROUND = 0
CORROSION = 1


def _merged_names(element_classes, defect_classes):
    return tuple(f"{e} / {d}" for d in defect_classes for e in element_classes)


@dataclass(frozen=True)
class ClassCatalog:
    """The element, defect, and merged (product) label taxonomies."""

    element_classes: tuple[str, ...] = ELEMENT_CLASSES
    defect_classes: tuple[str, ...] = DEFECT_CLASSES

    def __post_init__(self):
        if len(self.element_classes) != 7:
            raise ValidationError("element taxonomy must have 7 classes including background")
        if len(self.defect_classes) != 2:
            raise ValidationError("defect taxonomy must have 2 classes")
        for names in (self.element_classes, self.defect_classes):
            if len(set(names)) != len(names):
                raise ValidationError(f"class names must be unique, got {names}")

    @property
    def merged_classes(self) -> tuple[str, ...]:
        return _merged_names(self.element_classes, self.defect_classes)

    @property
    def num_element(self) -> int:
        return len(self.element_classes)

    @property
    def num_defect(self) -> int:
        return len(self.defect_classes)

    @property
    def num_merged(self) -> int:
        return self.num_element * self.num_defect


DEFAULT_CATALOG = ClassCatalog()


def _check_range(name: str, values: np.ndarray, limit: int) -> None:
    if values.size and (values.min() < 0 or values.max() >= limit):
        raise ValidationError(
            f"{name} class index out of range: found values outside [0, {limit})"
        )


def merge_labels(element_map: np.ndarray, defect_map: np.ndarray) -> np.ndarray:
    """Combine element and defect label maps into the 14-class product map.

    merged(p) = element(p) + 7 * defect(p); a bijection per pixel, so merged
    predictions can be scored on both tasks exactly.
    """
    element_map = np.asarray(element_map)
    defect_map = np.asarray(defect_map)
    if element_map.shape != defect_map.shape:
        raise ValidationError(
            f"label maps differ in shape: {element_map.shape} vs {defect_map.shape}"
        )
    _check_range("element", element_map, 7)
    _check_range("defect", defect_map, 2)
    return (element_map.astype(np.int64) + 7 * defect_map.astype(np.int64)).astype(np.uint8)


def split_merged(merged_map: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Invert :func:`merge_labels`: element = merged mod 7, defect = merged div 7."""
    merged_map = np.asarray(merged_map)
    _check_range("merged", merged_map, 14)
    merged = merged_map.astype(np.int64)
    return (merged % 7).astype(np.uint8), (merged // 7).astype(np.uint8)
