"""Sample loading and standardization to the model's input size."""

from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np
from PIL import Image

from .catalog import DEFAULT_CATALOG, ClassCatalog
from .errors import ValidationError


@dataclass
class Sample:
    """One RGB image with aligned element and defect label maps."""

    id: str
    image: np.ndarray  # (H, W, 3) uint8
    element_map: np.ndarray  # (H, W) uint8, values in [0, 7)
    defect_map: np.ndarray  # (H, W) uint8, values in {0, 1}

    def __post_init__(self):
        if self.image.ndim != 3 or self.image.shape[2] != 3:
            raise ValidationError(f"image must be (H, W, 3), got {self.image.shape}")
        for name, mask in (("element", self.element_map), ("defect", self.defect_map)):
            if mask.shape != self.image.shape[:2]:
                raise ValidationError(
                    f"{name} map shape {mask.shape} does not match image {self.image.shape[:2]}"
                )


def read_image(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def read_mask(path: str | Path, num_classes: int) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img)
    if arr.ndim != 2:
        raise ValidationError(f"mask {path} must be single-channel, got shape {arr.shape}")
    if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
        raise ValidationError(
            f"mask {path}: class index out of range [0, {num_classes})"
        )
    return arr.astype(np.uint8)


def resize_image(image: np.ndarray, size: int) -> np.ndarray:
    if image.shape[:2] == (size, size):
        return image
    return cv2.resize(image, (size, size), interpolation=cv2.INTER_LINEAR)


def resize_mask(mask: np.ndarray, size: int) -> np.ndarray:
    """Nearest-neighbor resize; never introduces values absent from the input."""
    if mask.shape == (size, size):
        return mask
    return cv2.resize(mask, (size, size), interpolation=cv2.INTER_NEAREST)


def load_sample(entry, target_size: int = 480, catalog: ClassCatalog = DEFAULT_CATALOG) -> Sample:
    """Decode one manifest entry and standardize it to target_size x target_size.

    The image is resized bilinearly, both label maps with nearest-neighbor;
    mask values are validated against the catalog before resizing.
    """
    image = read_image(entry.image_path)
    element = read_mask(entry.element_mask_path, catalog.num_element)
    defect = read_mask(entry.defect_mask_path, catalog.num_defect)
    if not (image.shape[:2] == element.shape == defect.shape):
        raise ValidationError(
            f"entry {entry.id!r}: raster dimensions disagree before resize: "
            f"image {image.shape[:2]}, element {element.shape}, defect {defect.shape}"
        )
    return Sample(
        id=entry.id,
        image=resize_image(image, target_size),
        element_map=resize_mask(element, target_size),
        defect_map=resize_mask(defect, target_size),
    )
