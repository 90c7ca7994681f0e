"""Synthetic inspection-style dataset for tests and desk-scale runs.

Each sample is built from large axis-aligned blocks whose boundaries sit on
the stride-4 feature grid: the element map is a two-class vertical split, the
defect map a horizontal half-plane. Colors encode (element, corrosion), so a
small network can solve both tasks from color alone.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .catalog import DEFAULT_CATALOG

# One distinct base color per element class; corrosion shifts toward rust.
_BASE_COLORS = np.array(
    [
        [40, 40, 40],     # Background
        [0, 110, 190],    # Bearing
        [0, 180, 60],     # Bracing
        [200, 200, 70],   # Deck
        [150, 60, 200],   # Floor beam
        [60, 200, 200],   # Girder
        [230, 120, 30],   # Substructure
    ],
    dtype=np.int16,
)
_RUST_SHIFT = np.array([70, -35, -45], dtype=np.int16)

# Element-class pairs per sample; together they cover all 7 classes.
_CLASS_PAIRS = ((0, 1), (2, 3), (4, 5), (6, 5), (1, 3), (2, 6), (0, 4), (5, 2))


def _render(element: np.ndarray, defect: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    image = _BASE_COLORS[element] + _RUST_SHIFT * defect[..., None]
    image = image + rng.integers(-8, 9, size=image.shape, dtype=np.int16)
    return np.clip(image, 0, 255).astype(np.uint8)


def make_sample_maps(index: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Element/defect maps for sample ``index``; block edges on the 4 px grid."""
    left, right = _CLASS_PAIRS[index % len(_CLASS_PAIRS)]
    element = np.full((size, size), left, dtype=np.uint8)
    element[:, size // 2 :] = right
    defect = np.zeros((size, size), dtype=np.uint8)
    if index % 2 == 0:
        defect[: size // 2, :] = 1
    else:
        defect[size // 2 :, :] = 1
    return element, defect


def make_synthetic_dataset(
    root: str | Path,
    n_train: int = 4,
    n_test: int = 2,
    size: int = 64,
    seed: int = 0,
) -> Path:
    """Write a dataset in the standard layout; returns the manifest path."""
    root = Path(root)
    for sub in ("images", "labels_element", "labels_defect"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    counts = {"train": n_train, "test": n_test}
    index = 0
    for split, n in counts.items():
        for i in range(n):
            sample_id = f"{split}_{i:03d}"
            element, defect = make_sample_maps(index, size)
            image = _render(element, defect, rng)
            Image.fromarray(image).save(root / "images" / f"{sample_id}.png")
            Image.fromarray(element).save(root / "labels_element" / f"{sample_id}.png")
            Image.fromarray(defect).save(root / "labels_defect" / f"{sample_id}.png")
            instances = {
                DEFAULT_CATALOG.element_classes[k]: 1
                for k in np.unique(element)
                if k != 0
            }
            records.append(
                {
                    "id": sample_id,
                    "image_path": f"images/{sample_id}.png",
                    "element_mask_path": f"labels_element/{sample_id}.png",
                    "defect_mask_path": f"labels_defect/{sample_id}.png",
                    "split": split,
                    "element_instances": instances,
                }
            )
            index += 1
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(records, indent=2), encoding="utf-8")
    return manifest_path
