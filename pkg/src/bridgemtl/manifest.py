"""Dataset manifest loading, validation, and split statistics.

Expected dataset layout::

    root/images/<id>.png           RGB inspection photos
    root/labels_element/<id>.png   8-bit single-channel, pixel value = element class
    root/labels_defect/<id>.png    8-bit single-channel, 0 = no corrosion, 1 = corrosion
    root/manifest.json             top-level JSON list of entry records

Each manifest record carries ``id``, ``image_path``, ``element_mask_path``,
``defect_mask_path`` (relative to root), ``split`` ("train" or "test"), and
optionally ``element_instances`` (per-class instance counts).
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .catalog import DEFAULT_CATALOG, ClassCatalog
from .errors import ValidationError
from .samples import read_mask

SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image_path: Path
    element_mask_path: Path
    defect_mask_path: Path
    split: str
    element_instances: dict[str, int] | None = None


@dataclass
class DatasetManifest:
    root: Path
    entries: list[ManifestEntry]

    def split_entries(self, split: str) -> list[ManifestEntry]:
        if split not in SPLITS:
            raise ValidationError(f"unknown split {split!r}, expected one of {SPLITS}")
        return [e for e in self.entries if e.split == split]

    def __len__(self) -> int:
        return len(self.entries)


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and validate ``manifest.json``; every referenced file must exist."""
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.is_file():
        raise ValidationError(f"manifest not found: {path}")
    root = path.parent
    try:
        records = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"manifest {path} is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise ValidationError("manifest must be a top-level JSON list of entries")

    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for i, rec in enumerate(records):
        missing = {"id", "image_path", "element_mask_path", "defect_mask_path", "split"} - set(rec)
        if missing:
            raise ValidationError(f"manifest entry #{i} is missing fields {sorted(missing)}")
        entry_id = str(rec["id"])
        if entry_id in seen:
            raise ValidationError(f"duplicate manifest id {entry_id!r}")
        seen.add(entry_id)
        if rec["split"] not in SPLITS:
            raise ValidationError(
                f"entry {entry_id!r} has unknown split {rec['split']!r}, expected one of {SPLITS}"
            )
        paths = {
            key: root / rec[key]
            for key in ("image_path", "element_mask_path", "defect_mask_path")
        }
        for key, p in paths.items():
            if not p.is_file():
                raise ValidationError(f"entry {entry_id!r}: {key} does not exist: {p}")
        instances = rec.get("element_instances")
        if instances is not None:
            instances = {str(k): int(v) for k, v in instances.items()}
        entries.append(
            ManifestEntry(
                id=entry_id,
                image_path=paths["image_path"],
                element_mask_path=paths["element_mask_path"],
                defect_mask_path=paths["defect_mask_path"],
                split=rec["split"],
                element_instances=instances,
            )
        )
    return DatasetManifest(root=root, entries=entries)


@dataclass
class SplitSummary:
    image_count: int
    element_fractions: dict[str, float]
    defect_fractions: dict[str, float]
    instance_counts: dict[str, int] | None


@dataclass
class SplitStats:
    """Per-split pixel statistics over the raw-resolution masks."""

    splits: dict[str, SplitSummary]


def compute_split_stats(
    manifest: DatasetManifest, catalog: ClassCatalog = DEFAULT_CATALOG
) -> SplitStats:
    """Image counts, per-class pixel fractions, and defect-area fractions.

    Includes a "total" summary over both splits. Fractions within a split sum
    to 1 per taxonomy.
    """
    counters = {
        name: {
            "images": 0,
            "element": np.zeros(catalog.num_element, dtype=np.int64),
            "defect": np.zeros(catalog.num_defect, dtype=np.int64),
            "instances": {},
            "has_instances": False,
        }
        for name in (*SPLITS, "total")
    }
    for entry in manifest.entries:
        try:
            element = read_mask(entry.element_mask_path, catalog.num_element)
            defect = read_mask(entry.defect_mask_path, catalog.num_defect)
        except (OSError, ValidationError) as exc:
            raise ValidationError(f"entry {entry.id!r}: {exc}") from exc
        e_counts = np.bincount(element.ravel(), minlength=catalog.num_element)
        d_counts = np.bincount(defect.ravel(), minlength=catalog.num_defect)
        for name in (entry.split, "total"):
            c = counters[name]
            c["images"] += 1
            c["element"] += e_counts
            c["defect"] += d_counts
            if entry.element_instances:
                c["has_instances"] = True
                for cls, n in entry.element_instances.items():
                    c["instances"][cls] = c["instances"].get(cls, 0) + n

    summaries = {}
    for name, c in counters.items():
        e_total = int(c["element"].sum())
        d_total = int(c["defect"].sum())
        summaries[name] = SplitSummary(
            image_count=c["images"],
            element_fractions={
                cls: (int(n) / e_total if e_total else 0.0)
                for cls, n in zip(catalog.element_classes, c["element"])
            },
            defect_fractions={
                cls: (int(n) / d_total if d_total else 0.0)
                for cls, n in zip(catalog.defect_classes, c["defect"])
            },
            instance_counts=dict(c["instances"]) if c["has_instances"] else None,
        )
    return SplitStats(splits=summaries)
