import json

import numpy as np
import pytest
from PIL import Image

from bridgemtl.errors import ValidationError
from bridgemtl.manifest import compute_split_stats, load_manifest
from bridgemtl.samples import load_sample
from bridgemtl.synthetic import make_synthetic_dataset


def _write_entry(root, sample_id, split="train", size=16, element_value=1, defect_value=0):
    for sub in ("images", "labels_element", "labels_defect"):
        (root / sub).mkdir(exist_ok=True, parents=True)
    Image.fromarray(np.zeros((size, size, 3), dtype=np.uint8)).save(
        root / "images" / f"{sample_id}.png"
    )
    Image.fromarray(np.full((size, size), element_value, dtype=np.uint8)).save(
        root / "labels_element" / f"{sample_id}.png"
    )
    Image.fromarray(np.full((size, size), defect_value, dtype=np.uint8)).save(
        root / "labels_defect" / f"{sample_id}.png"
    )
    return {
        "id": sample_id,
        "image_path": f"images/{sample_id}.png",
        "element_mask_path": f"labels_element/{sample_id}.png",
        "defect_mask_path": f"labels_defect/{sample_id}.png",
        "split": split,
    }


def _write_manifest(root, records):
    (root / "manifest.json").write_text(json.dumps(records))
    return root / "manifest.json"


def test_load_manifest_counts_splits(tmp_path):
    records = [_write_entry(tmp_path, f"s{i:03d}", "train") for i in range(130)]
    records += [_write_entry(tmp_path, f"t{i:03d}", "test") for i in range(15)]
    manifest = load_manifest(_write_manifest(tmp_path, records))
    assert len(manifest) == 145
    assert len(manifest.split_entries("train")) == 130
    assert len(manifest.split_entries("test")) == 15


def test_empty_manifest_is_valid(tmp_path):
    manifest = load_manifest(_write_manifest(tmp_path, []))
    assert len(manifest.entries) == 0


def test_missing_mask_names_entry(tmp_path):
    rec = _write_entry(tmp_path, "ok")
    bad = dict(rec, id="broken", defect_mask_path="labels_defect/nope.png")
    with pytest.raises(ValidationError, match="broken"):
        load_manifest(_write_manifest(tmp_path, [rec, bad]))


def test_duplicate_id_rejected(tmp_path):
    rec = _write_entry(tmp_path, "dup")
    with pytest.raises(ValidationError, match="dup"):
        load_manifest(_write_manifest(tmp_path, [rec, dict(rec)]))


def test_unknown_split_rejected(tmp_path):
    rec = _write_entry(tmp_path, "s0")
    rec["split"] = "validation"
    with pytest.raises(ValidationError, match="split"):
        load_manifest(_write_manifest(tmp_path, [rec]))


def test_load_accepts_directory_path(tmp_path):
    _write_manifest(tmp_path, [_write_entry(tmp_path, "s0")])
    manifest = load_manifest(tmp_path)
    assert len(manifest) == 1


def test_load_sample_resizes(tmp_path):
    rec = _write_entry(tmp_path, "s0", size=96)
    manifest = load_manifest(_write_manifest(tmp_path, [rec]))
    sample = load_sample(manifest.entries[0], target_size=48)
    assert sample.image.shape == (48, 48, 3)
    assert sample.element_map.shape == (48, 48)
    assert set(np.unique(sample.element_map)) == {1}


def test_load_sample_nearest_introduces_no_values(tmp_path):
    root = tmp_path
    for sub in ("images", "labels_element", "labels_defect"):
        (root / sub).mkdir(parents=True)
    rng = np.random.default_rng(0)
    element = rng.integers(0, 7, (90, 72)).astype(np.uint8)
    defect = rng.integers(0, 2, (90, 72)).astype(np.uint8)
    Image.fromarray(rng.integers(0, 255, (90, 72, 3)).astype(np.uint8)).save(
        root / "images" / "a.png"
    )
    Image.fromarray(element).save(root / "labels_element" / "a.png")
    Image.fromarray(defect).save(root / "labels_defect" / "a.png")
    manifest = load_manifest(
        _write_manifest(
            root,
            [
                {
                    "id": "a",
                    "image_path": "images/a.png",
                    "element_mask_path": "labels_element/a.png",
                    "defect_mask_path": "labels_defect/a.png",
                    "split": "train",
                }
            ],
        )
    )
    sample = load_sample(manifest.entries[0], target_size=48)
    assert set(np.unique(sample.element_map)) <= set(np.unique(element))
    assert set(np.unique(sample.defect_map)) <= set(np.unique(defect))


def test_load_sample_identity_when_already_sized(tiny_dataset):
    entry = tiny_dataset.entries[0]
    sample = load_sample(entry, target_size=64)
    again = load_sample(entry, target_size=64)
    assert (sample.image == again.image).all()
    assert sample.image.shape == (64, 64, 3)


def test_load_sample_rejects_out_of_range_mask(tmp_path):
    rec = _write_entry(tmp_path, "bad", element_value=9)
    manifest_path = _write_manifest(tmp_path, [rec])
    manifest = load_manifest(manifest_path)
    with pytest.raises(ValidationError, match="out of range"):
        load_sample(manifest.entries[0], target_size=16)


def test_load_sample_rejects_dimension_mismatch(tmp_path):
    rec = _write_entry(tmp_path, "odd", size=16)
    Image.fromarray(np.zeros((20, 16), dtype=np.uint8)).save(
        tmp_path / "labels_defect" / "odd.png"
    )
    manifest = load_manifest(_write_manifest(tmp_path, [rec]))
    with pytest.raises(ValidationError, match="disagree"):
        load_sample(manifest.entries[0], target_size=16)


def test_split_stats_all_corrosion(tmp_path):
    rec = _write_entry(tmp_path, "c0", defect_value=1)
    manifest = load_manifest(_write_manifest(tmp_path, [rec]))
    stats = compute_split_stats(manifest)
    assert stats.splits["train"].defect_fractions["Corrosion"] == pytest.approx(1.0)


def test_split_stats_half_corrosion_two_samples(tmp_path):
    recs = [
        _write_entry(tmp_path, "c0", defect_value=1),
        _write_entry(tmp_path, "c1", defect_value=0),
    ]
    manifest = load_manifest(_write_manifest(tmp_path, recs))
    stats = compute_split_stats(manifest)
    assert stats.splits["train"].defect_fractions["Corrosion"] == pytest.approx(0.5)
    assert stats.splits["train"].image_count == 2


def test_split_stats_fractions_sum_to_one(tiny_dataset):
    stats = compute_split_stats(tiny_dataset)
    for name, summary in stats.splits.items():
        if summary.image_count == 0:
            continue
        assert sum(summary.element_fractions.values()) == pytest.approx(1.0, abs=1e-9)
        assert sum(summary.defect_fractions.values()) == pytest.approx(1.0, abs=1e-9)
    assert stats.splits["total"].image_count == 6


def test_split_stats_instance_counts(tiny_dataset):
    stats = compute_split_stats(tiny_dataset)
    counts = stats.splits["train"].instance_counts
    assert counts is not None
    assert all(v >= 1 for v in counts.values())
