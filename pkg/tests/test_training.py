import json

import numpy as np
import pytest
import torch
from torch import nn

from bridgemtl.augment import AugmentationConfig
from bridgemtl.catalog import DEFAULT_CATALOG, split_merged
from bridgemtl.errors import ValidationError
from bridgemtl.manifest import load_manifest
from bridgemtl.metrics import accumulate_confusion, class_metrics, mean_metrics
from bridgemtl.models import CrossTalkState, Dims, build_model, variant_config
from bridgemtl.samples import load_sample
from bridgemtl.synthetic import make_synthetic_dataset
from bridgemtl.training import (
    TrainConfig,
    batch_tensors,
    evaluate,
    lr_at,
    predict_maps,
    train,
)

TINY = Dims(image_size=64, channels=32)


def _cfg(**kw):
    base = dict(
        total_steps=10,
        lr_init=1e-2,
        lr_min=1e-4,
        batch_size=2,
        seed=0,
        augmentation=AugmentationConfig.identity(),
    )
    base.update(kw)
    return TrainConfig(**base)


# --- schedule -------------------------------------------------------------


def test_lr_endpoints_exact():
    cfg = TrainConfig(total_steps=1000)
    assert lr_at(0, cfg) == 5e-4
    assert lr_at(1000, cfg) == 5e-6


def test_lr_geometric_midpoint():
    cfg = TrainConfig(total_steps=1000)
    assert lr_at(500, cfg) == pytest.approx(5e-5, rel=1e-12)


def test_lr_monotone_nonincreasing():
    cfg = TrainConfig(total_steps=100)
    values = [lr_at(s, cfg) for s in range(101)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_lr_rejects_out_of_range_step():
    cfg = TrainConfig(total_steps=10)
    with pytest.raises(ValidationError):
        lr_at(11, cfg)
    with pytest.raises(ValidationError):
        lr_at(-1, cfg)


def test_train_config_validation():
    with pytest.raises(ValidationError):
        TrainConfig(total_steps=0)
    with pytest.raises(ValidationError):
        TrainConfig(total_steps=10, lr_min=1e-3, lr_init=1e-4)
    with pytest.raises(ValidationError):
        TrainConfig(total_steps=10, batch_size=0)
    with pytest.raises(ValidationError):
        TrainConfig(total_steps=10, optimizer="sgd")


# --- training loop -----------------------------------------------------------


def test_empty_train_split_rejected(tmp_path):
    make_synthetic_dataset(tmp_path, n_train=0, n_test=2, size=64, seed=0)
    manifest = load_manifest(tmp_path)
    model = build_model(variant_config("MTL-A", dims=TINY), seed=0)
    with pytest.raises(ValidationError, match="train split"):
        train(model, manifest, _cfg())


def test_fixed_seed_reproduces_losses(tiny_dataset):
    losses = []
    for _ in range(2):
        model = build_model(variant_config("MTL-A", dims=TINY), seed=1)
        _, history = train(model, tiny_dataset, _cfg(total_steps=10))
        losses.append([r.loss_total for r in history.steps])
    assert losses[0] == losses[1]
    assert len(losses[0]) == 10


def test_training_reduces_loss(tiny_dataset):
    model = build_model(variant_config("MTL-A", dims=TINY), seed=2)
    _, history = train(model, tiny_dataset, _cfg(total_steps=60))
    assert history.steps[-1].loss_total < history.steps[0].loss_total
    assert history.steps[-1].loss_element < history.steps[0].loss_element
    assert history.steps[-1].loss_defect < history.steps[0].loss_defect


def test_uncertainty_params_receive_gradients(tiny_dataset):
    model = build_model(variant_config("MTL-B", dims=TINY), seed=3)
    _, history = train(model, tiny_dataset, _cfg(total_steps=5))
    assert model.uncertainty.s_element.grad is not None
    assert float(model.uncertainty.s_element.detach()) != 0.0
    assert history.steps[-1].s_element is not None
    # additive model exposes no uncertainty parameters
    plain = build_model(variant_config("MTL-A", dims=TINY), seed=3)
    assert not hasattr(plain, "uncertainty")
    assert all("uncertainty" not in n for n, _ in plain.named_parameters())


def test_uncertainty_s_tracks_noisier_task(tiny_dataset):
    # imbalance the tasks: scale the defect loss up via a wrapped loss is
    # intrusive; instead check the closed-form direction after real training:
    # s moves toward log(task loss), so the larger loss gets the larger s.
    model = build_model(variant_config("MTL-B", dims=TINY), seed=4)
    _, history = train(model, tiny_dataset, _cfg(total_steps=120))
    last = history.steps[-1]
    if last.loss_element > last.loss_defect:
        assert last.s_element > last.s_defect
    else:
        assert last.s_defect > last.s_element


def test_single_task_has_no_other_branch_parameters(tiny_dataset):
    model = build_model(variant_config("single-element", dims=TINY), seed=5)
    names = [n for n, _ in model.named_parameters()]
    assert all("defect" not in n for n in names)
    train(model, tiny_dataset, _cfg(total_steps=2))
    model_d = build_model(variant_config("single-defect", dims=TINY), seed=5)
    assert all("element" not in n for n, _ in model_d.named_parameters())


def test_stale_buffer_training_runs(tiny_dataset):
    config = variant_config("MTL-D", dims=TINY, crosstalk_mode="stale_buffer")
    model = build_model(config, seed=6)
    _, history = train(model, tiny_dataset, _cfg(total_steps=6))
    assert len(history.steps) == 6


def test_history_written_to_run_dir(tiny_dataset, tmp_path):
    model = build_model(variant_config("MTL-A", dims=TINY), seed=7)
    train(model, tiny_dataset, _cfg(total_steps=4, eval_every=2), run_dir=tmp_path)
    lines = (tmp_path / "history.jsonl").read_text().strip().splitlines()
    assert len(lines) == 4
    assert json.loads(lines[0])["step"] == 0
    assert (tmp_path / "last.pt").is_file()
    assert (tmp_path / "best.pt").is_file()


def test_eval_records_collected(tiny_dataset):
    model = build_model(variant_config("MTL-A", dims=TINY), seed=8)
    _, history = train(model, tiny_dataset, _cfg(total_steps=4, eval_every=2))
    assert [e.step for e in history.evals] == [2, 4]
    assert history.evals[0].element is not None


# --- evaluation ---------------------------------------------------------------


class _StubModel(nn.Module):
    """Predicts fixed classes regardless of the image."""

    def __init__(self, config, element_class=3, defect_class=0):
        super().__init__()
        self.config = config
        self.element_class = element_class
        self.defect_class = defect_class

    def forward(self, images, state=None):
        from bridgemtl.models.network import ModelOutput

        batch = images.shape[0]
        size = self.config.dims.image_size
        out = ModelOutput()
        if "element" in self.config.tasks:
            logits = torch.zeros((batch, 7, size, size))
            logits[:, self.element_class] = 10.0
            out.element_logits = logits
        if "defect" in self.config.tasks:
            logits = torch.zeros((batch, 2, size, size))
            logits[:, self.defect_class] = 10.0
            out.defect_logits = logits
        return out


def _constant_dataset(tmp_path, element_value=3, defect_value=0, n=2):
    import json as _json

    from PIL import Image

    for sub in ("images", "labels_element", "labels_defect"):
        (tmp_path / sub).mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(n):
        sid = f"t{i}"
        Image.fromarray(np.zeros((64, 64, 3), dtype=np.uint8)).save(
            tmp_path / "images" / f"{sid}.png"
        )
        Image.fromarray(np.full((64, 64), element_value, dtype=np.uint8)).save(
            tmp_path / "labels_element" / f"{sid}.png"
        )
        if defect_value == "half":
            defect = np.zeros((64, 64), dtype=np.uint8)
            defect[32:] = 1
        else:
            defect = np.full((64, 64), defect_value, dtype=np.uint8)
        Image.fromarray(defect).save(tmp_path / "labels_defect" / f"{sid}.png")
        records.append(
            {
                "id": sid,
                "image_path": f"images/{sid}.png",
                "element_mask_path": f"labels_element/{sid}.png",
                "defect_mask_path": f"labels_defect/{sid}.png",
                "split": "test",
            }
        )
    (tmp_path / "manifest.json").write_text(_json.dumps(records))
    return load_manifest(tmp_path)


def test_evaluate_stub_matching_ground_truth_scores_one(tmp_path):
    manifest = _constant_dataset(tmp_path, element_value=3, defect_value=0)
    model = _StubModel(variant_config("MTL-A", dims=TINY))
    element, defect = evaluate(model, manifest, "test")
    assert element.m_iou == pytest.approx(1.0)
    assert defect.m_iou == pytest.approx(1.0)
    assert element.m_precision == pytest.approx(1.0)


def test_evaluate_constant_predictor_on_balanced_set(tmp_path):
    manifest = _constant_dataset(tmp_path, element_value=3, defect_value="half")
    model = _StubModel(variant_config("MTL-A", dims=TINY), defect_class=1)
    _, defect = evaluate(model, manifest, "test")
    assert defect.classes.recall[1] == pytest.approx(1.0)
    assert defect.classes.precision[1] == pytest.approx(0.5)
    assert defect.classes.recall[0] == pytest.approx(0.0)
    assert np.isnan(defect.classes.precision[0])


def test_evaluate_empty_split_rejected(tmp_path):
    make_synthetic_dataset(tmp_path, n_train=2, n_test=0, size=64, seed=0)
    manifest = load_manifest(tmp_path)
    model = build_model(variant_config("MTL-A", dims=TINY), seed=9)
    with pytest.raises(ValidationError, match="empty"):
        evaluate(model, manifest, "test")


def test_evaluate_does_not_mutate_parameters(tiny_dataset):
    model = build_model(variant_config("MTL-D", dims=TINY), seed=10)
    before = {n: p.clone() for n, p in model.state_dict().items()}
    evaluate(model, tiny_dataset, "test")
    for n, p in model.state_dict().items():
        assert torch.equal(before[n], p), n


def test_merged_evaluation_equals_direct_split_scoring(tiny_dataset):
    model = build_model(variant_config("merged", dims=TINY), seed=11)
    element, defect = evaluate(model, tiny_dataset, "test")

    cm_e = cm_d = None
    with torch.no_grad():
        for entry in tiny_dataset.split_entries("test"):
            sample = load_sample(entry, 64)
            images, _, _ = batch_tensors([sample])
            merged = model(images).merged_logits.argmax(dim=1).numpy().astype(np.uint8)
            pred_e, pred_d = split_merged(merged[0])
            cm_e = accumulate_confusion(pred_e, sample.element_map, 7, cm_e)
            cm_d = accumulate_confusion(pred_d, sample.defect_map, 2, cm_d)
    ref_e = mean_metrics(class_metrics(cm_e), DEFAULT_CATALOG.element_classes)
    ref_d = mean_metrics(class_metrics(cm_d), DEFAULT_CATALOG.defect_classes)
    assert element.m_iou == ref_e.m_iou
    assert defect.m_f1 == ref_d.m_f1


def test_predict_maps_shapes(tiny_dataset):
    model = build_model(variant_config("MTL-A", dims=TINY), seed=12)
    entry = tiny_dataset.split_entries("test")[0]
    sample = load_sample(entry, 64)
    images, _, _ = batch_tensors([sample])
    with torch.no_grad():
        preds = predict_maps(model, images)
    assert preds["element"].shape == (1, 64, 64)
    assert preds["defect"].shape == (1, 64, 64)
    assert preds["element"].dtype == np.uint8
