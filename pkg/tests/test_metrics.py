import math

import numpy as np
import pytest

from bridgemtl.catalog import DEFAULT_CATALOG, merge_labels
from bridgemtl.errors import ValidationError
from bridgemtl.metrics import (
    ConfusionMatrix,
    accumulate_confusion,
    class_metrics,
    condition_assessment,
    mean_metrics,
    merged_to_task_reports,
    score_maps,
)

from oracles import (
    brute_class_metrics,
    brute_condition,
    brute_confusion,
    brute_means,
)


def _assert_matches_oracle(cm, ref):
    got = class_metrics(cm)
    for name in ("precision", "recall", "f1", "iou"):
        ours = getattr(got, name)
        for k, expected in enumerate(ref[name]):
            if expected is None:
                assert math.isnan(ours[k]), f"{name}[{k}] should be undefined"
            else:
                assert ours[k] == pytest.approx(expected, abs=1e-12)
    assert got.support.tolist() == ref["support"]


def test_accumulate_perfect_diagonal():
    gt = np.zeros((4, 4), dtype=np.int64)
    gt[2:] = 1
    cm = accumulate_confusion(gt, gt, 2)
    assert cm.counts.tolist() == [[8, 0], [0, 8]]


def test_accumulate_all_wrong():
    gt = np.zeros((4, 4), dtype=np.int64)
    pred = np.ones((4, 4), dtype=np.int64)
    cm = accumulate_confusion(pred, gt, 2)
    assert cm.counts[0, 1] == 16
    assert cm.counts.sum() == 16


def test_accumulate_two_images_equals_concatenation():
    rng = np.random.default_rng(0)
    a_pred, a_gt = rng.integers(0, 3, (2, 5, 5))
    b_pred, b_gt = rng.integers(0, 3, (2, 5, 5))
    cm = accumulate_confusion(a_pred, a_gt, 3)
    cm = accumulate_confusion(b_pred, b_gt, 3, cm)
    concat = accumulate_confusion(
        np.concatenate([a_pred, b_pred]), np.concatenate([a_gt, b_gt]), 3
    )
    assert (cm.counts == concat.counts).all()
    # and it matches a plain per-pixel recount
    ref = brute_confusion(
        np.concatenate([a_pred, b_pred]).tolist(),
        np.concatenate([a_gt, b_gt]).tolist(),
        3,
    )
    assert cm.counts.tolist() == ref


def test_accumulate_partition_invariance():
    rng = np.random.default_rng(3)
    pred = rng.integers(0, 7, (8, 8))
    gt = rng.integers(0, 7, (8, 8))
    whole = accumulate_confusion(pred, gt, 7)
    parts = ConfusionMatrix.empty(7)
    for i in range(8):
        parts = accumulate_confusion(pred[i : i + 1], gt[i : i + 1], 7, parts)
    assert (whole.counts == parts.counts).all()


def test_accumulate_rejects_bad_values():
    with pytest.raises(ValidationError):
        accumulate_confusion(np.array([[3]]), np.array([[0]]), 2)
    with pytest.raises(ValidationError):
        accumulate_confusion(np.zeros((2, 2)), np.zeros((2, 3)), 2)


def test_merge_associative():
    a = ConfusionMatrix(np.array([[1, 2], [3, 4]]))
    b = ConfusionMatrix(np.array([[5, 0], [0, 5]]))
    assert a.merge(b).counts.tolist() == [[6, 2], [3, 9]]


def test_class_metrics_perfect():
    cm = ConfusionMatrix(np.array([[8, 0], [0, 8]]))
    got = class_metrics(cm)
    for arr in (got.precision, got.recall, got.f1, got.iou):
        assert arr.tolist() == [1.0, 1.0]


def test_class_metrics_hand_worked_example():
    # gt = [[1,1],[0,0]], pred = [[1,0],[0,0]]
    gt = np.array([[1, 1], [0, 0]])
    pred = np.array([[1, 0], [0, 0]])
    cm = accumulate_confusion(pred, gt, 2)
    got = class_metrics(cm)
    assert got.precision[1] == pytest.approx(1.0)
    assert got.recall[1] == pytest.approx(0.5)
    assert got.f1[1] == pytest.approx(2 / 3)
    assert got.iou[1] == pytest.approx(0.5)
    assert got.precision[0] == pytest.approx(2 / 3)
    assert got.recall[0] == pytest.approx(1.0)
    assert got.iou[0] == pytest.approx(2 / 3)
    report = mean_metrics(got, ("a", "b"))
    assert report.m_iou == pytest.approx(7 / 12)


def test_absent_class_is_undefined():
    cm = ConfusionMatrix(np.array([[4, 0, 0], [0, 4, 0], [0, 0, 0]]))
    got = class_metrics(cm)
    for name in ("precision", "recall", "f1", "iou"):
        assert math.isnan(getattr(got, name)[2])
    report = mean_metrics(got, ("a", "b", "c"))
    assert report.m_iou == pytest.approx(1.0)


def test_mean_metrics_single_defined_class():
    cm = ConfusionMatrix(np.array([[3, 1], [0, 0]]))
    got = class_metrics(cm)
    report = mean_metrics(got, ("a", "b"))
    assert report.m_recall == pytest.approx(got.recall[0])


def test_mean_metrics_all_undefined_raises():
    cm = ConfusionMatrix.empty(3)
    with pytest.raises(ValidationError):
        mean_metrics(class_metrics(cm), ("a", "b", "c"))


def test_f1_undefined_when_precision_and_recall_zero():
    # class 1: TP=0, FP>0, FN>0 -> P=0, R=0, F1 is 0/0
    cm = ConfusionMatrix(np.array([[1, 2], [3, 0]]))
    got = class_metrics(cm)
    assert got.precision[1] == 0.0
    assert got.recall[1] == 0.0
    assert math.isnan(got.f1[1])
    assert got.iou[1] == 0.0


def test_metric_relationships():
    rng = np.random.default_rng(11)
    for _ in range(50):
        k = int(rng.integers(2, 8))
        cm = ConfusionMatrix(rng.integers(0, 20, (k, k)))
        got = class_metrics(cm)
        for c in range(k):
            p, r, f1, iou = got.precision[c], got.recall[c], got.f1[c], got.iou[c]
            if any(math.isnan(v) for v in (p, r, f1, iou)):
                continue
            assert iou <= f1 + 1e-12 <= max(p, r) + 1e-12
            assert f1 == pytest.approx(2 * iou / (1 + iou), abs=1e-12)


def test_permutation_equivariance():
    rng = np.random.default_rng(5)
    counts = rng.integers(0, 30, (5, 5))
    perm = rng.permutation(5)
    base = class_metrics(ConfusionMatrix(counts))
    permuted = class_metrics(ConfusionMatrix(counts[np.ix_(perm, perm)]))
    np.testing.assert_array_equal(
        np.nan_to_num(base.iou[perm], nan=-1), np.nan_to_num(permuted.iou, nan=-1)
    )
    np.testing.assert_array_equal(
        np.nan_to_num(base.precision[perm], nan=-1),
        np.nan_to_num(permuted.precision, nan=-1),
    )


def test_oracle_equivalence_random_maps():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        k = int(rng.choice([2, 7, 14]))
        pred = rng.integers(0, k, (8, 8))
        gt = rng.integers(0, k, (8, 8))
        cm = accumulate_confusion(pred, gt, k)
        assert cm.counts.tolist() == brute_confusion(pred.tolist(), gt.tolist(), k)
        _assert_matches_oracle(cm, brute_class_metrics(cm.counts.tolist()))


def test_merged_round_trip_is_perfect():
    rng = np.random.default_rng(9)
    gt_e = rng.integers(0, 7, (8, 8)).astype(np.uint8)
    gt_d = rng.integers(0, 2, (8, 8)).astype(np.uint8)
    merged = merge_labels(gt_e, gt_d)
    rep_e, rep_d = merged_to_task_reports(merged, gt_e, gt_d)
    assert rep_e.m_iou == pytest.approx(1.0)
    assert rep_d.m_iou == pytest.approx(1.0)


def test_merged_with_flipped_corrosion_bit():
    rng = np.random.default_rng(10)
    gt_e = rng.integers(0, 7, (8, 8)).astype(np.uint8)
    gt_d = rng.integers(0, 2, (8, 8)).astype(np.uint8)
    merged = merge_labels(gt_e, 1 - gt_d)
    rep_e, rep_d = merged_to_task_reports(merged, gt_e, gt_d)
    assert rep_e.m_iou == pytest.approx(1.0)
    assert rep_d.classes.recall[1] == pytest.approx(0.0)


def test_merged_scoring_equals_split_scoring():
    rng = np.random.default_rng(12)
    gt_e = rng.integers(0, 7, (8, 8)).astype(np.uint8)
    gt_d = rng.integers(0, 2, (8, 8)).astype(np.uint8)
    merged_pred = rng.integers(0, 14, (8, 8)).astype(np.uint8)
    rep_e, rep_d = merged_to_task_reports(merged_pred, gt_e, gt_d)
    direct_e = score_maps(merged_pred % 7, gt_e, 7, DEFAULT_CATALOG.element_classes)
    direct_d = score_maps(merged_pred // 7, gt_d, 2, DEFAULT_CATALOG.defect_classes)
    assert rep_e.m_iou == direct_e.m_iou
    assert rep_d.m_f1 == direct_d.m_f1


def test_condition_assessment_direct_ratio():
    element = np.full((10, 10), 5, dtype=np.uint8)
    defect = np.zeros((10, 10), dtype=np.uint8)
    defect[:5, :5] = 1
    got = condition_assessment(element, defect)
    assert got == {5: 0.25}


def test_condition_assessment_no_corrosion():
    element = np.array([[1, 2], [3, 3]], dtype=np.uint8)
    defect = np.zeros((2, 2), dtype=np.uint8)
    got = condition_assessment(element, defect)
    assert got == {1: 0.0, 2: 0.0, 3: 0.0}


def test_condition_assessment_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(20):
        element = rng.integers(0, 7, (6, 6)).astype(np.uint8)
        defect = rng.integers(0, 2, (6, 6)).astype(np.uint8)
        got = condition_assessment(element, defect)
        ref = brute_condition(element.tolist(), defect.tolist())
        assert set(got) == set(ref)
        for k in ref:
            assert got[k] == pytest.approx(ref[k], abs=1e-12)


def test_means_match_brute_force():
    rng = np.random.default_rng(31)
    for _ in range(20):
        pred = rng.integers(0, 7, (8, 8))
        gt = rng.integers(0, 7, (8, 8))
        cm = accumulate_confusion(pred, gt, 7)
        report = mean_metrics(class_metrics(cm), DEFAULT_CATALOG.element_classes)
        ref = brute_means(brute_class_metrics(cm.counts.tolist()))
        assert report.m_precision == pytest.approx(ref["precision"], abs=1e-12)
        assert report.m_recall == pytest.approx(ref["recall"], abs=1e-12)
        assert report.m_f1 == pytest.approx(ref["f1"], abs=1e-12)
        assert report.m_iou == pytest.approx(ref["iou"], abs=1e-12)
