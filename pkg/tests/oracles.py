"""Independent brute-force oracles used by the test suite.

Everything here is deliberately naive (pure-Python loops, literal textbook
formulas) and shares no code with the package under test.
"""

import math


def brute_confusion(pred_map, gt_map, num_classes):
    """Per-pixel counting with plain loops; counts[gt][pred]."""
    counts = [[0] * num_classes for _ in range(num_classes)]
    flat_pred = [int(v) for row in pred_map for v in row]
    flat_gt = [int(v) for row in gt_map for v in row]
    for g, p in zip(flat_gt, flat_pred):
        counts[g][p] += 1
    return counts


def brute_class_metrics(counts):
    """Literal per-class precision/recall/F1/IoU; None where 0/0."""
    k = len(counts)
    out = {"precision": [], "recall": [], "f1": [], "iou": [], "support": []}
    for c in range(k):
        tp = counts[c][c]
        fp = sum(counts[r][c] for r in range(k)) - tp
        fn = sum(counts[c][r] for r in range(k)) - tp
        precision = tp / (tp + fp) if (tp + fp) > 0 else None
        recall = tp / (tp + fn) if (tp + fn) > 0 else None
        if precision is None or recall is None or (precision + recall) == 0:
            f1 = None
        else:
            f1 = 2 * precision * recall / (precision + recall)
        iou = tp / (tp + fp + fn) if (tp + fp + fn) > 0 else None
        out["precision"].append(precision)
        out["recall"].append(recall)
        out["f1"].append(f1)
        out["iou"].append(iou)
        out["support"].append(tp + fn)
    return out


def brute_means(per_class):
    """Unweighted mean over defined entries, None if nothing defined."""
    out = {}
    for name in ("precision", "recall", "f1", "iou"):
        defined = [v for v in per_class[name] if v is not None]
        out[name] = sum(defined) / len(defined) if defined else None
    return out


def brute_cross_entropy(logits, targets):
    """Mean per-pixel softmax NLL; logits indexed [k][i][j], targets [i][j]."""
    k = len(logits)
    height = len(logits[0])
    width = len(logits[0][0])
    total = 0.0
    for i in range(height):
        for j in range(width):
            scores = [float(logits[c][i][j]) for c in range(k)]
            m = max(scores)
            log_norm = m + math.log(sum(math.exp(s - m) for s in scores))
            total += log_norm - scores[int(targets[i][j])]
    return total / (height * width)


def literal_uncertainty_loss(loss_e, loss_d, sigma_e, sigma_d):
    """The combination exactly as written with sigma weights."""
    return (
        loss_e / (2.0 * sigma_e**2)
        + loss_d / (2.0 * sigma_d**2)
        + math.log(sigma_e * sigma_d)
    )


def central_difference(fn, x, eps=1e-6):
    """Scalar central finite difference of fn at x."""
    return (fn(x + eps) - fn(x - eps)) / (2.0 * eps)


def brute_merge(element_map, defect_map):
    return [
        [int(e) + 7 * int(d) for e, d in zip(erow, drow)]
        for erow, drow in zip(element_map, defect_map)
    ]


def brute_split(merged_map):
    element = [[int(v) % 7 for v in row] for row in merged_map]
    defect = [[int(v) // 7 for v in row] for row in merged_map]
    return element, defect


def brute_condition(element_map, defect_map):
    """Corroded-pixel fraction per element class present, by direct counting."""
    area = {}
    corroded = {}
    for erow, drow in zip(element_map, defect_map):
        for e, d in zip(erow, drow):
            e = int(e)
            area[e] = area.get(e, 0) + 1
            if int(d) == 1:
                corroded[e] = corroded.get(e, 0) + 1
    return {e: corroded.get(e, 0) / n for e, n in area.items()}
