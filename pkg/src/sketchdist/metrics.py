"""Instance matching and evaluation metrics for instance segmentations.

Matching computes the full IoU table in one joint-histogram pass and
accepts pairs greedily in descending IoU (ties by instance ids), each
instance at most once, keeping only pairs whose IoU strictly exceeds the
threshold. At thresholds of 0.5 and above each instance has at most one
candidate, so the greedy matching is optimal.

The degenerate empty-vs-empty image scores 1.0 on the detection-style
metrics (object accuracy, precision, recall, F1, detection quality);
pair-averaged metrics (DICE, Jaccard, segmentation quality) are 0 when
there are no matched pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MatchResult",
    "match_instances",
    "object_accuracy",
    "precision_recall_f1",
    "average_dice_and_jaccard",
    "panoptic_dq_sq",
    "f1_curve",
]


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching predicted against ground-truth instances."""

    tau: float
    pairs: list
    tp: int
    fp: int
    fn: int
    unmatched_gt: list
    unmatched_pred: list

    @property
    def n_gt(self):
        return self.tp + self.fn

    @property
    def n_pred(self):
        return self.tp + self.fp


def _instance_ids(lab):
    ids = np.unique(lab)
    return ids[ids > 0]


def _iou_table(pred, gt):
    """IoU of every overlapping (gt, pred) instance pair via one joint histogram."""
    gt_ids = _instance_ids(gt)
    pred_ids = _instance_ids(pred)
    gt_sizes = {int(g): int(c) for g, c in zip(*np.unique(gt[gt > 0], return_counts=True))}
    pred_sizes = {int(p): int(c) for p, c in zip(*np.unique(pred[pred > 0], return_counts=True))}
    both = (gt > 0) & (pred > 0)
    table = {}
    if both.any():
        base = int(pred.max()) + 1
        keys = gt[both].astype(np.int64) * base + pred[both].astype(np.int64)
        uniq, counts = np.unique(keys, return_counts=True)
        for k, c in zip(uniq.tolist(), counts.tolist()):
            g, p = k // base, k % base
            table[(g, p)] = c / (gt_sizes[g] + pred_sizes[p] - c)
    return table, gt_ids.tolist(), pred_ids.tolist()


def match_instances(pred, gt, tau=0.5):
    """Greedy one-to-one instance matching at an IoU threshold.

    Pairs are accepted in descending IoU (ties by (gt id, pred id)),
    each instance used at most once, and only when IoU strictly exceeds
    ``tau``.
    """
    p = np.asarray(pred)
    g = np.asarray(gt)
    if p.shape != g.shape:
        raise ValueError("prediction and ground truth dimensions differ")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie strictly between 0 and 1")
    table, gt_ids, pred_ids = _iou_table(p, g)
    candidates = sorted(table.items(), key=lambda kv: (-kv[1], kv[0][0], kv[0][1]))
    used_gt = set()
    used_pred = set()
    pairs = []
    for (gid, pid), iou in candidates:
        if iou <= tau:
            break
        if gid in used_gt or pid in used_pred:
            continue
        used_gt.add(gid)
        used_pred.add(pid)
        pairs.append((gid, pid, float(iou)))
    tp = len(pairs)
    return MatchResult(
        tau=float(tau),
        pairs=pairs,
        tp=tp,
        fp=len(pred_ids) - tp,
        fn=len(gt_ids) - tp,
        unmatched_gt=[i for i in gt_ids if i not in used_gt],
        unmatched_pred=[i for i in pred_ids if i not in used_pred],
    )


def object_accuracy(results):
    """Mean per-image object detection accuracy tp / (tp + fp + fn).

    An image without instances on either side counts as a perfect 1.0.
    """
    if not results:
        raise ValueError("empty result list")
    scores = []
    for r in results:
        denom = r.tp + r.fp + r.fn
        scores.append(1.0 if denom == 0 else r.tp / denom)
    return float(np.mean(scores))


def precision_recall_f1(result):
    """Precision, recall and their harmonic mean for one match result."""
    tp, fp, fn = result.tp, result.fp, result.fn
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0, 1.0, 1.0
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def average_dice_and_jaccard(result, pred, gt):
    """Pair-averaged DICE and Jaccard over the matched instances."""
    if not result.pairs:
        return 0.0, 0.0
    p = np.asarray(pred)
    g = np.asarray(gt)
    dices = []
    jaccards = []
    for gid, pid, iou in result.pairs:
        a = g == gid
        b = p == pid
        inter = int((a & b).sum())
        dices.append(2.0 * inter / (int(a.sum()) + int(b.sum())))
        jaccards.append(iou)
    return float(np.mean(dices)), float(np.mean(jaccards))


def panoptic_dq_sq(result):
    """Detection quality tp/(tp + fp/2 + fn/2) and mean matched IoU."""
    tp, fp, fn = result.tp, result.fp, result.fn
    if tp == 0 and fp == 0 and fn == 0:
        dq = 1.0
    else:
        dq = tp / (tp + 0.5 * fp + 0.5 * fn)
    sq = float(np.mean([iou for _, _, iou in result.pairs])) if result.pairs else 0.0
    return dq, sq


def f1_curve(preds, gts, taus):
    """Dataset-aggregated F1 per IoU threshold (tp/fp/fn summed over images)."""
    if len(preds) != len(gts):
        raise ValueError("prediction and ground truth lists differ in length")
    taus = list(taus)
    if any(not 0.0 < t < 1.0 for t in taus):
        raise ValueError("thresholds must lie strictly between 0 and 1")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("thresholds must be strictly increasing")
    curve = []
    for tau in taus:
        tp = fp = fn = 0
        for p, g in zip(preds, gts):
            r = match_instances(p, g, tau=tau)
            tp += r.tp
            fp += r.fp
            fn += r.fn
        if tp == 0 and fp == 0 and fn == 0:
            f1 = 1.0
        else:
            f1 = 2.0 * tp / (2.0 * tp + fp + fn) if (2 * tp + fp + fn) else 0.0
        curve.append((float(tau), float(f1)))
    return curve
