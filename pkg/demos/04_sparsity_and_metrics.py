"""Annotation sparsity levels and the evaluation metric suite.

Sweeps the standard annotation budgets (10/25/50/100% of pixels), shows
how much of the image carries a certified distance at each level, and scores a
deliberately imperfect segmentation with every metric.
"""

import numpy as np

from sketchdist import metrics, sparsity, supervision

rng = np.random.default_rng(21)
h = w = 128
gt = np.zeros((h, w), dtype=np.int32)
yy, xx = np.ogrid[:h, :w]
label = 0
placed = []
while label < 9:
    r = int(rng.integers(7, 14))
    cx, cy = int(rng.integers(r, w - r)), int(rng.integers(r, h - r))
    if all(np.hypot(cx - px, cy - py) >= r + pr + 2 for px, py, pr in placed):
        label += 1
        gt[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = label
        placed.append((cx, cy, r))

print("fraction  mask px   valid px   certified share of strokes")
for fraction in (0.10, 0.25, 0.50, 1.00):
    mask = sparsity.gaussian_mask(w, h, sparsity.SparsityConfig(fraction, sigma=20, seed=99))
    ann = sparsity.derive_annotation(gt, mask)
    valid = supervision.valid_set(ann)
    n_mask = int(mask.sum())
    print(f"  {fraction:4.0%}   {n_mask:7d}   {int(valid.sum()):8d}   "
          f"{valid.sum() / max(n_mask, 1):.3f}")

# --- a flawed prediction: one split instance, one missed ----------------
pred = gt.copy()
first = placed[0]
pred[(xx - first[0]) ** 2 + (yy - first[1]) ** 2 <= first[2] ** 2] = 0  # miss
cols = np.arange(w)[None, :]
pred[(gt == 3) & (cols < placed[2][0])] = 30  # split in two
pred[(gt == 3) & (cols >= placed[2][0])] = 31
print("\nscoring an imperfect prediction at IoU threshold 0.5:")
result = metrics.match_instances(pred, gt, tau=0.5)
precision, recall, f1 = metrics.precision_recall_f1(result)
dice, jaccard = metrics.average_dice_and_jaccard(result, pred, gt)
dq, sq = metrics.panoptic_dq_sq(result)
print(f"  tp={result.tp} fp={result.fp} fn={result.fn}")
print(f"  object accuracy {metrics.object_accuracy([result]):.3f}")
print(f"  precision {precision:.3f}  recall {recall:.3f}  f1 {f1:.3f}")
print(f"  dice {dice:.3f}  jaccard {jaccard:.3f}  dq {dq:.3f}  sq {sq:.3f}")

taus = [round(0.5 + 0.05 * i, 2) for i in range(9)]
curve = metrics.f1_curve([pred], [gt], taus)
print("\nf1 vs IoU threshold:")
print("  " + "  ".join(f"{t:.2f}:{f1:.2f}" for t, f1 in curve))
