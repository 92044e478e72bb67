"""The partial-annotation losses and their analytic gradients.

Shows the three training-facing terms: masked distance regression,
masked flow regression, and the asymmetric lower-bound hinge. The
gradients returned by the library are compared against central finite
differences at random coordinates.
"""

import numpy as np

from sketchdist import losses, sparsity, supervision
from sketchdist.losses import LossWeights

rng = np.random.default_rng(8)

gt = np.zeros((48, 48), dtype=np.int32)
yy, xx = np.ogrid[:48, :48]
gt[(xx - 16) ** 2 + (yy - 20) ** 2 <= 100] = 1
gt[(xx - 34) ** 2 + (yy - 30) ** 2 <= 81] = 2

ann = sparsity.derive_annotation(gt, rng.random(gt.shape) < 0.5)
targets = supervision.make_targets(ann)
weights = LossWeights()

# --- at the gold prediction every term vanishes -------------------------
d_gold = targets.dist_target.copy()
uncertified = targets.foreground & ~targets.valid
d_gold[uncertified] = targets.lower_bound[uncertified]
total = losses.sketchpose_total(d_gold, targets.flow_target, targets, weights)
print(f"loss at gold prediction: {total.value}")

# --- a noisy prediction --------------------------------------------------
d = d_gold + 0.3 * rng.normal(size=gt.shape)
v = targets.flow_target + 0.2 * rng.normal(size=(2,) + gt.shape)
for name, term in (
    ("distance (masked mse)", losses.loss_distance_partial(d, targets, weights.distance)),
    ("flow (masked mse)", losses.loss_flow_partial(v, targets, weights.flow_mse)),
    ("lower-bound hinge", losses.loss_distance_ineq(d, targets, weights.distance_ineq)),
):
    print(f"  {name:24s} = {term.value:.6f}")
total = losses.sketchpose_total(d, v, targets, weights)
print(f"  {'total':24s} = {total.value:.6f}")

# --- finite-difference check ---------------------------------------------
h_step = 1e-4
worst = 0.0
for _ in range(200):
    if rng.random() < 0.5:
        arr, grad = d, total.grad_dist
    else:
        arr, grad = v, total.grad_flow
    c = int(rng.integers(arr.size))
    flat = arr.ravel()
    orig = flat[c]
    flat[c] = orig + h_step
    fp = losses.sketchpose_total(d, v, targets, weights).value
    flat[c] = orig - h_step
    fm = losses.sketchpose_total(d, v, targets, weights).value
    flat[c] = orig
    fd = (fp - fm) / (2 * h_step)
    worst = max(worst, abs(grad.ravel()[c] - fd) / max(1.0, abs(fd)))
print(f"worst relative gradient error over 200 coordinates: {worst:.2e}")

# --- the legacy full-annotation composite, for comparison ----------------
full = supervision.make_targets_full(gt)
rho = losses.weight_field(gt)
b_sat = np.where(full.boundary_target > 0, 40.0, -40.0)
omni = losses.omnipose_total(b_sat, full.dist_target, full.flow_target, full, rho, weights, steps=4)
print(f"classic composite at gold (saturated boundary logits): {omni.value:.2e}")
