"""From a handful of strokes to certified training targets.

Builds a small synthetic scene (three cells, two of them touching),
simulates a partial annotation, and walks through the supervision
pipeline: boundary realization, the certified valid set, and the
distance / flow targets. Outputs land in demos/output/01/.
"""

import os

import numpy as np

from sketchdist import raster, sparsity, supervision

out_dir = os.path.join(os.path.dirname(__file__), "output", "01")
os.makedirs(out_dir, exist_ok=True)

# --- a scene with touching instances -----------------------------------
h = w = 96
gt = np.zeros((h, w), dtype=np.int32)
yy, xx = np.ogrid[:h, :w]
gt[(xx - 30) ** 2 + (yy - 34) ** 2 <= 18**2] = 1
gt[(xx - 62) ** 2 + (yy - 40) ** 2 <= 16**2] = 2  # touches instance 1
gt[(xx - 50) ** 2 + (yy - 74) ** 2 <= 12**2] = 3
print(f"scene: {gt.max()} instances, {int((gt > 0).sum())} foreground pixels")

# --- simulate a sparse annotation covering ~35% of the pixels ----------
mask = sparsity.gaussian_mask(w, h, sparsity.SparsityConfig(fraction=0.35, sigma=12, seed=5))
ann = sparsity.derive_annotation(gt, mask)
print(f"annotation: {int(ann.background.sum())} background px, "
      f"{int(ann.foreground.sum())} foreground px, "
      f"{ann.boundary_edges.shape[0]} boundary edges")

# the derived annotation is admissible by construction
print("admissible:", supervision.validate_annotation(ann, gt).ok)

# --- the certified region ----------------------------------------------
realization = supervision.realize_boundaries(ann)
print(f"boundary sites: {realization.boundary.shape[0]}, "
      f"complete annotation boundary: {realization.complete.shape[0]} sites")

valid = supervision.valid_set(ann)
strokes = ann.strokes
print(f"valid set: {int(valid.sum())} of {int(strokes.sum())} stroke pixels "
      f"({100.0 * valid.sum() / strokes.sum():.1f}%) carry a certified distance")

# --- targets -------------------------------------------------------------
targets = supervision.make_targets(ann)
supervision.write_targets(targets, out_dir)
fg_valid = targets.valid & ann.foreground
print(f"distance target range on certified foreground: "
      f"[{targets.dist_target[fg_valid].min():.2f}, {targets.dist_target[fg_valid].max():.2f}] px")
norms = np.hypot(targets.flow_target[0], targets.flow_target[1])
print(f"flow target: unit-norm on {int(targets.flow_valid.sum())} pixels "
      f"(max |norm - 1| = {np.abs(norms[targets.flow_valid] - 1).max():.1e})")

# quick-look PNGs: the valid set and a coarse distance visualization
raster.write_label_png(gt, os.path.join(out_dir, "gt.png"))
viz = np.clip(targets.dist_target, 0, None)
viz = (viz / max(viz.max(), 1e-9) * 65535).astype(np.uint16)
raster.write_label_png(viz, os.path.join(out_dir, "dist_viz.png"))
print(f"wrote targets and previews to {out_dir}")
