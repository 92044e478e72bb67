"""Sparse-annotation supervision toolkit.

Turns partial stroke/boundary annotations into certified distance-map
and flow-field training targets, evaluates the associated losses with
analytic gradients, reconstructs instance masks from predicted fields by
Euler integration, and scores instance segmentations.
"""

__version__ = "0.1.0"

from . import edt, flowfield, losses, metrics, raster, sparsity, supervision  # noqa: F401
from .edt import DistanceResult, distance_to_sites, edges_to_sites, pixels_to_sites
from .flowfield import (
    ReconstructionParams,
    Trajectory,
    euler_integrate,
    euler_loss_trajectories,
    flow_from_distance,
    reconstruct_masks,
)
from .losses import (
    LossValue,
    LossWeights,
    loss_boundary,
    loss_distance,
    loss_distance_ineq,
    loss_distance_partial,
    loss_euler,
    loss_flow_mse,
    loss_flow_norm,
    loss_flow_partial,
    omnipose_total,
    sketchpose_total,
    weight_field,
)
from .metrics import (
    MatchResult,
    average_dice_and_jaccard,
    f1_curve,
    match_instances,
    object_accuracy,
    panoptic_dq_sq,
    precision_recall_f1,
)
from .raster import (
    boundary_edges,
    compact_labels,
    connected_components,
    read_array,
    read_label_png,
    read_stroke_png,
    region_boundary,
    write_array,
    write_label_png,
    write_stroke_png,
)
from .sparsity import (
    SparsityConfig,
    crop_annotation,
    derive_annotation,
    flip_annotation,
    gaussian_mask,
    sample_patch_centers,
)
from .supervision import (
    AnnotationSet,
    SupervisionTargets,
    ValidationReport,
    annotation_from_codes,
    make_targets,
    make_targets_full,
    read_targets,
    realize_boundaries,
    valid_set,
    validate_annotation,
    write_targets,
)
