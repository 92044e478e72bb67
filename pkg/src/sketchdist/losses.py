"""Loss evaluation for distance/flow supervision.

Two families: the five classic full-annotation terms (value only) and
the three partial-annotation terms (value plus analytic gradients with
respect to the predictions). All sums accumulate in float64 regardless
of the input precision. Gradients are zero outside each term's
summation mask, and empty masks yield zero, never NaN.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import edt, flowfield, raster

__all__ = [
    "LossWeights",
    "LossValue",
    "weight_field",
    "loss_boundary",
    "loss_distance",
    "loss_flow_mse",
    "loss_flow_norm",
    "loss_euler",
    "loss_distance_partial",
    "loss_flow_partial",
    "loss_distance_ineq",
    "sketchpose_total",
    "omnipose_total",
    "INEQ_MODES",
]

INEQ_MODES = ("theorem_consistent", "paper_literal")


@dataclass(frozen=True)
class LossWeights:
    """Term weights; the classic empirical defaults, plus the inequality weight."""

    boundary: float = 10.0
    distance: float = 2.0
    flow_mse: float = 2.0
    flow_norm: float = 2.0
    flow_euler: float = 1.0
    distance_ineq: float = 2.0

    def __post_init__(self):
        for name in ("boundary", "distance", "flow_mse", "flow_norm", "flow_euler", "distance_ineq"):
            if getattr(self, name) < 0:
                raise ValueError(f"weight {name} must be non-negative")

    def to_dict(self):
        return {
            "boundary": self.boundary,
            "distance": self.distance,
            "flow_mse": self.flow_mse,
            "flow_norm": self.flow_norm,
            "flow_euler": self.flow_euler,
            "distance_ineq": self.distance_ineq,
        }

    @classmethod
    def from_dict(cls, d):
        known = {
            "boundary", "distance", "flow_mse", "flow_norm", "flow_euler", "distance_ineq",
        }
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown loss weights: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class LossValue:
    """Scalar loss, with optional gradients matching the prediction shapes."""

    value: float
    grad_dist: np.ndarray | None = None
    grad_flow: np.ndarray | None = None


def _check_same_shape(*arrays):
    shapes = {np.asarray(a).shape for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"shape mismatch: {sorted(map(str, shapes))}")


def weight_field(gt, boundary_gain=4.0, sigma=2.0):
    """Per-pixel loss weight, elevated near the true boundaries.

    weight = 1 + gain * exp(-dist(x, boundary)^2 / (2 sigma^2)); a
    uniform label field has no boundary and yields a constant 1.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lab = np.asarray(gt)
    h, w = lab.shape
    edges = raster.boundary_edges(lab)
    if edges.shape[0] == 0:
        return np.ones((h, w), dtype=np.float64)
    dist = edt.distance_to_sites(edt.edges_to_sites(edges), w, h).dist
    return 1.0 + boundary_gain * np.exp(-(dist**2) / (2.0 * sigma * sigma))


def loss_boundary(b, b_star, rho, weight=10.0):
    """Sigmoid + binary cross entropy on boundary logits (value only).

    Uses the numerically stable logits form
    g(t, y) = max(t, 0) - t*y + log(1 + exp(-|t|)). The weight field is
    accepted for signature parity but unused in this term.
    """
    t = np.asarray(b, dtype=np.float64)
    y = np.asarray(b_star, dtype=np.float64)
    _check_same_shape(t, y)
    g = np.maximum(t, 0.0) - t * y + np.log1p(np.exp(-np.abs(t)))
    return LossValue(value=float(weight * g.mean()))


def loss_distance(d, d_star, rho, weight=2.0):
    """Weighted mean squared error between distance maps (value only)."""
    dp = np.asarray(d, dtype=np.float64)
    dg = np.asarray(d_star, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    _check_same_shape(dp, dg, r)
    return LossValue(value=float(weight * ((dp - dg) ** 2 * r).mean()))


def loss_flow_mse(v, v_star, rho, weight=2.0):
    """Weighted mean squared error between flow fields (value only)."""
    vp = np.asarray(v, dtype=np.float64)
    vg = np.asarray(v_star, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    _check_same_shape(vp, vg)
    if vp.shape[1:] != r.shape:
        raise ValueError("weight field shape mismatch")
    sq = ((vp - vg) ** 2).sum(axis=0)
    return LossValue(value=float(weight * (sq * r).mean()))


def loss_flow_norm(v, v_star, rho, weight=2.0):
    """Weighted mean squared difference of flow norms (value only)."""
    vp = np.asarray(v, dtype=np.float64)
    vg = np.asarray(v_star, dtype=np.float64)
    r = np.asarray(rho, dtype=np.float64)
    _check_same_shape(vp, vg)
    if vp.shape[1:] != r.shape:
        raise ValueError("weight field shape mismatch")
    np_ = np.hypot(vp[0], vp[1])
    ng = np.hypot(vg[0], vg[1])
    return LossValue(value=float(weight * ((np_ - ng) ** 2 * r).mean()))


def loss_euler(v, v_star, dt=1.0, steps=4, weight=1.0):
    """Mean squared deviation between Euler trajectories (value only).

    Trajectories start from every pixel center and run under the
    predicted and gold flows; deviations are summed over the steps and
    averaged over the pixel count.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    vp = np.asarray(v, dtype=np.float64)
    vg = np.asarray(v_star, dtype=np.float64)
    _check_same_shape(vp, vg)
    h, w = vp.shape[1:]
    xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    starts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    track_p = flowfield._integrate(vp, starts, dt, steps, record=True)
    track_g = flowfield._integrate(vg, starts, dt, steps, record=True)
    dev = ((track_p[1:] - track_g[1:]) ** 2).sum(axis=2)
    return LossValue(value=float(weight * dev.sum() / (h * w)))


def _masked_sq_diff(pred, gold, mask, weight):
    """Masked mean squared error and its gradient w.r.t. the prediction."""
    n = int(mask.sum())
    grad = np.zeros(pred.shape, dtype=np.float64)
    if n == 0:
        return 0.0, grad
    diff = np.where(mask, pred - gold, 0.0)
    value = weight * float((diff**2).sum()) / n
    grad[...] = (2.0 * weight / n) * diff
    return value, grad


def loss_distance_partial(d, targets, weight=2.0):
    """Mean squared distance error over the certified mask (value + gradient).

    The summation mask is the valid set united with the background
    strokes: the only pixels where the distance target is defined.
    """
    dp = np.asarray(d, dtype=np.float64)
    _check_same_shape(dp, targets.dist_target)
    mask = targets.valid | targets.background
    value, grad = _masked_sq_diff(dp, np.asarray(targets.dist_target, np.float64), mask, weight)
    return LossValue(value=value, grad_dist=grad)


def loss_flow_partial(v, targets, weight=2.0):
    """Mean squared flow error over the certified mask (value + gradient).

    The summation mask is the flow-valid set united with the background
    strokes (where the flow target is zero by definition).
    """
    vp = np.asarray(v, dtype=np.float64)
    _check_same_shape(vp, targets.flow_target)
    mask = targets.flow_valid | targets.background
    n = int(mask.sum())
    grad = np.zeros(vp.shape, dtype=np.float64)
    if n == 0:
        return LossValue(value=0.0, grad_flow=grad)
    diff = np.where(mask[None], vp - np.asarray(targets.flow_target, np.float64), 0.0)
    value = weight * float((diff**2).sum()) / n
    grad[...] = (2.0 * weight / n) * diff
    return LossValue(value=value, grad_flow=grad)


def loss_distance_ineq(d, targets, weight=2.0, mode="theorem_consistent"):
    """Squared-hinge penalty against the certified lower bound (value + gradient).

    Summed over foreground stroke pixels. ``theorem_consistent``
    (default) penalizes predictions below the lower bound,
    ReLU^2(lower_bound - d); ``paper_literal`` applies the printed
    opposite orientation, ReLU^2(d - lower_bound).
    """
    if mode not in INEQ_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {INEQ_MODES}")
    dp = np.asarray(d, dtype=np.float64)
    _check_same_shape(dp, targets.lower_bound)
    mask = targets.foreground
    n = int(mask.sum())
    grad = np.zeros(dp.shape, dtype=np.float64)
    if n == 0:
        return LossValue(value=0.0, grad_dist=grad)
    lb = np.asarray(targets.lower_bound, dtype=np.float64)
    if mode == "theorem_consistent":
        viol = np.where(mask, np.maximum(lb - dp, 0.0), 0.0)
        sign = -1.0
    else:
        viol = np.where(mask, np.maximum(dp - lb, 0.0), 0.0)
        sign = 1.0
    value = weight * float((viol**2).sum()) / n
    grad[...] = sign * (2.0 * weight / n) * viol
    return LossValue(value=value, grad_dist=grad)


def sketchpose_total(d, v, targets, weights=LossWeights(), mode="theorem_consistent"):
    """Total partial-annotation loss: flow + distance + inequality terms.

    Returns the summed value and accumulated gradients with respect to
    the predicted distance map and flow field.
    """
    lv = loss_flow_partial(v, targets, weights.flow_mse)
    ld = loss_distance_partial(d, targets, weights.distance)
    li = loss_distance_ineq(d, targets, weights.distance_ineq, mode)
    return LossValue(
        value=lv.value + ld.value + li.value,
        grad_dist=ld.grad_dist + li.grad_dist,
        grad_flow=lv.grad_flow,
    )


def omnipose_total(b, d, v, full_targets, rho, weights=LossWeights(), dt=1.0, steps=4):
    """Classic full-annotation composite loss (value only)."""
    if full_targets.boundary_target is None:
        raise ValueError("full targets with a boundary channel are required")
    value = (
        loss_boundary(b, full_targets.boundary_target, rho, weights.boundary).value
        + loss_distance(d, full_targets.dist_target, rho, weights.distance).value
        + loss_flow_mse(v, full_targets.flow_target, rho, weights.flow_mse).value
        + loss_flow_norm(v, full_targets.flow_target, rho, weights.flow_norm).value
        + loss_euler(v, full_targets.flow_target, dt, steps, weights.flow_euler).value
    )
    return LossValue(value=value)
