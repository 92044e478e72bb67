"""Partial-annotation supervision: admissibility checks, the valid distance
set, and gold-standard distance/flow targets.

An annotation consists of background strokes, foreground strokes and
boundary marks. Boundary marks come in two forms: hand-drawn boundary
pixels (a one-pixel ridge, sites at pixel centers) and explicit
inter-pixel boundary edges (sites at edge midpoints, produced e.g. when
deriving annotations from full ground truth). Stroke interfaces where a
background stroke touches a foreground stroke contribute boundary sites
implicitly.

The valid set is the subset of stroke pixels whose distance to the
annotated boundary sites provably equals the distance to the true
(unknown) object boundary; membership is decided by an exact integer
comparison of squared distances, with ties included.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import edt, raster

__all__ = [
    "AnnotationSet",
    "BoundaryRealization",
    "SupervisionTargets",
    "CheckResult",
    "ValidationReport",
    "annotation_from_codes",
    "annotation_to_codes",
    "realize_boundaries",
    "valid_set",
    "validate_annotation",
    "make_targets",
    "make_targets_full",
    "write_targets",
    "read_targets",
    "TARGETS_FORMAT_VERSION",
]

TARGETS_FORMAT_VERSION = 1


@dataclass(frozen=True)
class AnnotationSet:
    """Partial annotation: strokes plus boundary marks.

    Attributes
    ----------
    background, foreground : (h, w) bool
        Stroke masks; must not overlap. Their union is the stroke set.
    boundary_pixels : (h, w) bool
        Hand-drawn boundary ridge; disjoint from the strokes and never
        part of the stroke set (its pixels contribute boundary sites at
        their centers only).
    boundary_edges : (n, 4) int64
        Explicit inter-pixel boundary edges in canonical form; their
        midpoints contribute boundary sites.
    """

    background: np.ndarray
    foreground: np.ndarray
    boundary_pixels: np.ndarray
    boundary_edges: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), np.int64))

    def __post_init__(self):
        bg = np.asarray(self.background, dtype=bool)
        fg = np.asarray(self.foreground, dtype=bool)
        bp = np.asarray(self.boundary_pixels, dtype=bool)
        if bg.shape != fg.shape or bg.shape != bp.shape:
            raise ValueError("annotation masks must share dimensions")
        edges = raster.canonical_edges(self.boundary_edges)
        if edges.shape[0]:
            h, w = bg.shape
            xs = edges[:, [0, 2]]
            ys = edges[:, [1, 3]]
            if xs.min() < 0 or xs.max() >= w or ys.min() < 0 or ys.max() >= h:
                raise ValueError("boundary edge endpoint outside the domain")
            gaps = np.abs(edges[:, 0] - edges[:, 2]) + np.abs(edges[:, 1] - edges[:, 3])
            if (gaps != 1).any():
                raise ValueError("boundary edge endpoints must be 4-adjacent")
        object.__setattr__(self, "background", bg)
        object.__setattr__(self, "foreground", fg)
        object.__setattr__(self, "boundary_pixels", bp)
        object.__setattr__(self, "boundary_edges", edges)

    @property
    def shape(self):
        return self.background.shape

    @property
    def strokes(self):
        """Union of background and foreground strokes."""
        return self.background | self.foreground


@dataclass(frozen=True)
class BoundaryRealization:
    """Sub-pixel site realization of the annotation boundaries.

    ``boundary`` holds the user-certified boundary sites (stroke-contact
    midpoints, drawn boundary pixel centers, explicit edge midpoints);
    ``complete`` adds the stroke outlines, i.e. every site the
    annotation alone certifies as separating known from unknown.
    """

    boundary: np.ndarray
    complete: np.ndarray


def annotation_from_codes(codes):
    """Build an AnnotationSet from a stroke-code raster (0/1/2/3)."""
    c = np.asarray(codes)
    return AnnotationSet(
        background=c == raster.STROKE_BACKGROUND,
        foreground=c == raster.STROKE_FOREGROUND,
        boundary_pixels=c == raster.STROKE_BOUNDARY,
    )


def annotation_to_codes(ann):
    """Stroke-code raster for an AnnotationSet (boundary edges are not representable)."""
    codes = np.zeros(ann.shape, dtype=np.uint8)
    codes[ann.background] = raster.STROKE_BACKGROUND
    codes[ann.foreground] = raster.STROKE_FOREGROUND
    codes[ann.boundary_pixels] = raster.STROKE_BOUNDARY
    return codes


def _contact_edges(bg, fg):
    """Inter-pixel edges where a background stroke touches a foreground stroke."""
    parts = []
    dh = (bg[:, :-1] & fg[:, 1:]) | (fg[:, :-1] & bg[:, 1:])
    ys, xs = np.nonzero(dh)
    parts.append(np.stack([xs, ys, xs + 1, ys], axis=1))
    dv = (bg[:-1, :] & fg[1:, :]) | (fg[:-1, :] & bg[1:, :])
    ys, xs = np.nonzero(dv)
    parts.append(np.stack([xs, ys, xs, ys + 1], axis=1))
    return raster.canonical_edges(np.concatenate(parts, axis=0))


def realize_boundaries(ann, border_is_boundary=False):
    """Realize annotation boundaries as site sets.

    The boundary site set collects stroke-contact edge midpoints, drawn
    boundary pixel centers and explicit boundary edge midpoints; the
    complete set adds the outlines of both stroke masks (optionally
    including their image-border sides). The boundary set is a subset of
    the complete set by construction.
    """
    if (ann.background & ann.foreground).any():
        raise ValueError("overlapping strokes")
    if (ann.boundary_pixels & ann.strokes).any():
        raise ValueError("boundary pixels must be disjoint from strokes")
    contact = _contact_edges(ann.background, ann.foreground)
    boundary = edt.merge_sites(
        edt.edges_to_sites(contact),
        edt.edges_to_sites(ann.boundary_edges),
        edt.pixels_to_sites(ann.boundary_pixels),
    )
    complete = edt.merge_sites(
        edt.edges_to_sites(raster.region_boundary(ann.background, border_is_boundary)),
        edt.edges_to_sites(raster.region_boundary(ann.foreground, border_is_boundary)),
        boundary,
    )
    return BoundaryRealization(boundary=boundary, complete=complete)


def valid_set(ann, border_is_boundary=False):
    """Stroke pixels whose boundary distance is certified by the annotation.

    A stroke pixel belongs to the valid set when its distance to the
    boundary sites does not exceed its distance to the complete
    annotation boundary; the comparison runs on exact integer squared
    distances and includes ties.
    """
    h, w = ann.shape
    realization = realize_boundaries(ann, border_is_boundary)
    sq_b = edt.distance_to_sites(realization.boundary, w, h).sq
    sq_cb = edt.distance_to_sites(realization.complete, w, h).sq
    return ann.strokes & (sq_b <= sq_cb)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    offenders: list


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the four admissibility checks.

    stroke_classes:    strokes lie on their true class,
    stroke_overlap:    background and foreground strokes are disjoint,
    boundary_on_true:  every boundary site lies on a true boundary,
    boundary_complete: every true boundary edge touching a stroke is drawn.
    """

    stroke_classes: CheckResult
    stroke_overlap: CheckResult
    boundary_on_true: CheckResult
    boundary_complete: CheckResult

    @property
    def ok(self):
        return (
            self.stroke_classes.passed
            and self.stroke_overlap.passed
            and self.boundary_on_true.passed
            and self.boundary_complete.passed
        )

    def to_dict(self):
        def enc(check):
            return {"passed": check.passed, "offenders": [list(map(int, o)) for o in check.offenders]}

        return {
            "ok": self.ok,
            "checks": {
                "stroke_classes": enc(self.stroke_classes),
                "stroke_overlap": enc(self.stroke_overlap),
                "boundary_on_true": enc(self.boundary_on_true),
                "boundary_complete": enc(self.boundary_complete),
            },
        }


def _pixel_list(mask):
    ys, xs = np.nonzero(mask)
    return list(zip(xs.tolist(), ys.tolist()))


def _edge_rows_in(edges, universe):
    """Boolean membership of canonical edge rows within a canonical universe."""
    if edges.shape[0] == 0:
        return np.zeros(0, dtype=bool)
    if universe.shape[0] == 0:
        return np.zeros(edges.shape[0], dtype=bool)
    dt = np.dtype((np.void, edges.dtype.itemsize * 4))
    e = np.ascontiguousarray(edges).view(dt).ravel()
    u = np.ascontiguousarray(universe).view(dt).ravel()
    return np.isin(e, u)


def validate_annotation(ann, gt):
    """Check an annotation against fully labeled ground truth.

    Verifies the four admissibility conditions: strokes on the correct
    class, disjoint strokes, all boundary marks on true boundaries
    (edge-realized marks must be true edges; drawn boundary pixels must
    lie within sqrt(2)/2 of a true boundary site), and every true
    boundary edge touching a stroke actually marked (explicitly or by an
    incident drawn boundary pixel).
    """
    lab = np.asarray(gt)
    if lab.shape != ann.shape:
        raise ValueError("annotation and ground truth dimensions differ")
    h, w = lab.shape
    fg_true = lab > 0

    bad_bg = ann.background & fg_true
    bad_fg = ann.foreground & ~fg_true
    stroke_classes = CheckResult(
        passed=not (bad_bg.any() or bad_fg.any()),
        offenders=_pixel_list(bad_bg | bad_fg),
    )

    overlap = ann.background & ann.foreground
    stroke_overlap = CheckResult(passed=not overlap.any(), offenders=_pixel_list(overlap))

    true_edges = raster.boundary_edges(lab)
    true_sites = edt.edges_to_sites(true_edges)

    marked_edges = raster.canonical_edges(
        np.concatenate([_contact_edges(ann.background, ann.foreground), ann.boundary_edges])
    )
    offenders3 = []
    in_true = _edge_rows_in(marked_edges, true_edges)
    for row in marked_edges[~in_true]:
        offenders3.append(tuple(row.tolist()))
    # drawn boundary pixels: within sqrt(2)/2 of a true boundary site,
    # i.e. integer squared distance <= 2 in quarter-pixel^2 units
    if ann.boundary_pixels.any():
        sq_true = edt.distance_to_sites(true_sites, w, h).sq
        off = ann.boundary_pixels & (sq_true > 2)
        offenders3.extend(_pixel_list(off))
    boundary_on_true = CheckResult(passed=not offenders3, offenders=offenders3)

    strokes = ann.strokes
    if true_edges.shape[0]:
        e = true_edges
        in_domain2 = (e[:, 2] >= 0) & (e[:, 2] < w) & (e[:, 3] >= 0) & (e[:, 3] < h)
        touch = strokes[e[:, 1], e[:, 0]].copy()
        touch[in_domain2] |= strokes[e[in_domain2, 3], e[in_domain2, 2]]
        covered = _edge_rows_in(e, marked_edges)
        bp = ann.boundary_pixels
        incident = bp[e[:, 1], e[:, 0]].copy()
        incident[in_domain2] |= bp[e[in_domain2, 3], e[in_domain2, 2]]
        missing = touch & ~(covered | incident)
        offenders4 = [tuple(row.tolist()) for row in e[missing]]
    else:
        offenders4 = []
    boundary_complete = CheckResult(passed=not offenders4, offenders=offenders4)

    return ValidationReport(
        stroke_classes=stroke_classes,
        stroke_overlap=stroke_overlap,
        boundary_on_true=boundary_on_true,
        boundary_complete=boundary_complete,
    )


@dataclass(frozen=True)
class SupervisionTargets:
    """Training targets certified by a (possibly partial) annotation.

    Attributes
    ----------
    dist_target : (h, w) float64
        Distance to the nearest true boundary on ``valid & foreground``,
        the background constant on background strokes, the certified
        lower bound on uncertified foreground strokes, 0 on unlabeled
        pixels (outside every loss mask).
    flow_target : (2, h, w) float64
        Unit flow away from the boundary on ``flow_valid``, zero
        elsewhere (including background strokes).
    valid : (h, w) bool
        The valid distance set, additionally restricted to foreground
        pixels with a finite certified distance (the two differ only for
        annotations without any boundary site).
    flow_valid : (h, w) bool
        Valid foreground pixels whose 4-neighborhood stays inside
        ``valid`` or outside the strokes, so consumers may difference
        across the stencil.
    lower_bound : (h, w) float64
        Distance to the complete annotation boundary; a certified lower
        bound for the true boundary distance on stroke pixels.
    background : (h, w) bool
    foreground : (h, w) bool
    bg_value : float
    boundary_target : (h, w) float64 or None
        Only for full annotations: 1.0 on pixels incident to a true
        boundary edge, else 0.0.
    """

    dist_target: np.ndarray
    flow_target: np.ndarray
    valid: np.ndarray
    flow_valid: np.ndarray
    lower_bound: np.ndarray
    background: np.ndarray
    foreground: np.ndarray
    bg_value: float
    boundary_target: np.ndarray | None = None


def _flow_valid_mask(valid, strokes, foreground, positive):
    """Erode the valid foreground: each 4-neighbor must be valid or non-stroke."""
    ok = valid | ~strokes
    padded = np.pad(ok, 1, constant_values=True)
    inner = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return valid & foreground & positive & inner


def _targets_from_sites(boundary_sites, complete_sq, valid, bg_mask, fg_mask, bg_value):
    h, w = valid.shape
    res_b = edt.distance_to_sites(boundary_sites, w, h)
    # a certified foreground pixel must also have a finite boundary
    # distance; without any boundary site there is no usable target even
    # though the infinite distances compare equal
    finite_b = res_b.sq < edt.INF_SQ
    valid = valid & (bg_mask | finite_b)

    lower_bound = np.zeros((h, w), dtype=np.float64)
    finite = complete_sq < edt.INF_SQ
    lower_bound[finite] = np.sqrt(complete_sq[finite].astype(np.float64)) / 2.0

    dist_target = np.zeros((h, w), dtype=np.float64)
    dist_target[bg_mask] = bg_value
    fg_valid = valid & fg_mask
    dist_target[fg_valid] = res_b.dist[fg_valid]
    # uncertified foreground strokes carry the certified lower bound, so a
    # prediction equal to the stored target never trips the hinge term
    uncertified = fg_mask & ~valid
    dist_target[uncertified] = lower_bound[uncertified]

    strokes = bg_mask | fg_mask
    positive = (res_b.sq > 0) & finite_b
    flow_valid = _flow_valid_mask(valid, strokes, fg_mask, positive)

    flow_target = np.zeros((2, h, w), dtype=np.float64)
    if res_b.nearest is not None and flow_valid.any():
        ys, xs = np.nonzero(flow_valid)
        dx = xs - res_b.nearest[ys, xs, 0]
        dy = ys - res_b.nearest[ys, xs, 1]
        d = res_b.dist[ys, xs]
        flow_target[0, ys, xs] = dx / d
        flow_target[1, ys, xs] = dy / d

    return dist_target, flow_target, valid, flow_valid, lower_bound


def make_targets(ann, bg_value=-1.0, border_is_boundary=False):
    """Supervision targets from a partial annotation.

    Distance targets are certified on the valid foreground and constant
    on background strokes; unit flow targets point away from the nearest
    boundary site on the eroded valid foreground; the lower-bound field
    carries the distance to the complete annotation boundary.
    """
    h, w = ann.shape
    realization = realize_boundaries(ann, border_is_boundary)
    res_cb = edt.distance_to_sites(realization.complete, w, h)
    sq_b = edt.distance_to_sites(realization.boundary, w, h).sq
    certified = ann.strokes & (sq_b <= res_cb.sq)
    dist_target, flow_target, valid, flow_valid, lower_bound = _targets_from_sites(
        realization.boundary, res_cb.sq, certified, ann.background, ann.foreground, bg_value
    )
    return SupervisionTargets(
        dist_target=dist_target,
        flow_target=flow_target,
        valid=valid,
        flow_valid=flow_valid,
        lower_bound=lower_bound,
        background=ann.background,
        foreground=ann.foreground,
        bg_value=float(bg_value),
    )


def make_targets_full(gt, bg_value=-1.0):
    """Classic full-annotation gold standard from a label field.

    Treats the labels as a total annotation: every pixel is a stroke of
    its true class and the boundary marks are exactly the true boundary
    edges, so the valid set is the whole domain. Also emits the legacy
    boundary-probability target (1 on pixels incident to a true edge).
    """
    lab = np.asarray(gt)
    h, w = lab.shape
    fg = lab > 0
    bg = ~fg
    true_edges = raster.boundary_edges(lab)
    sites = edt.edges_to_sites(true_edges)
    complete_sq = edt.distance_to_sites(sites, w, h).sq
    dist_target, flow_target, valid, flow_valid, lower_bound = _targets_from_sites(
        sites, complete_sq, np.ones((h, w), dtype=bool), bg, fg, bg_value
    )

    boundary_target = np.zeros((h, w), dtype=np.float64)
    if true_edges.shape[0]:
        e = true_edges
        boundary_target[e[:, 1], e[:, 0]] = 1.0
        boundary_target[e[:, 3], e[:, 2]] = 1.0

    return SupervisionTargets(
        dist_target=dist_target,
        flow_target=flow_target,
        valid=valid,
        flow_valid=flow_valid,
        lower_bound=lower_bound,
        background=bg,
        foreground=fg,
        bg_value=float(bg_value),
        boundary_target=boundary_target,
    )


def _write_mask_png(mask, path):
    raster.write_stroke_png(mask.astype(np.uint8), path)


def write_targets(targets, out_dir, provenance=None):
    """Persist targets as SKF arrays, PNG masks and a JSON sidecar."""
    os.makedirs(out_dir, exist_ok=True)
    raster.write_array(targets.dist_target, os.path.join(out_dir, "d_star.skf"))
    raster.write_array(targets.flow_target, os.path.join(out_dir, "v_star.skf"))
    raster.write_array(targets.lower_bound, os.path.join(out_dir, "lower_bound.skf"))
    _write_mask_png(targets.valid, os.path.join(out_dir, "valid.png"))
    _write_mask_png(targets.flow_valid, os.path.join(out_dir, "flow_valid.png"))
    _write_mask_png(targets.background, os.path.join(out_dir, "s0.png"))
    _write_mask_png(targets.foreground, os.path.join(out_dir, "s1.png"))
    if targets.boundary_target is not None:
        raster.write_array(targets.boundary_target, os.path.join(out_dir, "b_star.skf"))
    sidecar = {
        "format_version": TARGETS_FORMAT_VERSION,
        "bg_value": targets.bg_value,
        "provenance": provenance or {},
    }
    with open(os.path.join(out_dir, "targets.json"), "w") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_targets(target_dir):
    """Load a persisted target directory."""
    with open(os.path.join(target_dir, "targets.json")) as fh:
        sidecar = json.load(fh)
    if sidecar.get("format_version") != TARGETS_FORMAT_VERSION:
        raise ValueError(f"unsupported targets format version {sidecar.get('format_version')}")
    b_path = os.path.join(target_dir, "b_star.skf")
    return SupervisionTargets(
        dist_target=raster.read_array(os.path.join(target_dir, "d_star.skf")),
        flow_target=raster.read_array(os.path.join(target_dir, "v_star.skf")),
        valid=raster.read_stroke_png(os.path.join(target_dir, "valid.png")).astype(bool),
        flow_valid=raster.read_stroke_png(os.path.join(target_dir, "flow_valid.png")).astype(bool),
        lower_bound=raster.read_array(os.path.join(target_dir, "lower_bound.skf")),
        background=raster.read_stroke_png(os.path.join(target_dir, "s0.png")).astype(bool),
        foreground=raster.read_stroke_png(os.path.join(target_dir, "s1.png")).astype(bool),
        bg_value=float(sidecar["bg_value"]),
        boundary_target=raster.read_array(b_path) if os.path.exists(b_path) else None,
    )
