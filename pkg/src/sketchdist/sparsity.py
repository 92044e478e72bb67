"""Reproducible partial annotations from fully labeled ground truth.

Sparsity masks come from thresholding smoothed white Gaussian noise at
an exact pixel-count quantile; the noise is drawn from a counter-based
Philox generator so masks are bit-reproducible across runs and can be
created once and reused deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import raster
from .supervision import AnnotationSet

__all__ = [
    "SparsityConfig",
    "gaussian_mask",
    "derive_annotation",
    "sample_patch_centers",
    "crop_annotation",
    "flip_annotation",
]


@dataclass(frozen=True)
class SparsityConfig:
    """Fraction of annotated pixels, smoothing scale and seed."""

    fraction: float
    sigma: float = 50.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ValueError("fraction must lie in [0, 1]")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def gaussian_mask(width, height, config):
    """Spatially coherent random mask with an exact pixel count.

    Draws an i.i.d. standard-normal field from Philox(seed), smooths it
    with a separable Gaussian (std ``sigma``, truncated at 4 sigma,
    reflect padding) and keeps exactly round(fraction * n) pixels: those
    with the largest smoothed values, ties broken by raster index.
    """
    n = width * height
    keep = int(np.floor(config.fraction * n + 0.5))
    mask = np.zeros((height, width), dtype=bool)
    if keep == 0:
        return mask
    if keep >= n:
        mask[:] = True
        return mask
    rng = np.random.Generator(np.random.Philox(config.seed))
    noise = rng.standard_normal((height, width))
    smooth = ndimage.gaussian_filter(noise, sigma=config.sigma, mode="reflect", truncate=4.0)
    order = np.argsort(-smooth.ravel(), kind="stable")
    mask.ravel()[order[:keep]] = True
    return mask


def derive_annotation(gt, mask):
    """Annotation satisfying the admissibility conditions by construction.

    Background/foreground strokes are the masked true classes; every
    true boundary edge with at least one endpoint in the mask becomes an
    explicit boundary edge, so boundaries inside strokes are always
    completely drawn.
    """
    lab = np.asarray(gt)
    m = np.asarray(mask, dtype=bool)
    if lab.shape != m.shape:
        raise ValueError("ground truth and mask dimensions differ")
    fg = lab > 0
    edges = raster.boundary_edges(lab)
    if edges.shape[0]:
        touch = m[edges[:, 1], edges[:, 0]] | m[edges[:, 3], edges[:, 2]]
        edges = edges[touch]
    return AnnotationSet(
        background=~fg & m,
        foreground=fg & m,
        boundary_pixels=np.zeros(lab.shape, dtype=bool),
        boundary_edges=edges,
    )


def sample_patch_centers(ann, count, patch_size, seed):
    """Uniform patch centers over annotated pixels, clamped into the domain.

    Draws with replacement; each clamped patch rectangle still contains
    the annotated pixel that produced it.
    """
    h, w = ann.shape
    if patch_size > min(w, h):
        raise ValueError("patch size exceeds the domain")
    ys, xs = np.nonzero(ann.strokes)
    if len(ys) == 0:
        raise ValueError("empty annotation")
    rng = np.random.Generator(np.random.Philox(seed))
    idx = rng.integers(0, len(ys), size=count)
    half = patch_size // 2
    hi_x = w - 1 - (patch_size - 1 - half)
    hi_y = h - 1 - (patch_size - 1 - half)
    cx = np.clip(xs[idx], half, hi_x)
    cy = np.clip(ys[idx], half, hi_y)
    return np.stack([cx, cy], axis=1)


def crop_annotation(ann, rect):
    """Crop to ``(x0, y0, width, height)``; targets must be recomputed after.

    Boundary edges are kept only when both endpoints stay inside the
    crop (an edge cut by the crop border leaves the annotated domain).
    """
    x0, y0, cw, ch = rect
    h, w = ann.shape
    if x0 < 0 or y0 < 0 or cw <= 0 or ch <= 0 or x0 + cw > w or y0 + ch > h:
        raise ValueError("crop rectangle out of bounds")
    sl = (slice(y0, y0 + ch), slice(x0, x0 + cw))
    edges = ann.boundary_edges
    if edges.shape[0]:
        inside = (
            (edges[:, 0] >= x0) & (edges[:, 0] < x0 + cw)
            & (edges[:, 1] >= y0) & (edges[:, 1] < y0 + ch)
            & (edges[:, 2] >= x0) & (edges[:, 2] < x0 + cw)
            & (edges[:, 3] >= y0) & (edges[:, 3] < y0 + ch)
        )
        edges = edges[inside] - np.array([x0, y0, x0, y0], dtype=np.int64)
    return AnnotationSet(
        background=ann.background[sl],
        foreground=ann.foreground[sl],
        boundary_pixels=ann.boundary_pixels[sl],
        boundary_edges=edges,
    )


def flip_annotation(ann, axis):
    """Mirror along ``'x'`` (left-right) or ``'y'`` (top-bottom).

    Flow targets are direction-dependent, so targets are not
    transformed: recompute them from the flipped annotation.
    """
    h, w = ann.shape
    edges = ann.boundary_edges.copy()
    if axis == "x":
        flip = lambda a: a[:, ::-1].copy()
        edges[:, 0] = w - 1 - edges[:, 0]
        edges[:, 2] = w - 1 - edges[:, 2]
    elif axis == "y":
        flip = lambda a: a[::-1, :].copy()
        edges[:, 1] = h - 1 - edges[:, 1]
        edges[:, 3] = h - 1 - edges[:, 3]
    else:
        raise ValueError("axis must be 'x' or 'y'")
    return AnnotationSet(
        background=flip(ann.background),
        foreground=flip(ann.foreground),
        boundary_pixels=flip(ann.boundary_pixels),
        boundary_edges=edges,
    )
