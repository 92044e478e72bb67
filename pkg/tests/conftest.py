"""Shared scene generators and independent oracles."""

import numpy as np
import pytest

from sketchdist import edt, raster

INF_SQ = edt.INF_SQ


def brute_force_sq(sites, width, height):
    """Integer squared distances (quarter-pixel^2) by direct min over sites."""
    sites = np.asarray(sites, dtype=np.float64).reshape(-1, 2)
    if sites.shape[0] == 0:
        return np.full((height, width), INF_SQ, dtype=np.int64)
    doubled = np.round(sites * 2.0).astype(np.int64)
    gx, gy = np.meshgrid(
        np.arange(width, dtype=np.int64) * 2, np.arange(height, dtype=np.int64) * 2
    )
    best = np.full((height, width), INF_SQ, dtype=np.int64)
    for sx, sy in doubled:
        np.minimum(best, (gx - sx) ** 2 + (gy - sy) ** 2, out=best)
    return best


def random_label_scene(rng, width, height, instances):
    """Random disks stamped in order; labels compacted, may touch or overlap."""
    lab = np.zeros((height, width), dtype=np.int32)
    yy, xx = np.ogrid[:height, :width]
    for i in range(1, instances + 1):
        r = int(rng.integers(3, max(4, min(width, height) // 3)))
        cx = int(rng.integers(0, width))
        cy = int(rng.integers(0, height))
        lab[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = i
    return raster.compact_labels(lab)


def voronoi_scene(rng, width, height, seeds):
    """Nearest-seed labeling with carved background holes: irregular,
    fragmented instances with long straight interfaces."""
    cx = rng.integers(0, width, size=seeds)
    cy = rng.integers(0, height, size=seeds)
    yy, xx = np.mgrid[:height, :width]
    d = (xx[None] - cx[:, None, None]) ** 2 + (yy[None] - cy[:, None, None]) ** 2
    lab = np.argmin(d, axis=0) + 1
    lab[rng.random((height, width)) < 0.3] = 0
    return raster.compact_labels(lab)


def thin_scene(rng, width, height, strips):
    """One-pixel-wide strips: worst case for boundary-heavy geometry."""
    lab = np.zeros((height, width), dtype=np.int32)
    for i in range(1, strips + 1):
        if rng.random() < 0.5:
            r = int(rng.integers(0, height))
            lab[r : r + 1, int(rng.integers(0, width // 2)) :] = i
        else:
            c = int(rng.integers(0, width))
            lab[int(rng.integers(0, height // 2)) :, c : c + 1] = i
    return raster.compact_labels(lab)


def separated_disk_scene(rng, width, height, n_disks, r_min=5, r_max=15, separation=2):
    """Non-overlapping disks with a minimum boundary separation."""
    lab = np.zeros((height, width), dtype=np.int32)
    yy, xx = np.ogrid[:height, :width]
    placed = []
    label = 0
    attempts = 0
    while label < n_disks and attempts < 500:
        attempts += 1
        r = int(rng.integers(r_min, r_max + 1))
        cx = int(rng.integers(r, width - r))
        cy = int(rng.integers(r, height - r))
        ok = all(
            np.hypot(cx - px, cy - py) >= r + pr + separation for px, py, pr in placed
        )
        if not ok:
            continue
        label += 1
        lab[(xx - cx) ** 2 + (yy - cy) ** 2 <= r * r] = label
        placed.append((cx, cy, r))
    return lab, placed


def edges_as_set(edges):
    return {tuple(row) for row in np.asarray(edges).reshape(-1, 4).tolist()}


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
