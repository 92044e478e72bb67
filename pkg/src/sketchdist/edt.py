"""Exact Euclidean distance and nearest-site transforms on a half-integer lattice.

Sites are 2-D points whose coordinates are integers or integers plus one
half (pixel centers and inter-pixel edge midpoints). All distances are
computed exactly: coordinates are doubled onto a 2x supersampled integer
grid, a two-pass squared-distance transform (lower envelope of parabolas
with integer rational boundary comparisons) runs in int64, and pixel
centers are read back as sqrt(squared) / 2. The integer squared values
(in quarter-pixel^2 units) are exposed for tie-exact comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "INF_SQ",
    "DistanceResult",
    "distance_to_sites",
    "edges_to_sites",
    "pixels_to_sites",
    "merge_sites",
]

# sentinel squared distance for "no site"; large but safe under +dim^2 in int64
INF_SQ = np.int64(2) ** 62


@dataclass(frozen=True)
class DistanceResult:
    """Distance from every pixel center to the nearest site.

    Attributes
    ----------
    dist : (h, w) float64
        Euclidean distance in pixels; +inf when the site set is empty.
    sq : (h, w) int64
        Squared distance in quarter-pixel^2 units, i.e. (2*dist)^2 as an
        exact integer; INF_SQ when the site set is empty.
    nearest : (h, w, 2) float64 or None
        Coordinates (x, y) of a site attaining the distance; ties are
        broken by the transform's scan order (fixed but arbitrary).
        None when the site set is empty.
    """

    dist: np.ndarray
    sq: np.ndarray
    nearest: np.ndarray | None


def pixels_to_sites(mask):
    """Pixel centers of a boolean mask as (n, 2) float64 (x, y) sites."""
    m = np.asarray(mask, dtype=bool)
    ys, xs = np.nonzero(m)
    return np.stack([xs.astype(np.float64), ys.astype(np.float64)], axis=1)


def edges_to_sites(edges):
    """Midpoints of inter-pixel edges as (n, 2) float64 (x, y) sites."""
    e = np.asarray(edges, dtype=np.float64).reshape(-1, 4)
    if e.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.float64)
    return np.stack([(e[:, 0] + e[:, 2]) / 2.0, (e[:, 1] + e[:, 3]) / 2.0], axis=1)


def merge_sites(*site_arrays):
    """Duplicate-free union of site arrays."""
    parts = [np.asarray(s, dtype=np.float64).reshape(-1, 2) for s in site_arrays]
    if not parts:
        return np.zeros((0, 2), dtype=np.float64)
    allsites = np.concatenate(parts, axis=0)
    if allsites.shape[0] == 0:
        return np.zeros((0, 2), dtype=np.float64)
    doubled = np.round(allsites * 2.0).astype(np.int64)
    doubled = np.unique(doubled, axis=0)
    return doubled.astype(np.float64) / 2.0


@njit(cache=True)
def _column_pass(site_mask):
    """Per grid column, nearest site row for each pixel row (odd grid rows)."""
    gh, gw = site_mask.shape
    h = (gh - 1) // 2
    big = np.int64(1) << 62
    col_sq = np.full((h, gw), big, dtype=np.int64)
    col_row = np.full((h, gw), -1, dtype=np.int64)
    for gx in range(gw):
        last = -1
        py = 0
        for gy in range(gh):
            if site_mask[gy, gx]:
                last = gy
            if gy & 1:
                if last >= 0:
                    d = np.int64(gy - last)
                    col_sq[py, gx] = d * d
                    col_row[py, gx] = last
                py += 1
        nxt = -1
        py = h - 1
        for gy in range(gh - 1, -1, -1):
            if site_mask[gy, gx]:
                nxt = gy
            if gy & 1:
                if nxt >= 0:
                    d = np.int64(nxt - gy)
                    dd = d * d
                    if dd < col_sq[py, gx]:
                        col_sq[py, gx] = dd
                        col_row[py, gx] = nxt
                py -= 1
    return col_sq, col_row


@njit(cache=True)
def _row_envelope(col_sq, col_row):
    """Lower envelope of parabolas per pixel row, queried at odd grid columns.

    Envelope boundaries are rationals num/den with den > 0; comparisons
    use integer cross-multiplication so the winning parabola at each
    query is exact. Columns without sites are skipped, keeping all
    parabola offsets finite.
    """
    h, gw = col_sq.shape
    w = (gw - 1) // 2
    big = np.int64(1) << 62
    out_sq = np.full((h, w), big, dtype=np.int64)
    near_gx = np.full((h, w), -1, dtype=np.int64)
    near_gy = np.full((h, w), -1, dtype=np.int64)
    v = np.empty(gw, dtype=np.int64)
    zn = np.empty(gw + 1, dtype=np.int64)
    zd = np.empty(gw + 1, dtype=np.int64)
    for y in range(h):
        k = -1
        for gx in range(gw):
            f = col_sq[y, gx]
            if f >= big:
                continue
            if k < 0:
                k = 0
                v[0] = gx
                continue
            num = np.int64(0)
            den = np.int64(1)
            while True:
                p = v[k]
                num = f + gx * gx - col_sq[y, p] - p * p
                den = 2 * (gx - p)
                # pop while the new intersection lies left of the stored
                # boundary; z[0] is -inf conceptually so k never drops below 0
                if k > 0 and num * zd[k] <= zn[k] * den:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = gx
            zn[k] = num
            zd[k] = den
        if k < 0:
            continue
        m = k
        kq = 0
        for px in range(w):
            q = 2 * px + 1
            while kq < m and zn[kq + 1] < q * zd[kq + 1]:
                kq += 1
            p = v[kq]
            d = q - p
            out_sq[y, px] = col_sq[y, p] + d * d
            near_gx[y, px] = p
            near_gy[y, px] = col_row[y, p]
    return out_sq, near_gx, near_gy


def distance_to_sites(sites, width, height):
    """Exact Euclidean distance from every pixel center to the nearest site.

    Parameters
    ----------
    sites : (n, 2) array
        Half-integer-lattice points (x, y) within
        [-0.5, width-0.5] x [-0.5, height-0.5].
    width, height : int
        Domain size in pixels.

    Returns
    -------
    DistanceResult
        Exact distances, integer squared distances (quarter-pixel^2
        units) and an attaining site per pixel. An empty site set yields
        all +inf / INF_SQ and ``nearest=None``.
    """
    if width <= 0 or height <= 0:
        raise ValueError("domain must be non-empty")
    # envelope cross-products are bounded by 2^5 * dim^3; cap dimensions so
    # the integer comparisons can never overflow int64
    if max(width, height) >= 1 << 19:
        raise ValueError("domain dimension too large for the exact transform")
    s = np.asarray(sites, dtype=np.float64).reshape(-1, 2)
    if s.shape[0] == 0:
        return DistanceResult(
            dist=np.full((height, width), np.inf),
            sq=np.full((height, width), INF_SQ, dtype=np.int64),
            nearest=None,
        )
    doubled = np.round(s * 2.0)
    if not np.all(doubled == s * 2.0):
        raise ValueError("site coordinates must be multiples of 0.5")
    doubled = doubled.astype(np.int64)
    if (
        doubled[:, 0].min() < -1
        or doubled[:, 0].max() > 2 * width - 1
        or doubled[:, 1].min() < -1
        or doubled[:, 1].max() > 2 * height - 1
    ):
        raise ValueError("site outside the domain rectangle")
    gh, gw = 2 * height + 1, 2 * width + 1
    site_mask = np.zeros((gh, gw), dtype=np.uint8)
    site_mask[doubled[:, 1] + 1, doubled[:, 0] + 1] = 1
    col_sq, col_row = _column_pass(site_mask)
    out_sq, near_gx, near_gy = _row_envelope(col_sq, col_row)
    dist = np.sqrt(out_sq.astype(np.float64)) / 2.0
    nearest = np.stack(
        [(near_gx - 1).astype(np.float64) / 2.0, (near_gy - 1).astype(np.float64) / 2.0],
        axis=2,
    )
    return DistanceResult(dist=dist, sq=out_sq, nearest=nearest)
