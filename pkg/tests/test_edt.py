import numpy as np
import pytest

from sketchdist import edt
from conftest import brute_force_sq


def random_sites(rng, w, h, n):
    sx = rng.integers(-1, 2 * w, size=n) / 2.0
    sy = rng.integers(-1, 2 * h, size=n) / 2.0
    return np.stack([sx, sy], axis=1)


def test_single_corner_site():
    res = edt.distance_to_sites(np.array([[0.0, 0.0]]), 3, 3)
    assert res.dist[0, 0] == 0.0
    assert res.dist[2, 2] == pytest.approx(2 * np.sqrt(2.0), abs=0)
    assert res.sq[2, 2] == 32  # (2*2)^2 + (2*2)^2


def test_all_pixel_centers_zero():
    xs, ys = np.meshgrid(np.arange(4.0), np.arange(3.0))
    sites = np.stack([xs.ravel(), ys.ravel()], axis=1)
    res = edt.distance_to_sites(sites, 4, 3)
    assert not res.dist.any()


def test_empty_site_set():
    res = edt.distance_to_sites(np.zeros((0, 2)), 5, 4)
    assert np.isinf(res.dist).all()
    assert (res.sq == edt.INF_SQ).all()
    assert res.nearest is None


def test_site_outside_domain():
    with pytest.raises(ValueError):
        edt.distance_to_sites(np.array([[5.0, 0.0]]), 5, 5)
    with pytest.raises(ValueError):
        edt.distance_to_sites(np.array([[0.25, 0.0]]), 5, 5)


def test_exactness_against_brute_force(rng):
    for _ in range(200):
        w = int(rng.integers(2, 65))
        h = int(rng.integers(2, 65))
        n = int(rng.integers(1, 51))
        sites = random_sites(rng, w, h, n)
        res = edt.distance_to_sites(sites, w, h)
        assert np.array_equal(res.sq, brute_force_sq(sites, w, h))
        assert np.array_equal(res.dist, np.sqrt(res.sq.astype(np.float64)) / 2.0)


def test_nearest_is_member_and_attains(rng):
    for _ in range(20):
        w, h = 32, 24
        sites = random_sites(rng, w, h, int(rng.integers(1, 30)))
        res = edt.distance_to_sites(sites, w, h)
        site_set = {tuple(s) for s in np.round(sites * 2).astype(np.int64).tolist()}
        nd = np.round(res.nearest * 2).astype(np.int64)
        for y in range(h):
            for x in range(w):
                assert (nd[y, x, 0], nd[y, x, 1]) in site_set
        gx, gy = np.meshgrid(np.arange(w) * 2, np.arange(h) * 2)
        attained = (gx - nd[:, :, 0]) ** 2 + (gy - nd[:, :, 1]) ** 2
        assert np.array_equal(attained, res.sq)


def test_monotonicity_under_inclusion(rng):
    for _ in range(20):
        w, h = 40, 40
        big = random_sites(rng, w, h, 40)
        keep = rng.random(40) < 0.4
        if not keep.any():
            keep[0] = True
        small = big[keep]
        d_small = edt.distance_to_sites(small, w, h).sq
        d_big = edt.distance_to_sites(big, w, h).sq
        assert (d_big <= d_small).all()


def test_determinism(rng):
    sites = random_sites(rng, 30, 30, 25)
    a = edt.distance_to_sites(sites, 30, 30)
    b = edt.distance_to_sites(sites[::-1], 30, 30)  # order must not matter
    assert np.array_equal(a.sq, b.sq)
    assert np.array_equal(a.nearest, b.nearest)


def test_edges_to_sites_midpoint():
    sites = edt.edges_to_sites(np.array([[0, 0, 1, 0]]))
    assert sites.tolist() == [[0.5, 0.0]]


def test_edges_to_sites_empty():
    assert edt.edges_to_sites(np.zeros((0, 4))).shape == (0, 2)


def test_pixels_to_sites_centers():
    m = np.zeros((3, 3), bool)
    m[1, 2] = True
    assert edt.pixels_to_sites(m).tolist() == [[2.0, 1.0]]


def test_mixed_sites_disjoint_lattices():
    edges = np.array([[0, 0, 1, 0], [1, 1, 1, 2]])
    m = np.zeros((3, 3), bool)
    m[0, 0] = m[2, 2] = True
    merged = edt.merge_sites(edt.edges_to_sites(edges), edt.pixels_to_sites(m))
    assert merged.shape[0] == len(edges) + 2


def test_merge_sites_deduplicates():
    a = np.array([[0.5, 0.0], [1.0, 1.0]])
    b = np.array([[0.5, 0.0]])
    assert edt.merge_sites(a, b).shape[0] == 2
