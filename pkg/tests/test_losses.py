import math

import numpy as np
import pytest

from sketchdist import losses, sparsity, supervision
from sketchdist.losses import LossWeights
from conftest import random_label_scene


def naive_bce_logits(t, y):
    s = 1.0 / (1.0 + math.exp(-t))
    s = min(max(s, 1e-300), 1 - 1e-16)
    return -(y * math.log(s) + (1 - y) * math.log(1 - s))


def random_targets(rng, w=16, h=16, instances=3, density=0.6):
    gt = random_label_scene(rng, w, h, instances)
    ann = sparsity.derive_annotation(gt, rng.random((h, w)) < density)
    return supervision.make_targets(ann), gt


def fd_gradient(fn, arr, coords, h=1e-4):
    """Central finite differences at selected flat coordinates."""
    grads = []
    flat = arr.ravel()
    for c in coords:
        orig = flat[c]
        flat[c] = orig + h
        fp = fn()
        flat[c] = orig - h
        fm = fn()
        flat[c] = orig
        grads.append((fp - fm) / (2 * h))
    return np.array(grads)


def test_weight_field_adjacent_value():
    gt = np.zeros((4, 4), np.int32)
    gt[:, 2:] = 1
    rho = losses.weight_field(gt)
    # pixel at distance 0.5 from the interface
    assert rho[0, 1] == pytest.approx(1 + 4 * math.exp(-1 / 32), rel=1e-12)


def test_weight_field_far_decay():
    gt = np.zeros((40, 40), np.int32)
    gt[:, :2] = 1
    rho = losses.weight_field(gt)
    assert rho[:, -1].max() < 1.0 + 1e-12


def test_weight_field_uniform_is_one():
    assert (losses.weight_field(np.zeros((8, 8), np.int32)) == 1.0).all()


def test_weight_field_rejects_bad_sigma():
    with pytest.raises(ValueError):
        losses.weight_field(np.zeros((4, 4), np.int32), sigma=0.0)


def test_loss_boundary_saturated_logits():
    b_star = np.zeros((6, 6))
    b_star[2:4, 2:4] = 1.0
    b = np.where(b_star > 0, 50.0, -50.0)
    assert losses.loss_boundary(b, b_star, None).value < 1e-6


def test_loss_boundary_zero_logits():
    b_star = (np.arange(16).reshape(4, 4) % 2).astype(float)
    val = losses.loss_boundary(np.zeros((4, 4)), b_star, None, weight=10.0).value
    assert val == pytest.approx(10.0 * math.log(2.0), rel=1e-12)


def test_loss_boundary_matches_naive(rng):
    b = rng.normal(size=(8, 8)) * 3
    b_star = (rng.random((8, 8)) < 0.5).astype(float)
    got = losses.loss_boundary(b, b_star, None, weight=10.0).value
    ref = 10.0 * np.mean([naive_bce_logits(t, y) for t, y in zip(b.ravel(), b_star.ravel())])
    assert got == pytest.approx(ref, rel=1e-10)


def test_loss_distance_exact_cases(rng):
    d = rng.normal(size=(6, 6))
    rho = np.ones((6, 6))
    assert losses.loss_distance(d, d, rho).value == 0.0
    assert losses.loss_distance(d + 1.0, d, rho, weight=2.0).value == pytest.approx(2.0)


def test_loss_distance_matches_naive(rng):
    d = rng.normal(size=(8, 8))
    d_star = rng.normal(size=(8, 8))
    rho = rng.uniform(1, 5, size=(8, 8))
    got = losses.loss_distance(d, d_star, rho, weight=2.0).value
    ref = 2.0 * np.mean((d - d_star) ** 2 * rho)
    assert got == pytest.approx(ref, rel=1e-12)


def test_loss_flow_terms_zero_at_truth(rng):
    v = rng.normal(size=(2, 8, 8))
    rho = np.ones((8, 8))
    assert losses.loss_flow_mse(v, v.copy(), rho).value == 0.0
    assert losses.loss_flow_norm(v, v.copy(), rho).value == 0.0


def test_loss_flow_rotation_preserves_norm(rng):
    v_star = rng.normal(size=(2, 8, 8))
    theta = 0.7
    c, s = math.cos(theta), math.sin(theta)
    v = np.stack([c * v_star[0] - s * v_star[1], s * v_star[0] + c * v_star[1]])
    rho = np.ones((8, 8))
    assert losses.loss_flow_norm(v, v_star, rho).value < 1e-24
    assert losses.loss_flow_mse(v, v_star, rho).value > 0.1


def test_loss_flow_matches_naive(rng):
    v = rng.normal(size=(2, 8, 8))
    v_star = rng.normal(size=(2, 8, 8))
    rho = rng.uniform(1, 3, size=(8, 8))
    got = losses.loss_flow_mse(v, v_star, rho, weight=2.0).value
    ref = 2.0 * np.mean(((v - v_star) ** 2).sum(axis=0) * rho)
    assert got == pytest.approx(ref, rel=1e-12)
    got = losses.loss_flow_norm(v, v_star, rho, weight=2.0).value
    ref = 2.0 * np.mean((np.hypot(v[0], v[1]) - np.hypot(v_star[0], v_star[1])) ** 2 * rho)
    assert got == pytest.approx(ref, rel=1e-12)


def test_loss_euler_identical_fields(rng):
    v = rng.normal(size=(2, 6, 6))
    assert losses.loss_euler(v, v.copy(), dt=1.0, steps=3).value == 0.0


def test_loss_euler_constant_offset():
    v = np.zeros((2, 8, 8))
    v_star = np.zeros((2, 8, 8))
    v_star[0] = 1.0
    # interior starts drift (1,0) then (2,0); border starts clamp, so use a
    # domain wide enough that the mean is dominated by clean arithmetic
    val = losses.loss_euler(v[:, :1, :4], v_star[:, :1, :4], dt=1.0, steps=2, weight=1.0).value
    # starts x=0: dev 1,4 ; x=1: dev 1,4 ; x=2: clamped gold at 3 -> dev 1,4? gold clamps at 3
    # compute reference explicitly instead
    from test_flowfield import reference_trajectory

    ref = 0.0
    for x in range(4):
        tp = reference_trajectory(v[:, :1, :4], (x, 0), 1.0, 2)
        tg = reference_trajectory(v_star[:, :1, :4], (x, 0), 1.0, 2)
        ref += ((tp[1:] - tg[1:]) ** 2).sum()
    assert val == pytest.approx(ref / 4.0, rel=1e-12)


def test_loss_euler_interior_arithmetic():
    # wide strip so the start at the origin never clamps under the gold flow
    v = np.zeros((2, 1, 8))
    v_star = np.zeros((2, 1, 8))
    v_star[0] = 1.0
    val = losses.loss_euler(v[:, :, :1], v_star[:, :, :1], dt=1.0, steps=2).value
    # single start, gold clamps at x=0 domain of width 1 -> both stay: 0
    assert val == 0.0
    val8 = losses.loss_euler(v, v_star, dt=1.0, steps=2).value
    # per-start contribution 1 + 4 = 5 except where clamping interferes
    from test_flowfield import reference_trajectory

    ref = 0.0
    for x in range(8):
        tp = reference_trajectory(v, (x, 0), 1.0, 2)
        tg = reference_trajectory(v_star, (x, 0), 1.0, 2)
        ref += ((tp[1:] - tg[1:]) ** 2).sum()
    assert val8 == pytest.approx(ref / 8.0, rel=1e-12)


def test_loss_euler_matches_reference(rng):
    from test_flowfield import reference_trajectory

    v = rng.normal(size=(2, 8, 8)) * 0.5
    v_star = rng.normal(size=(2, 8, 8)) * 0.5
    val = losses.loss_euler(v, v_star, dt=1.0, steps=3, weight=1.0).value
    ref = 0.0
    for y in range(8):
        for x in range(8):
            tp = reference_trajectory(v, (x, y), 1.0, 3)
            tg = reference_trajectory(v_star, (x, y), 1.0, 3)
            ref += ((tp[1:] - tg[1:]) ** 2).sum()
    assert val == pytest.approx(ref / 64.0, rel=1e-10)


def test_partial_distance_ignores_off_mask(rng):
    targets, _ = random_targets(rng)
    mask = targets.valid | targets.background
    d = targets.dist_target.copy()
    d[~mask] = 1e6  # garbage off-mask
    assert losses.loss_distance_partial(d, targets).value == 0.0


def test_partial_distance_constant_offset(rng):
    targets, _ = random_targets(rng)
    mask = targets.valid | targets.background
    d = targets.dist_target + np.where(mask, 0.5, 0.0)
    assert losses.loss_distance_partial(d, targets, weight=2.0).value == pytest.approx(2.0 * 0.25)


def test_partial_distance_matches_naive_and_gradient(rng):
    targets, _ = random_targets(rng)
    mask = targets.valid | targets.background
    n = mask.sum()
    d = rng.normal(size=targets.dist_target.shape)
    res = losses.loss_distance_partial(d, targets, weight=2.0)
    ref = 2.0 * ((d - targets.dist_target)[mask] ** 2).sum() / n
    assert res.value == pytest.approx(ref, rel=1e-12)
    coords = rng.choice(d.size, size=40, replace=False)
    fd = fd_gradient(lambda: losses.loss_distance_partial(d, targets, weight=2.0).value, d, coords)
    an = res.grad_dist.ravel()[coords]
    assert np.abs(an - fd).max() / max(1.0, np.abs(fd).max()) < 1e-5


def test_partial_flow_matches_naive_and_gradient(rng):
    targets, _ = random_targets(rng)
    mask = targets.flow_valid | targets.background
    n = mask.sum()
    v = rng.normal(size=targets.flow_target.shape)
    res = losses.loss_flow_partial(v, targets, weight=2.0)
    diff = (v - targets.flow_target)[:, mask]
    assert res.value == pytest.approx(2.0 * (diff**2).sum() / n, rel=1e-12)
    coords = rng.choice(v.size, size=40, replace=False)
    fd = fd_gradient(lambda: losses.loss_flow_partial(v, targets, weight=2.0).value, v, coords)
    an = res.grad_flow.ravel()[coords]
    assert np.abs(an - fd).max() / max(1.0, np.abs(fd).max()) < 1e-5


def test_partial_flow_uniform_offset(rng):
    targets, _ = random_targets(rng)
    mask = targets.flow_valid | targets.background
    v = targets.flow_target + np.where(mask[None], 1.0, 0.0) * np.array([0.3, -0.4])[:, None, None]
    val = losses.loss_flow_partial(v, targets, weight=2.0).value
    assert val == pytest.approx(2.0 * (0.09 + 0.16), rel=1e-12)


def test_ineq_no_violation_is_zero(rng):
    targets, _ = random_targets(rng)
    d = targets.lower_bound + 1.0
    assert losses.loss_distance_ineq(d, targets).value == 0.0


def test_ineq_counts_violations(rng):
    targets, _ = random_targets(rng)
    fg = targets.foreground
    n = fg.sum()
    if n == 0:
        pytest.skip("degenerate draw")
    d = targets.lower_bound.copy()
    ys, xs = np.nonzero(fg)
    k = min(5, len(ys))
    d[ys[:k], xs[:k]] -= 1.0
    val = losses.loss_distance_ineq(d, targets, weight=2.0).value
    assert val == pytest.approx(2.0 * k / n, rel=1e-12)


def test_ineq_modes_and_gradient(rng):
    targets, _ = random_targets(rng)
    fg = targets.foreground
    n = fg.sum()
    d = rng.normal(size=targets.lower_bound.shape) + targets.lower_bound
    for mode in losses.INEQ_MODES:
        res = losses.loss_distance_ineq(d, targets, weight=2.0, mode=mode)
        lb = targets.lower_bound
        if mode == "theorem_consistent":
            ref = 2.0 * (np.maximum(lb - d, 0.0)[fg] ** 2).sum() / n
        else:
            ref = 2.0 * (np.maximum(d - lb, 0.0)[fg] ** 2).sum() / n
        assert res.value == pytest.approx(ref, rel=1e-12)
        # gradient away from the hinge kink
        safe = np.abs(d - lb) > 1e-3
        coords = [c for c in rng.choice(d.size, size=60, replace=False) if safe.ravel()[c]][:30]
        fd = fd_gradient(
            lambda: losses.loss_distance_ineq(d, targets, weight=2.0, mode=mode).value, d, coords
        )
        an = res.grad_dist.ravel()[coords]
        assert np.abs(an - fd).max() / max(1.0, np.abs(fd).max()) < 1e-5


def test_ineq_unknown_mode(rng):
    targets, _ = random_targets(rng)
    with pytest.raises(ValueError):
        losses.loss_distance_ineq(targets.lower_bound, targets, mode="nope")


def test_sketchpose_total_zero_at_gold(rng):
    # the stored distance target satisfies the lower bound everywhere on
    # the strokes, so the gold prediction incurs no loss at all
    targets, _ = random_targets(rng)
    res = losses.sketchpose_total(targets.dist_target, targets.flow_target, targets)
    assert res.value == 0.0
    assert not res.grad_dist.any() and not res.grad_flow.any()


def test_sketchpose_total_additive(rng):
    targets, _ = random_targets(rng)
    d = rng.normal(size=targets.dist_target.shape)
    v = rng.normal(size=targets.flow_target.shape)
    w = LossWeights()
    total = losses.sketchpose_total(d, v, targets, w)
    parts = (
        losses.loss_flow_partial(v, targets, w.flow_mse).value
        + losses.loss_distance_partial(d, targets, w.distance).value
        + losses.loss_distance_ineq(d, targets, w.distance_ineq).value
    )
    assert total.value == pytest.approx(parts, rel=1e-12)


def test_mask_locality(rng):
    targets, _ = random_targets(rng)
    d = rng.normal(size=targets.dist_target.shape)
    v = rng.normal(size=targets.flow_target.shape)
    base = losses.sketchpose_total(d, v, targets)
    off_d = ~(targets.valid | targets.background | targets.foreground)
    off_v = ~(targets.flow_valid | targets.background)
    d2 = d.copy()
    d2[off_d] += 123.0
    v2 = v.copy()
    v2[:, off_v] -= 55.0
    pert = losses.sketchpose_total(d2, v2, targets)
    assert pert.value == base.value
    assert np.array_equal(pert.grad_dist, base.grad_dist)
    assert np.array_equal(pert.grad_flow, base.grad_flow)


def test_empty_masks_yield_zero():
    ann = supervision.AnnotationSet(
        background=np.zeros((4, 4), bool),
        foreground=np.zeros((4, 4), bool),
        boundary_pixels=np.zeros((4, 4), bool),
    )
    targets = supervision.make_targets(ann)
    d = np.random.default_rng(0).normal(size=(4, 4))
    v = np.random.default_rng(1).normal(size=(2, 4, 4))
    res = losses.sketchpose_total(d, v, targets)
    assert res.value == 0.0
    assert not res.grad_dist.any() and not res.grad_flow.any()
    assert np.isfinite(res.value)


def test_non_negativity(rng):
    targets, _ = random_targets(rng)
    for _ in range(5):
        d = rng.normal(size=targets.dist_target.shape)
        v = rng.normal(size=targets.flow_target.shape)
        assert losses.sketchpose_total(d, v, targets).value >= 0.0


def test_omnipose_total_at_gold(rng):
    gt = random_label_scene(rng, 16, 16, 2)
    t = supervision.make_targets_full(gt)
    rho = losses.weight_field(gt)
    b = np.where(t.boundary_target > 0, 50.0, -50.0)
    res = losses.omnipose_total(b, t.dist_target, t.flow_target, t, rho, dt=1.0, steps=3)
    assert res.value < 1e-6


def test_omnipose_total_additive(rng):
    gt = random_label_scene(rng, 12, 12, 2)
    t = supervision.make_targets_full(gt)
    rho = losses.weight_field(gt)
    b = rng.normal(size=gt.shape)
    d = rng.normal(size=gt.shape)
    v = rng.normal(size=(2,) + gt.shape)
    w = LossWeights()
    total = losses.omnipose_total(b, d, v, t, rho, w, dt=1.0, steps=3).value
    parts = (
        losses.loss_boundary(b, t.boundary_target, rho, w.boundary).value
        + losses.loss_distance(d, t.dist_target, rho, w.distance).value
        + losses.loss_flow_mse(v, t.flow_target, rho, w.flow_mse).value
        + losses.loss_flow_norm(v, t.flow_target, rho, w.flow_norm).value
        + losses.loss_euler(v, t.flow_target, 1.0, 3, w.flow_euler).value
    )
    assert total == pytest.approx(parts, rel=1e-12)


def test_shape_mismatch_raises(rng):
    targets, _ = random_targets(rng)
    with pytest.raises(ValueError):
        losses.loss_distance_partial(np.zeros((3, 3)), targets)
    with pytest.raises(ValueError):
        losses.loss_distance(np.zeros((3, 3)), np.zeros((4, 4)), np.ones((4, 4)))


def test_default_weights_match_reference_values():
    w = LossWeights()
    assert (w.boundary, w.distance, w.flow_mse, w.flow_norm, w.flow_euler) == (10, 2, 2, 2, 1)
    with pytest.raises(ValueError):
        LossWeights(distance=-1.0)
