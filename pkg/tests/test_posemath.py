import math

import numpy as np
import pytest

from poseplan.errors import DegenerateFrame, OutOfGrid, ShapeMismatch
from poseplan.harness import random_rotation
from poseplan.posemath import (
    Grid,
    HeatmapStack,
    N_LANDMARKS,
    Pose,
    decode_argmax,
    dumps_pose,
    encode_heatmap,
    encode_pose_stack,
    kl_term,
    kl_term_grad,
    load_stack,
    loads_pose,
    pair_loss,
    pair_loss_grad,
    pair_loss_terms,
    resolve_left_right,
    save_stack,
    total_loss,
    total_loss_grad,
    total_loss_terms,
)

from oracles import central_difference, fd_agrees

GRID = Grid((8, 9, 10), (1.0, 1.0, 1.0))


def test_encode_center_value():
    h = encode_heatmap((3.0, 4.0, 5.0), GRID, sigma=2.0)
    # independent evaluation of the Gaussian normalization at the source voxel
    expected = (1.0 / (math.sqrt(2 * math.pi) * 2.0)) ** 3
    assert h[3, 4, 5] == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(7.9366e-3, rel=1e-4)
    assert np.unravel_index(np.argmax(h), h.shape) == (3, 4, 5)


def test_encode_distance_ratio():
    h = encode_heatmap((3.0, 4.0, 5.0), GRID, sigma=2.0)
    for d in (1, 2, 3):
        assert h[3 + d, 4, 5] / h[3, 4, 5] == pytest.approx(math.exp(-d * d / 8.0), rel=1e-12)


def test_encode_translation_equivariance():
    a = encode_heatmap((2.0, 3.0, 4.0), GRID)
    b = encode_heatmap((4.0, 3.0, 4.0), GRID)
    np.testing.assert_allclose(a[:6], b[2:8], rtol=0, atol=0)


def test_encode_out_of_grid():
    with pytest.raises(OutOfGrid):
        encode_heatmap((-1.0, 0.0, 0.0), GRID)
    with pytest.raises(OutOfGrid):
        encode_heatmap((7.5, 8.5, 9.5), GRID)  # beyond the last voxel center


def test_decode_roundtrip_random_coords():
    rng = np.random.default_rng(0)
    grid = Grid((12, 10, 11), (1.5, 2.0, 1.0))
    for _ in range(300):
        c = rng.uniform(0, 1, 3) * np.asarray(grid.extent_mm)
        decoded = decode_argmax(encode_heatmap(c, grid), grid)
        np.testing.assert_array_equal(decoded, grid.voxel_to_mm(grid.nearest_voxel(c)))


def test_decode_tie_breaks():
    grid = Grid((2, 2, 3))
    uniform = np.ones(grid.shape)
    np.testing.assert_array_equal(decode_argmax(uniform, grid), (0.0, 0.0, 0.0))
    two_peaks = np.zeros(12)
    two_peaks[5] = two_peaks[9] = 1.0
    decoded = decode_argmax(two_peaks.reshape(grid.shape), grid)
    assert np.ravel_multi_index([int(v) for v in decoded], grid.shape) == 5


def test_kl_zero_target():
    p = np.random.default_rng(1).normal(size=(3, 4, 4, 4))
    assert kl_term(p, np.zeros_like(p)) == 0.0


def test_kl_uniform_closed_form():
    g = np.random.default_rng(2).random((3, 4, 4, 4))
    p = np.zeros_like(g)
    assert kl_term(p, g) == pytest.approx(g.sum() * math.log(p.size), rel=1e-12)


def test_kl_shift_invariance():
    rng = np.random.default_rng(3)
    p = rng.normal(size=(3, 5, 5, 5))
    g = rng.random((3, 5, 5, 5))
    assert abs(kl_term(p + 12.34, g) - kl_term(p, g)) <= 1e-9


def test_kl_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        kl_term(np.zeros((2, 3)), np.zeros((3, 2)))


def test_kl_grad_fd():
    rng = np.random.default_rng(4)
    p = rng.normal(size=(2, 3, 3, 2))
    g = rng.random((2, 3, 3, 2))
    analytic = kl_term_grad(p, g)
    fd = central_difference(lambda x: kl_term(x, g), p)
    assert fd_agrees(analytic, fd)


def _random_groups(seed, shape=(3, 4, 4, 4)):
    rng = np.random.default_rng(seed)
    return [rng.normal(size=shape) for _ in range(2)] + [rng.random(shape) for _ in range(2)]


def test_pair_loss_min_branch():
    pl, pr, gl, gr = _random_groups(5)
    l1, _ = pair_loss_terms(pl, pr, gl, gr)
    straight = kl_term(pl, gl) + kl_term(pr, gr)
    crossed = kl_term(pl, gr) + kl_term(pr, gl)
    assert l1 == min(straight, crossed)
    assert l1 <= straight and l1 <= crossed


def test_pair_loss_group_swap_invariance():
    pl, pr, gl, gr = _random_groups(6)
    assert pair_loss(pl, pr, gl, gr) == pytest.approx(pair_loss(pr, pl, gr, gl), abs=1e-12)


def test_pair_loss_grad_fd():
    rng = np.random.default_rng(7)
    shape = (3, 3, 3, 2)
    pl, pr = rng.normal(size=shape), rng.normal(size=shape)
    gl, gr = rng.random(shape), rng.random(shape)
    d_left, d_right = pair_loss_grad(pl, pr, gl, gr)
    fd_left = central_difference(lambda x: pair_loss(x, pr, gl, gr), pl)
    fd_right = central_difference(lambda x: pair_loss(pl, x, gl, gr), pr)
    assert fd_agrees(d_left, fd_left)
    assert fd_agrees(d_right, fd_right)


def _random_stacks(seed, dims=(5, 5, 4)):
    rng = np.random.default_rng(seed)
    pred = HeatmapStack(rng.normal(size=(N_LANDMARKS,) + dims))
    gt = HeatmapStack(rng.random((N_LANDMARKS,) + dims))
    return pred, gt


def test_total_loss_is_sum_of_terms():
    pred, gt = _random_stacks(8)
    terms = total_loss_terms(pred, gt)
    assert terms["total"] == pytest.approx(
        terms["pair_arms"] + terms["pair_legs"] + terms["kl_head_trunk"], rel=1e-12
    )


def test_total_loss_arm_swap_invariance():
    pred, gt = _random_stacks(9)
    swapped = pred.data.copy()
    swapped[[10, 11, 12, 13, 14, 15]] = pred.data[[13, 14, 15, 10, 11, 12]]
    assert total_loss(HeatmapStack(swapped), gt) == pytest.approx(
        total_loss(pred, gt), abs=1e-9
    )


def test_total_loss_grad_fd():
    pred, gt = _random_stacks(10, dims=(3, 3, 3))
    grad = total_loss_grad(pred, gt)
    rng = np.random.default_rng(11)
    flat_indices = rng.choice(pred.data.size, size=40, replace=False)
    step = 1e-5
    for flat in flat_indices:
        idx = np.unravel_index(flat, pred.data.shape)
        up = pred.data.copy()
        dn = pred.data.copy()
        up[idx] += step
        dn[idx] -= step
        fd = (total_loss(HeatmapStack(up), gt) - total_loss(HeatmapStack(dn), gt)) / (2 * step)
        scale = max(np.max(np.abs(grad)), 1e-12)
        assert abs(grad[idx] - fd) / max(abs(fd), 1e-3 * scale) <= 1e-4


def test_resolver_worked_example():
    sa = resolve_left_right(
        (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0, 0, -1), "arms"
    )
    assert (sa.s1, sa.s2) == (11, 14)
    assert sa.ang == pytest.approx(-2.0)
    assert sa.a_is_left


def test_resolver_mirror_flips():
    rng = np.random.default_rng(12)
    for _ in range(50):
        pts = rng.normal(size=(5, 3)) * 10
        p1, p4, p6, a, b = pts
        base = resolve_left_right(p1, p4, p6, a, b, "legs")
        mirrored = pts.copy()
        mirrored[:, 0] *= -1  # reflect across the x=0 plane
        flipped = resolve_left_right(*mirrored[:3], mirrored[3], mirrored[4], "legs")
        assert base.s1 != flipped.s1


def test_resolver_boundary_ang_zero():
    # candidate displacement lies in the frame plane: ang == 0 -> a is left
    sa = resolve_left_right((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 0.5), (1, 1, 0.5), "arms")
    assert sa.ang == 0.0
    assert (sa.s1, sa.s2) == (11, 14)


def test_resolver_rigid_invariance():
    rng = np.random.default_rng(13)
    pts = rng.normal(size=(5, 3)) * 8
    base = resolve_left_right(*pts[:3], pts[3], pts[4], "arms")
    for seed in range(30):
        rot = random_rotation(np.random.default_rng(seed))
        t = np.random.default_rng(seed + 1).normal(size=3) * 20
        moved = pts @ rot.T + t
        same = resolve_left_right(*moved[:3], moved[3], moved[4], "arms")
        assert same.s1 == base.s1


def test_resolver_degenerate_frame():
    with pytest.raises(DegenerateFrame):
        resolve_left_right((0, 0, 0), (1, 0, 0), (2, 0, 0), (0, 0, 1), (0, 0, -1), "arms")


def test_pose_file_roundtrip():
    rng = np.random.default_rng(14)
    pose = Pose(rng.normal(size=(N_LANDMARKS, 3)) * 30)
    again = loads_pose(dumps_pose(pose))
    np.testing.assert_array_equal(again.coords, pose.coords)


def test_stack_file_roundtrip(tmp_path):
    rng = np.random.default_rng(15)
    stack = HeatmapStack(rng.random((N_LANDMARKS, 4, 5, 6)).astype(np.float32).astype(np.float64),
                         (2.0, 1.0, 1.5))
    path = tmp_path / "stack.raw"
    save_stack(stack, path)
    again = load_stack(path)
    np.testing.assert_array_equal(again.data, stack.data)
    assert again.spacing == stack.spacing


def test_encode_pose_stack_channels():
    grid = Grid((10, 10, 10), (2.0, 2.0, 2.0))
    rng = np.random.default_rng(16)
    coords = rng.uniform(2, 16, size=(N_LANDMARKS, 3))
    pose = Pose(coords)
    stack = encode_pose_stack(pose, grid)
    decoded = stack.decode_pose()
    assert np.max(np.abs(decoded.coords - coords)) <= 1.0 + 1e-9  # half-voxel rounding
