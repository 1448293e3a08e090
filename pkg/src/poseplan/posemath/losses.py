"""Heatmap losses: the KL-style term, the paired-group loss, and the total.

The softmax in every term normalizes over the concatenated voxels of all
channels in the group (the group-joint distribution), so adding a constant
to every predicted voxel changes nothing.
"""

from __future__ import annotations

import numpy as np
from scipy.special import log_softmax, softmax

from ..errors import ShapeMismatch
from .heatmap import HeatmapStack
from .pose import HEAD_TRUNK, LEFT_ARM, LEFT_LEG, RIGHT_ARM, RIGHT_LEG


def _check_same_shape(*arrays) -> None:
    shapes = {a.shape for a in arrays}
    if len(shapes) != 1:
        raise ShapeMismatch(f"operands must share one shape, got {sorted(shapes)}")


def kl_term(pred: np.ndarray, target: np.ndarray) -> float:
    """-sum(log softmax(pred) * target) over all channels and voxels."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_same_shape(pred, target)
    ls = log_softmax(pred.ravel())
    return float(-(ls * target.ravel()).sum())


def kl_term_grad(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _check_same_shape(pred, target)
    s = softmax(pred.ravel())
    grad = s * target.sum() - target.ravel()
    return grad.reshape(pred.shape)


def pair_loss_terms(p_left, p_right, g_left, g_right) -> tuple[float, float]:
    """(assignment-minimum KL term, joint-distribution term)."""
    p_left = np.asarray(p_left, dtype=np.float64)
    p_right = np.asarray(p_right, dtype=np.float64)
    g_left = np.asarray(g_left, dtype=np.float64)
    g_right = np.asarray(g_right, dtype=np.float64)
    _check_same_shape(p_left, p_right, g_left, g_right)

    straight = kl_term(p_left, g_left) + kl_term(p_right, g_right)
    crossed = kl_term(p_left, g_right) + kl_term(p_right, g_left)
    l1 = min(straight, crossed)

    a = softmax(p_left.ravel())
    b = softmax(p_right.ravel())
    w = (g_left + g_right).ravel()
    l2 = float(-(w * np.log(a + b)).sum())
    return l1, l2


def pair_loss(p_left, p_right, g_left, g_right) -> float:
    l1, l2 = pair_loss_terms(p_left, p_right, g_left, g_right)
    return l1 + l2


def pair_loss_grad(p_left, p_right, g_left, g_right) -> tuple[np.ndarray, np.ndarray]:
    """Gradients of pair_loss w.r.t. the two predicted groups.

    Ties in the assignment minimum differentiate along the straight branch
    (the <= side of the min).
    """
    p_left = np.asarray(p_left, dtype=np.float64)
    p_right = np.asarray(p_right, dtype=np.float64)
    g_left = np.asarray(g_left, dtype=np.float64)
    g_right = np.asarray(g_right, dtype=np.float64)
    _check_same_shape(p_left, p_right, g_left, g_right)

    straight = kl_term(p_left, g_left) + kl_term(p_right, g_right)
    crossed = kl_term(p_left, g_right) + kl_term(p_right, g_left)
    if straight <= crossed:
        d_left = kl_term_grad(p_left, g_left)
        d_right = kl_term_grad(p_right, g_right)
    else:
        d_left = kl_term_grad(p_left, g_right)
        d_right = kl_term_grad(p_right, g_left)

    a = softmax(p_left.ravel())
    b = softmax(p_right.ravel())
    w = (g_left + g_right).ravel()
    ratio_a = w * a / (a + b)
    ratio_b = w * b / (a + b)
    d_left += (a * ratio_a.sum() - ratio_a).reshape(p_left.shape)
    d_right += (b * ratio_b.sum() - ratio_b).reshape(p_right.shape)
    return d_left, d_right


def _group(stack: HeatmapStack, indices) -> np.ndarray:
    return stack.data[[i - 1 for i in indices]]


def total_loss_terms(pred: HeatmapStack, gt: HeatmapStack) -> dict[str, float]:
    if pred.data.shape != gt.data.shape:
        raise ShapeMismatch("prediction and ground-truth stacks must match")
    arms_l1, arms_l2 = pair_loss_terms(
        _group(pred, LEFT_ARM), _group(pred, RIGHT_ARM),
        _group(gt, LEFT_ARM), _group(gt, RIGHT_ARM),
    )
    legs_l1, legs_l2 = pair_loss_terms(
        _group(pred, LEFT_LEG), _group(pred, RIGHT_LEG),
        _group(gt, LEFT_LEG), _group(gt, RIGHT_LEG),
    )
    ht = kl_term(_group(pred, HEAD_TRUNK), _group(gt, HEAD_TRUNK))
    return {
        "pair_arms_l1": arms_l1,
        "pair_arms_l2": arms_l2,
        "pair_arms": arms_l1 + arms_l2,
        "pair_legs_l1": legs_l1,
        "pair_legs_l2": legs_l2,
        "pair_legs": legs_l1 + legs_l2,
        "kl_head_trunk": ht,
        "total": arms_l1 + arms_l2 + legs_l1 + legs_l2 + ht,
    }


def total_loss(pred: HeatmapStack, gt: HeatmapStack) -> float:
    return total_loss_terms(pred, gt)["total"]


def total_loss_grad(pred: HeatmapStack, gt: HeatmapStack) -> np.ndarray:
    """Gradient of the total loss w.r.t. every predicted voxel, (22, D, H, W)."""
    if pred.data.shape != gt.data.shape:
        raise ShapeMismatch("prediction and ground-truth stacks must match")
    grad = np.zeros_like(pred.data)
    for left, right in ((LEFT_ARM, RIGHT_ARM), (LEFT_LEG, RIGHT_LEG)):
        d_left, d_right = pair_loss_grad(
            _group(pred, left), _group(pred, right),
            _group(gt, left), _group(gt, right),
        )
        grad[[i - 1 for i in left]] = d_left
        grad[[i - 1 for i in right]] = d_right
    ht_idx = [i - 1 for i in HEAD_TRUNK]
    grad[ht_idx] = kl_term_grad(pred.data[ht_idx], gt.data[ht_idx])
    return grad
