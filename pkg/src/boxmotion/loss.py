"""Pairwise affinity loss, box projection loss, and a mask demonstrator.

Both losses return analytic gradients with respect to the per-pixel
foreground confidence so the optimizer below can run plain gradient
descent without any autodiff machinery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from boxmotion import kernels
from boxmotion.affinity import AffinityConfig, PairAffinitySet, build_pair_set
from boxmotion.compensation import BoundingBox, MotionMap, boxes_mask
from boxmotion.errors import InvalidAnnotationError, InvalidParameterError, ShapeError
from boxmotion.imaging import Frame

CLAMP_EPS = 1e-6


@dataclass(frozen=True)
class ConfidenceMap:
    """Per-pixel foreground probability in [0, 1]."""

    frame_index: int
    rho: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=np.float64)
        if r.ndim != 2:
            raise ShapeError(f"confidence map must be 2-D, got {r.shape}")
        if r.min() < 0.0 or r.max() > 1.0:
            raise InvalidParameterError("confidence values must lie in [0, 1]")
        object.__setattr__(self, "rho", r)


@dataclass(frozen=True)
class LossReport:
    affinity_loss: float
    projection_loss: float
    positive_pairs: int
    total: float


def _rho_array(rho) -> np.ndarray:
    if isinstance(rho, ConfidenceMap):
        return rho.rho
    return np.asarray(rho, dtype=np.float64)


def same_class_confidence(rho_a, rho_b):
    """Probability two pixels land in the same class: ra*rb + (1-ra)*(1-rb)."""
    ra = np.asarray(rho_a, dtype=np.float64)
    rb = np.asarray(rho_b, dtype=np.float64)
    return ra * rb + (1.0 - ra) * (1.0 - rb)


def affinity_loss(rho, pairs: PairAffinitySet, clamp_eps: float = CLAMP_EPS):
    """Sum of -log(same-class confidence) over positive pairs, with its gradient.

    Negative pairs contribute exactly zero. The log argument is clamped below
    at ``clamp_eps``; where the clamp is active the gradient is zero.
    """
    r = _rho_array(rho)
    ay, ax, by, bx = pairs.positive_indices()
    if ay.size and (int(ay.max()) >= r.shape[0] or int(ax.max()) >= r.shape[1]
                    or int(by.max()) >= r.shape[0] or int(bx.max()) >= r.shape[1]):
        raise ShapeError("pair set does not fit the confidence map")
    if ay.size == 0:
        return 0.0, np.zeros_like(r)
    value, grad = kernels.affinity_loss_accum(r, ay, ax, by, bx, clamp_eps)
    return float(value), grad


def projection_loss(rho, boxes):
    """Soft-Dice loss between axis max-projections of rho and each box extent.

    For every box the prediction is projected onto each axis by taking the
    maximum over the box's span on the other axis; the target is one over the
    box extent and zero on a margin of one box length either side (clipped to
    the frame). The max routes the gradient to the first argmax pixel.
    """
    r = _rho_array(rho)
    h, w = r.shape
    grad = np.zeros_like(r)
    if not boxes:
        return 0.0, grad

    total = 0.0
    n_terms = 2 * len(boxes)
    for b in boxes:
        if b.x < 0 or b.y < 0 or b.x + b.w > w or b.y + b.h > h:
            raise InvalidAnnotationError(
                f"box ({b.x},{b.y},{b.w},{b.h}) extends outside the {w}x{h} frame")

        # vertical axis: rows vs box height
        rows = np.arange(max(0, b.y - b.h), min(h, b.y + 2 * b.h))
        sub = r[rows, b.x:b.x + b.w]
        p = sub.max(axis=1)
        amax = np.argmax(sub, axis=1) + b.x
        t = ((rows >= b.y) & (rows < b.y + b.h)).astype(np.float64)
        total += _dice_term(p, t, rows, amax, grad, n_terms, axis_rows=True)

        # horizontal axis: columns vs box width
        cols = np.arange(max(0, b.x - b.w), min(w, b.x + 2 * b.w))
        sub = r[b.y:b.y + b.h, cols]
        p = sub.max(axis=0)
        amax = np.argmax(sub, axis=0) + b.y
        t = ((cols >= b.x) & (cols < b.x + b.w)).astype(np.float64)
        total += _dice_term(p, t, cols, amax, grad, n_terms, axis_rows=False)

    return total / n_terms, grad


def _dice_term(p, t, idx, amax, grad, n_terms, axis_rows):
    c = float(np.sum(p * t))
    s = float(np.sum(p * p) + np.sum(t * t))
    loss = 1.0 - 2.0 * c / s
    gp = (-2.0 * t * s + 4.0 * c * p) / (s * s) / n_terms
    if axis_rows:
        np.add.at(grad, (idx, amax), gp)
    else:
        np.add.at(grad, (amax, idx), gp)
    return loss


def total_loss(rho, pairs: PairAffinitySet, boxes,
               lambda_affinity: float = 1.0, lambda_projection: float = 1.0) -> LossReport:
    av, _ = affinity_loss(rho, pairs)
    pv, _ = projection_loss(rho, boxes)
    return LossReport(av, pv, pairs.n_positive,
                      lambda_affinity * av + lambda_projection * pv)


def _total_with_grad(r, pairs, boxes, lambda_affinity, lambda_projection):
    av, ag = affinity_loss(r, pairs)
    pv, pg = projection_loss(r, boxes)
    return (lambda_affinity * av + lambda_projection * pv,
            lambda_affinity * ag + lambda_projection * pg, av, pv)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def optimize_mask(frame: Frame, motion: MotionMap, boxes, cfg: AffinityConfig,
                  steps: int, lr: float,
                  lambda_affinity: float = 1.0, lambda_projection: float = 1.0,
                  callback=None) -> ConfidenceMap:
    """Carve a foreground mask from boxes alone by gradient descent.

    Maintains per-pixel logits (rho = sigmoid(logits)) initialized to 0 inside
    boxes and -4 outside, and descends the weighted total loss. A desk-scale
    stand-in for network training, not a training loop.
    """
    if steps < 0:
        raise InvalidParameterError("steps must be >= 0")
    if lr <= 0:
        raise InvalidParameterError("lr must be positive")

    pairs = build_pair_set(frame, motion, boxes, cfg)
    h, w = frame.gray.shape
    logits = np.full((h, w), -4.0)
    logits[boxes_mask(boxes, h, w)] = 0.0

    for step in range(steps):
        r = _sigmoid(logits)
        value, grad, av, pv = _total_with_grad(r, pairs, boxes,
                                               lambda_affinity, lambda_projection)
        if callback is not None:
            callback(step, LossReport(av, pv, pairs.n_positive, value))
        logits -= lr * grad * r * (1.0 - r)

    return ConfidenceMap(frame.index, _sigmoid(logits))
