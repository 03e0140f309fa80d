"""Region and boundary quality scores plus the foreground-pixel protocol.

Region accuracy is intersection-over-union of the masks; contour accuracy
is the f1-score of boundary pixels matched within a pixel tolerance. Their
mean is the usual video-segmentation headline number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boxmotion.compensation import MotionMap
from boxmotion.errors import InvalidParameterError, ShapeError


@dataclass(frozen=True)
class BinaryMask:
    mask: np.ndarray  # (H, W) bool
    object_id: int = 1

    def __post_init__(self):
        m = np.asarray(self.mask)
        if m.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got {m.shape}")
        object.__setattr__(self, "mask", m.astype(bool))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class MetricsReport:
    j_mean: float
    f_mean: float
    jf_mean: float
    j_per_frame: list = field(default_factory=list)
    f_per_frame: list = field(default_factory=list)
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None


def _mask_array(m) -> np.ndarray:
    if isinstance(m, BinaryMask):
        return m.mask
    return np.asarray(m).astype(bool)


def jaccard(pred, gt) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    p = _mask_array(pred)
    g = _mask_array(gt)
    if p.shape != g.shape:
        raise ShapeError(f"mask dimensions differ: {p.shape} vs {g.shape}")
    union = int(np.sum(p | g))
    if union == 0:
        return 1.0
    return float(np.sum(p & g)) / union


def boundary_pixels(mask) -> np.ndarray:
    """Foreground pixels with a background (or out-of-frame) 4-neighbor."""
    m = _mask_array(mask)
    pad = np.pad(m, 1, mode="constant", constant_values=False)
    interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return m & ~interior


def _dilate_chebyshev(mask: np.ndarray, radius: int) -> np.ndarray:
    if radius <= 0:
        return mask.copy()
    h, w = mask.shape
    pad = np.pad(mask, radius, mode="constant", constant_values=False)
    out = np.zeros_like(mask)
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            out |= pad[radius + dy:radius + dy + h, radius + dx:radius + dx + w]
    return out


def default_boundary_tolerance(height: int, width: int) -> int:
    """ceil(0.008 * image diagonal), the usual convention."""
    return int(math.ceil(0.008 * math.hypot(height, width)))


def boundary_f(pred, gt, tolerance_px: int | None = None) -> float:
    """F1 of boundary pixels matched within a Chebyshev tolerance.

    1.0 when both boundaries are empty, 0.0 when exactly one is.
    """
    p = _mask_array(pred)
    g = _mask_array(gt)
    if p.shape != g.shape:
        raise ShapeError(f"mask dimensions differ: {p.shape} vs {g.shape}")
    if tolerance_px is None:
        tolerance_px = default_boundary_tolerance(*p.shape)

    pb = boundary_pixels(p)
    gb = boundary_pixels(g)
    n_pb = int(pb.sum())
    n_gb = int(gb.sum())
    if n_pb == 0 and n_gb == 0:
        return 1.0
    if n_pb == 0 or n_gb == 0:
        return 0.0

    gd = _dilate_chebyshev(gb, int(tolerance_px))
    pd = _dilate_chebyshev(pb, int(tolerance_px))
    precision = float(np.sum(pb & gd)) / n_pb
    recall = float(np.sum(gb & pd)) / n_gb
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def _as_object_list(entry):
    if isinstance(entry, BinaryMask):
        return [entry]
    return list(entry)


def jf_score(preds, gts, tolerance_px: int | None = None) -> MetricsReport:
    """Mean region and boundary scores over aligned per-frame mask lists.

    Each frame entry may be one mask or a list of per-object masks; objects
    are matched by object_id (a missing prediction scores against an empty
    mask). Averaging is per object across frames, then across objects.
    """
    if len(preds) != len(gts):
        raise InvalidParameterError(
            f"prediction and ground-truth lists differ in length: {len(preds)} vs {len(gts)}")
    if len(preds) == 0:
        raise InvalidParameterError("cannot score an empty sequence")

    per_object_j: dict[int, list[float]] = {}
    per_object_f: dict[int, list[float]] = {}
    j_frames = []
    f_frames = []
    for pred_entry, gt_entry in zip(preds, gts):
        pred_objs = {m.object_id: m for m in _as_object_list(pred_entry)}
        gt_objs = {m.object_id: m for m in _as_object_list(gt_entry)}
        frame_j = []
        frame_f = []
        for oid, gt_mask in sorted(gt_objs.items()):
            pred_mask = pred_objs.get(oid)
            if pred_mask is None:
                pred_mask = BinaryMask(np.zeros_like(gt_mask.mask), oid)
            j = jaccard(pred_mask, gt_mask)
            f = boundary_f(pred_mask, gt_mask, tolerance_px)
            per_object_j.setdefault(oid, []).append(j)
            per_object_f.setdefault(oid, []).append(f)
            frame_j.append(j)
            frame_f.append(f)
        j_frames.append(float(np.mean(frame_j)) if frame_j else 1.0)
        f_frames.append(float(np.mean(frame_f)) if frame_f else 1.0)

    j_mean = float(np.mean([np.mean(v) for v in per_object_j.values()])) if per_object_j else 1.0
    f_mean = float(np.mean([np.mean(v) for v in per_object_f.values()])) if per_object_f else 1.0
    return MetricsReport(j_mean, f_mean, (j_mean + f_mean) / 2.0, j_frames, f_frames)


def foreground_pixel_scores(motion, gt, threshold: float = 0.5):
    """(precision, recall, f1) of thresholded motion against a ground-truth mask.

    Pixels with motion strictly above the threshold count as predicted
    foreground. A zero-denominator score is 1.0 only when the confusion is
    perfect (no false positives and no false negatives), else 0.0.
    """
    mv = motion.values if isinstance(motion, MotionMap) else np.asarray(motion, dtype=np.float64)
    g = _mask_array(gt)
    if mv.shape != g.shape:
        raise ShapeError(f"dimension mismatch: {mv.shape} vs {g.shape}")
    if not (0.0 < threshold < 1.0):
        raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")

    pred = mv > threshold
    tp = int(np.sum(pred & g))
    fp = int(np.sum(pred & ~g))
    fn = int(np.sum(~pred & g))

    def ratio(num, den):
        if den == 0:
            return 1.0 if fp == 0 and fn == 0 else 0.0
        return num / den

    precision = ratio(tp, tp + fp)
    recall = ratio(tp, tp + fn)
    if precision + recall == 0:
        f1 = 0.0
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1
