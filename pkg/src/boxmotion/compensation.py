"""Camera-motion compensation and the motion map pipeline.

Flow: blur grayscale frames, pick corners on the earlier frame, drop points
inside annotation boxes, prune unstable tracks with a forward-backward
round trip, fit a global affine with RANSAC, warp, subtract. A second pass
against the following frame feeds temporal matching, which zeroes responses
that only exist in the past-difference map (ghosts and trailing edges).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from boxmotion.errors import InsufficientCorrespondencesError, InvalidParameterError, ShapeError
from boxmotion.features import (
    CorrespondenceSet,
    FeaturePoint,
    detect_corners,
    points_to_array,
    track_sparse_flow,
)
from boxmotion.imaging import AffineTransform, Frame, abs_difference, gaussian_blur, median_filter, warp_affine


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left (x, y), extent (w, h) pixels, positive object id."""

    x: int
    y: int
    w: int
    h: int
    object_id: int = 1

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise InvalidParameterError(f"box extent must be >= 1, got {self.w}x{self.h}")
        if self.object_id < 1:
            raise InvalidParameterError("object_id must be positive")

    def contains_point(self, px: float, py: float) -> bool:
        # closed on all edges: a point sitting on the boundary counts as inside
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h

    def pixel_slice(self):
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)


def boxes_mask(boxes, height: int, width: int) -> np.ndarray:
    """Boolean (H, W) map of pixels covered by any box, clipped to the frame."""
    m = np.zeros((height, width), dtype=bool)
    for b in boxes:
        y0, y1 = max(b.y, 0), min(b.y + b.h, height)
        x0, x1 = max(b.x, 0), min(b.x + b.w, width)
        if y0 < y1 and x0 < x1:
            m[y0:y1, x0:x1] = True
    return m


@dataclass(frozen=True)
class MotionMap:
    """Per-pixel motion magnitude in [0, 1] aligned to frame ``frame_index``."""

    frame_index: int
    values: np.ndarray
    identity_fallback: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ShapeError(f"motion map must be 2-D, got shape {v.shape}")
        if v.min() < 0.0 or v.max() > 1.0:
            raise InvalidParameterError("motion values must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CompensationConfig:
    ransac_iters: int = 500
    ransac_inlier_px: float = 3.0
    tau2: float = 0.2
    use_box_filter: bool = True
    use_bidirectional_filter: bool = True
    use_temporal_matching: bool = True
    post_median_radius: int = 0
    blur_sigma: float = 1.0
    max_corners: int = 500
    corner_quality: float = 0.01
    corner_min_distance: float = 7.0
    flow_levels: int = 3
    flow_window: int = 15
    flow_max_iters: int = 30
    flow_eps: float = 0.01
    force_identity: bool = False  # diagnostic: skip estimation, plain frame difference

    def __post_init__(self):
        if self.ransac_iters < 1:
            raise InvalidParameterError("ransac_iters must be >= 1")
        if self.ransac_inlier_px <= 0:
            raise InvalidParameterError("ransac_inlier_px must be > 0")
        if self.tau2 < 0:
            raise InvalidParameterError("tau2 must be >= 0")
        if self.post_median_radius < 0:
            raise InvalidParameterError("post_median_radius must be >= 0")


def box_filter(points, boxes) -> list[FeaturePoint]:
    """Keep only feature points strictly outside every box."""
    if not boxes:
        return list(points)
    return [p for p in points if not any(b.contains_point(p.x, p.y) for b in boxes)]


def lower_median(values) -> float:
    """Median that picks the lower of the two middle elements for even counts."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise InvalidParameterError("median of an empty set")
    return float(v[(v.size - 1) // 2])


def roundtrip_keep_mask(distances) -> tuple[np.ndarray, float]:
    """Round-trip pruning rule: keep distances <= their lower median."""
    d = np.asarray(distances, dtype=np.float64)
    tau = lower_median(d)
    return d <= tau, tau


def bidirectional_filter(prev: np.ndarray, cur: np.ndarray, points,
                         levels: int = 3, window: int = 15,
                         max_iters: int = 30, eps: float = 0.01) -> CorrespondenceSet:
    """Forward-backward tracked correspondences pruned by the median round-trip rule."""
    pts = points if isinstance(points, np.ndarray) else points_to_array(points)
    fwd = track_sparse_flow(prev, cur, pts, levels, window, max_iters, eps)
    bwd = track_sparse_flow(cur, prev, fwd.dst, levels, window, max_iters, eps)
    both = fwd.tracked & bwd.tracked
    if int(both.sum()) < 4:
        raise InsufficientCorrespondencesError(
            f"need >= 4 points tracked in both directions, got {int(both.sum())}")
    src = fwd.src[both]
    dst = fwd.dst[both]
    back = bwd.dst[both]
    dists = np.sqrt(np.sum((src - back) ** 2, axis=1))
    keep, _ = roundtrip_keep_mask(dists)
    kept_src = src[keep]
    kept_dst = dst[keep]
    return CorrespondenceSet(kept_src, kept_dst, np.ones(kept_src.shape[0], dtype=bool))


def _solve_affine_exact(src: np.ndarray, dst: np.ndarray) -> AffineTransform | None:
    a = np.column_stack([src, np.ones(3)])
    if abs(np.linalg.det(a)) < 1e-9:
        return None
    sol = np.linalg.solve(a, dst)  # (3, 2): columns are (a, b, tx) and (c, d, ty)
    return AffineTransform(sol[0, 0], sol[1, 0], sol[2, 0], sol[0, 1], sol[1, 1], sol[2, 1])


def estimate_affine_ransac(cs: CorrespondenceSet, cfg: CompensationConfig,
                           seed: int) -> AffineTransform:
    """6-dof affine fit: best 3-point consensus, refined by least squares.

    Deterministic for a fixed seed: samples come from one seeded generator and
    ties keep the earliest best consensus.
    """
    src, dst = cs.tracked_pairs()
    n = src.shape[0]
    if n < 3:
        raise InsufficientCorrespondencesError(f"need >= 3 tracked correspondences, got {n}")

    rng = np.random.default_rng(seed)
    thr2 = cfg.ransac_inlier_px ** 2
    best_count = 0
    best_inliers = None
    for _ in range(cfg.ransac_iters):
        idx = rng.choice(n, size=3, replace=False)
        model = _solve_affine_exact(src[idx], dst[idx])
        if model is None:
            continue
        pred = model.apply(src)
        err2 = np.sum((pred - dst) ** 2, axis=1)
        inliers = err2 <= thr2
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers

    if best_inliers is None:
        raise InsufficientCorrespondencesError("every RANSAC sample was degenerate")

    a = np.column_stack([src[best_inliers], np.ones(best_count)])
    sol, *_ = np.linalg.lstsq(a, dst[best_inliers], rcond=None)
    return AffineTransform(sol[0, 0], sol[1, 0], sol[2, 0], sol[0, 1], sol[1, 1], sol[2, 1])


def two_frame_motion(prev: Frame, cur: Frame, boxes, cfg: CompensationConfig,
                     seed: int) -> MotionMap:
    """|blur(gray(cur)) - warp(blur(gray(prev)))| with the estimated global affine.

    Falls back to the identity transform (plain frame difference) when too few
    correspondences survive; the map then carries identity_fallback=True.
    """
    if prev.color.shape != cur.color.shape:
        raise ShapeError(f"frame dimensions differ: {prev.color.shape} vs {cur.color.shape}")
    gp = gaussian_blur(prev.gray, cfg.blur_sigma)
    gc = gaussian_blur(cur.gray, cfg.blur_sigma)

    transform = AffineTransform.identity()
    fallback = True
    if not cfg.force_identity:
        try:
            corners = detect_corners(gp, cfg.max_corners, cfg.corner_quality,
                                     cfg.corner_min_distance)
            if cfg.use_box_filter:
                corners = box_filter(corners, boxes)
            if cfg.use_bidirectional_filter:
                cs = bidirectional_filter(gp, gc, corners, cfg.flow_levels, cfg.flow_window,
                                          cfg.flow_max_iters, cfg.flow_eps)
            else:
                cs = track_sparse_flow(gp, gc, points_to_array(corners), cfg.flow_levels,
                                       cfg.flow_window, cfg.flow_max_iters, cfg.flow_eps)
            transform = estimate_affine_ransac(cs, cfg, seed)
            fallback = False
        except InsufficientCorrespondencesError:
            transform = AffineTransform.identity()
            fallback = True

    aligned = warp_affine(gp, transform)
    diff = np.clip(abs_difference(gc, aligned), 0.0, 1.0)
    return MotionMap(cur.index, diff, identity_fallback=fallback and not cfg.force_identity)


def temporal_matching(m_prev: MotionMap, m_next: MotionMap, tau2: float) -> MotionMap:
    """Keep past-difference motion only where the future map roughly agrees.

    Per pixel: output = m_prev where (m_prev - m_next) < tau2, else 0.
    """
    if m_prev.values.shape != m_next.values.shape:
        raise ShapeError("motion map dimensions differ")
    out = np.where(m_prev.values - m_next.values < tau2, m_prev.values, 0.0)
    return MotionMap(m_prev.frame_index, out,
                     m_prev.identity_fallback or m_next.identity_fallback)


def motion_pipeline(prev: Frame, cur: Frame, nxt: Frame, boxes_cur, cfg: CompensationConfig,
                    seed: int) -> MotionMap:
    """Full three-frame motion map for ``cur``.

    Past and future differences are computed independently (future pass gets
    seed+1), merged by temporal matching when enabled, then optionally median
    filtered.
    """
    m_past = two_frame_motion(prev, cur, boxes_cur, cfg, seed)
    if cfg.use_temporal_matching:
        m_future = two_frame_motion(nxt, cur, boxes_cur, cfg, seed + 1)
        m = temporal_matching(m_past, m_future, cfg.tau2)
    else:
        m = m_past
    if cfg.post_median_radius >= 1:
        m = MotionMap(m.frame_index, median_filter(m.values, cfg.post_median_radius),
                      m.identity_fallback)
    return m
