"""Corner detection and pyramidal sparse optical flow.

Both use the same normalized 3x3 Sobel gradients so the corner scores and
the tracker's normal matrices live on one scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from boxmotion import kernels
from boxmotion.errors import InvalidParameterError, ShapeError
from boxmotion.imaging import gaussian_blur

_SOBEL_SMOOTH = np.array([0.25, 0.5, 0.25])
_SOBEL_DIFF = np.array([-0.5, 0.0, 0.5])
_BOX3 = np.array([1.0, 1.0, 1.0])

# pyramid anti-alias blur and the relative singularity floor for the LK normal matrix
_PYR_SIGMA = 1.0
_MIN_EIG_FLOOR = 1e-4


@dataclass(frozen=True)
class FeaturePoint:
    x: float
    y: float
    score: float = 0.0


@dataclass(frozen=True)
class CorrespondenceSet:
    """Matched point pairs between two frames.

    ``src``/``dst`` are (N, 2) arrays of [x, y]; untracked entries keep a
    placeholder destination and must be ignored downstream.
    """

    src: np.ndarray
    dst: np.ndarray
    tracked: np.ndarray
    source_frame_index: int = -1
    target_frame_index: int = -1

    def __post_init__(self):
        if not (self.src.shape == self.dst.shape and self.src.shape[0] == self.tracked.shape[0]):
            raise ShapeError("correspondence arrays disagree in length")

    def __len__(self) -> int:
        return self.src.shape[0]

    def __iter__(self):
        for i in range(len(self)):
            s = FeaturePoint(float(self.src[i, 0]), float(self.src[i, 1]))
            if self.tracked[i]:
                yield s, FeaturePoint(float(self.dst[i, 0]), float(self.dst[i, 1])), True
            else:
                yield s, None, False

    @property
    def n_tracked(self) -> int:
        return int(self.tracked.sum())

    def tracked_pairs(self):
        """(src, dst) arrays restricted to tracked entries."""
        m = self.tracked
        return self.src[m], self.dst[m]


def points_to_array(points) -> np.ndarray:
    if len(points) == 0:
        return np.empty((0, 2), dtype=np.float64)
    return np.array([[p.x, p.y] for p in points], dtype=np.float64)


def sobel_gradients(img: np.ndarray):
    """Normalized Sobel derivatives (dI/dx, dI/dy) with edge-clamped borders."""
    gx = kernels.sep_convolve(img, _SOBEL_SMOOTH, _SOBEL_DIFF)
    gy = kernels.sep_convolve(img, _SOBEL_DIFF, _SOBEL_SMOOTH)
    return gx, gy


def min_eigenvalue_map(img: np.ndarray) -> np.ndarray:
    """Per-pixel smaller eigenvalue of the 3x3-window structure tensor."""
    gx, gy = sobel_gradients(img)
    sxx = kernels.sep_convolve(gx * gx, _BOX3, _BOX3)
    sxy = kernels.sep_convolve(gx * gy, _BOX3, _BOX3)
    syy = kernels.sep_convolve(gy * gy, _BOX3, _BOX3)
    tr = sxx + syy
    return 0.5 * (tr - np.sqrt((sxx - syy) ** 2 + 4.0 * sxy * sxy))


def detect_corners(img: np.ndarray, max_points: int = 500, quality: float = 0.01,
                   min_distance: float = 7.0) -> list[FeaturePoint]:
    """Strongest corners with greedy minimum-distance suppression.

    Candidates are pixels whose structure-tensor response exceeds
    quality * max(response); they are accepted in order of descending score
    (ties broken by raster order) while suppressing anything closer than
    ``min_distance`` to an already accepted point.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 8 or img.shape[1] < 8:
        raise ShapeError(f"corner detection needs at least an 8x8 image, got {img.shape}")
    if not (0.0 < quality < 1.0):
        raise InvalidParameterError(f"quality must lie in (0, 1), got {quality}")
    if max_points < 1:
        raise InvalidParameterError("max_points must be positive")

    resp = min_eigenvalue_map(img)
    rmax = float(resp.max())
    cand = resp > quality * rmax
    if not cand.any():
        return []

    ys, xs = np.nonzero(cand)
    scores = resp[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    ys, xs, scores = ys[order], xs[order], scores[order]

    alive = np.ones(ys.shape[0], dtype=bool)
    min_d2 = float(min_distance) ** 2
    out: list[FeaturePoint] = []
    ptr = 0
    n = ys.shape[0]
    while len(out) < max_points:
        while ptr < n and not alive[ptr]:
            ptr += 1
        if ptr >= n:
            break
        y, x = int(ys[ptr]), int(xs[ptr])
        out.append(FeaturePoint(float(x), float(y), float(scores[ptr])))
        alive[ptr] = False
        if min_d2 > 0:
            d2 = (xs - x) ** 2 + (ys - y) ** 2
            alive &= d2 >= min_d2
    return out


def _downsample2(img: np.ndarray) -> np.ndarray:
    return gaussian_blur(img, _PYR_SIGMA)[::2, ::2]


def build_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    pyr = [np.asarray(img, dtype=np.float64)]
    for _ in range(levels - 1):
        nxt = _downsample2(pyr[-1])
        if min(nxt.shape) < 8:
            break
        pyr.append(nxt)
    return pyr


def track_sparse_flow(prev: np.ndarray, nxt: np.ndarray, points,
                      levels: int = 3, window: int = 15,
                      max_iters: int = 30, eps: float = 0.01,
                      source_frame_index: int = -1,
                      target_frame_index: int = -1) -> CorrespondenceSet:
    """Coarse-to-fine iterative Lucas-Kanade for a sparse point set.

    A point comes back tracked=False when its window leaves the image at
    full resolution, its normal matrix is near-singular (flat texture), or
    the iteration diverges. Failures at coarser pyramid levels only skip
    that level's refinement.
    """
    prev = np.asarray(prev, dtype=np.float64)
    nxt = np.asarray(nxt, dtype=np.float64)
    if prev.shape != nxt.shape:
        raise ShapeError(f"dimension mismatch: {prev.shape} vs {nxt.shape}")
    if levels < 1:
        raise InvalidParameterError("levels must be >= 1")
    if window < 5 or window % 2 == 0:
        raise InvalidParameterError(f"window must be odd and >= 5, got {window}")

    pts = points if isinstance(points, np.ndarray) else points_to_array(points)
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    n = pts.shape[0]
    if n == 0:
        return CorrespondenceSet(pts, pts.copy(), np.zeros(0, dtype=bool),
                                 source_frame_index, target_frame_index)

    prev_pyr = build_pyramid(prev, levels)
    nxt_pyr = build_pyramid(nxt, levels)
    n_levels = min(len(prev_pyr), len(nxt_pyr))
    grads = [sobel_gradients(p) for p in prev_pyr[:n_levels]]

    radius = window // 2
    guess = np.zeros((n, 2), dtype=np.float64)
    status = np.ones(n, dtype=np.uint8)
    for lvl in range(n_levels - 1, -1, -1):
        scale = float(2 ** lvl)
        gx, gy = grads[lvl]
        flow, lvl_status = kernels.lk_level(
            prev_pyr[lvl], gx, gy, nxt_pyr[lvl], pts / scale, guess,
            radius, max_iters, eps, _MIN_EIG_FLOOR,
        )
        if lvl > 0:
            guess = 2.0 * flow
        else:
            status = lvl_status
            guess = flow

    dst = pts + guess
    h, w = prev.shape
    inb = (dst[:, 0] >= 0) & (dst[:, 0] <= w - 1) & (dst[:, 1] >= 0) & (dst[:, 1] <= h - 1)
    tracked = (status == 1) & inb
    return CorrespondenceSet(pts, dst, tracked, source_frame_index, target_frame_index)
