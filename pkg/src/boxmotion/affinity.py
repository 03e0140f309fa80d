"""Pairwise color/motion affinities: the pseudo-mask supervision signal.

A pixel pair is positive only when its motion similarity exceeds tau_m AND
its color similarity exceeds tau_c; the intersection keeps the positive set
small and precise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from boxmotion import kernels
from boxmotion.compensation import BoundingBox, MotionMap, boxes_mask
from boxmotion.errors import InvalidParameterError, ShapeError
from boxmotion.imaging import Frame


@dataclass(frozen=True)
class AffinityConfig:
    eta: float = 0.5
    tau_m: float = 0.75
    tau_c: float = 0.1
    dilation: int = 2
    stride: int = 1

    def __post_init__(self):
        if self.eta <= 0:
            raise InvalidParameterError("eta must be positive")
        if not (0.0 < self.tau_m < 1.0 and 0.0 < self.tau_c < 1.0):
            raise InvalidParameterError("tau_m and tau_c must lie in (0, 1)")
        if self.dilation < 1 or self.stride < 1:
            raise InvalidParameterError("dilation and stride must be >= 1")


@dataclass(frozen=True)
class PixelPair:
    a: tuple[int, int]  # (x, y)
    b: tuple[int, int]
    psi: float
    phi: float
    affinity: bool


@dataclass(frozen=True)
class PairAffinitySet:
    """All enumerated pixel pairs for one frame, stored as parallel arrays.

    Endpoint a precedes b in raster order and the whole set is sorted by
    (a.y, a.x, b.y, b.x); each unordered pair appears exactly once.
    """

    frame_index: int
    width: int
    height: int
    ay: np.ndarray
    ax: np.ndarray
    by: np.ndarray
    bx: np.ndarray
    psi: np.ndarray
    phi: np.ndarray
    affinity: np.ndarray

    def __len__(self) -> int:
        return self.ay.shape[0]

    @property
    def n_positive(self) -> int:
        return int(self.affinity.sum())

    def __iter__(self):
        for i in range(len(self)):
            yield PixelPair(
                (int(self.ax[i]), int(self.ay[i])),
                (int(self.bx[i]), int(self.by[i])),
                float(self.psi[i]),
                float(self.phi[i]),
                bool(self.affinity[i]),
            )

    def positive_indices(self):
        """(ay, ax, by, bx) restricted to positive pairs."""
        m = self.affinity
        return self.ay[m], self.ax[m], self.by[m], self.bx[m]


def motion_similarity(m_a, m_b, eta: float):
    """exp(-|m_a - m_b| * eta); 1 only for identical motion values."""
    return np.exp(-np.abs(np.asarray(m_a, dtype=np.float64) - np.asarray(m_b, dtype=np.float64)) * eta)


def color_similarity(c_a, c_b, eta: float):
    """exp(-||c_a - c_b||_2 * eta) over the three RGB channels."""
    d = np.asarray(c_a, dtype=np.float64) - np.asarray(c_b, dtype=np.float64)
    return np.exp(-np.sqrt(np.sum(d * d, axis=-1)) * eta)


def pair_affinity(psi: float, phi: float, cfg: AffinityConfig):
    """Threshold both similarities (strictly greater) and intersect the bits."""
    motion_bit = psi > cfg.tau_m
    color_bit = phi > cfg.tau_c
    return motion_bit, color_bit, motion_bit & color_bit


def _pair_offsets(dilation: int, stride: int) -> np.ndarray:
    # All 8 neighborhood offsets at the given dilation, minus the ones whose
    # mirrored pair would be emitted again from another stride-grid point:
    # when both offset components are multiples of the stride, the neighbor is
    # itself a grid point, so keep only the lexicographically-positive half.
    offs = []
    d = dilation
    for dy in (-d, 0, d):
        for dx in (-d, 0, d):
            if dy == 0 and dx == 0:
                continue
            neighbor_on_grid = (dy % stride == 0) and (dx % stride == 0)
            if neighbor_on_grid and (dy, dx) < (0, 0):
                continue
            offs.append((dy, dx))
    return np.array(offs, dtype=np.int64)


def build_pair_set(frame: Frame, motion: MotionMap, boxes, cfg: AffinityConfig) -> PairAffinitySet:
    """Enumerate local pixel pairs with at least one endpoint inside a box.

    Pairs link each stride-grid pixel to its 8 neighbors at the configured
    dilation; similarities come from the motion map and the RGB plane.
    """
    if motion.values.shape != frame.gray.shape:
        raise ShapeError("motion map is not aligned to the frame")
    h, w = frame.gray.shape
    inbox = boxes_mask(boxes, h, w)
    if not inbox.any():
        e = np.empty(0, dtype=np.int64)
        f = np.empty(0, dtype=np.float64)
        return PairAffinitySet(frame.index, w, h, e, e, e, e, f, f, np.empty(0, dtype=bool))

    offsets = _pair_offsets(cfg.dilation, cfg.stride)
    ay, ax, by, bx, psi, phi = kernels.enumerate_pairs(
        np.ascontiguousarray(frame.color), motion.values, inbox, offsets, cfg.stride, cfg.eta)

    # canonical endpoint order, then a global raster sort
    swap = (by < ay) | ((by == ay) & (bx < ax))
    ay2 = np.where(swap, by, ay)
    ax2 = np.where(swap, bx, ax)
    by2 = np.where(swap, ay, by)
    bx2 = np.where(swap, ax, bx)
    order = np.lexsort((bx2, by2, ax2, ay2))

    ay2, ax2, by2, bx2 = ay2[order], ax2[order], by2[order], bx2[order]
    psi, phi = psi[order], phi[order]
    aff = (psi > cfg.tau_m) & (phi > cfg.tau_c)
    return PairAffinitySet(frame.index, w, h, ay2, ax2, by2, bx2, psi, phi, aff)


def render_pseudo_mask(pairs: PairAffinitySet, width: int, height: int) -> np.ndarray:
    """Diagnostic raster: fraction of positive pairs among the pairs touching each pixel."""
    if len(pairs) == 0:
        return np.zeros((height, width), dtype=np.float64)
    pos, tot = kernels.touch_counts(pairs.ay, pairs.ax, pairs.by, pairs.bx,
                                    pairs.affinity, height, width)
    out = np.zeros((height, width), dtype=np.float64)
    np.divide(pos, tot, out=out, where=tot > 0)
    return out
