"""Image containers and the pixel operations everything else builds on.

Grayscale images travel as plain float64 numpy arrays of shape (H, W) with
values in [0, 1]; the ``Frame`` dataclass bundles the color plane with its
precomputed luminance. All operations are pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boxmotion import kernels
from boxmotion.errors import InvalidParameterError, ShapeError

# BT.601 luma weights
_LUMA_R = 0.299
_LUMA_G = 0.587
_LUMA_B = 0.114


def _as_gray(img) -> np.ndarray:
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D grayscale array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Frame:
    """A single video image: RGB color plane plus its luminance, both in [0, 1]."""

    index: int
    color: np.ndarray  # (H, W, 3) float64
    gray: np.ndarray = field(default=None)  # (H, W) float64, derived when omitted

    def __post_init__(self):
        color = np.asarray(self.color, dtype=np.float64)
        if color.ndim != 3 or color.shape[2] != 3:
            raise ShapeError(f"color plane must be (H, W, 3), got {color.shape}")
        if color.shape[0] < 3 or color.shape[1] < 3:
            raise ShapeError(f"frame must be at least 3x3, got {color.shape[:2]}")
        if color.min() < 0.0 or color.max() > 1.0:
            raise InvalidParameterError("color values must lie in [0, 1]")
        if self.index < 0:
            raise InvalidParameterError("frame index must be non-negative")
        object.__setattr__(self, "color", color)
        gray = self.gray
        if gray is None:
            gray = to_grayscale_array(color)
        else:
            gray = _as_gray(gray)
            if gray.shape != color.shape[:2]:
                raise ShapeError("gray plane dimensions differ from color plane")
        object.__setattr__(self, "gray", gray)

    @property
    def width(self) -> int:
        return self.color.shape[1]

    @property
    def height(self) -> int:
        return self.color.shape[0]


@dataclass(frozen=True)
class AffineTransform:
    """Six-coefficient map (x, y) -> (a*x + b*y + tx, c*x + d*y + ty), in pixels."""

    a: float = 1.0
    b: float = 0.0
    tx: float = 0.0
    c: float = 0.0
    d: float = 1.0
    ty: float = 0.0

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls()

    @classmethod
    def translation(cls, tx: float, ty: float) -> "AffineTransform":
        return cls(1.0, 0.0, tx, 0.0, 1.0, ty)

    @classmethod
    def rotation_about(cls, angle_rad: float, cx: float, cy: float) -> "AffineTransform":
        ca, sa = math.cos(angle_rad), math.sin(angle_rad)
        return cls(ca, -sa, cx - ca * cx + sa * cy, sa, ca, cy - sa * cx - ca * cy)

    @property
    def determinant(self) -> float:
        return self.a * self.d - self.b * self.c

    def apply(self, xy: np.ndarray) -> np.ndarray:
        """Map (N, 2) points [x, y] through the transform."""
        p = np.asarray(xy, dtype=np.float64)
        x = self.a * p[..., 0] + self.b * p[..., 1] + self.tx
        y = self.c * p[..., 0] + self.d * p[..., 1] + self.ty
        return np.stack([x, y], axis=-1)

    def inverse(self) -> "AffineTransform":
        det = self.determinant
        if abs(det) < 1e-12:
            raise InvalidParameterError("transform is not invertible")
        ia = self.d / det
        ib = -self.b / det
        ic = -self.c / det
        id_ = self.a / det
        return AffineTransform(ia, ib, -(ia * self.tx + ib * self.ty), ic, id_, -(ic * self.tx + id_ * self.ty))

    def compose(self, other: "AffineTransform") -> "AffineTransform":
        """self o other: apply ``other`` first."""
        return AffineTransform(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.a * other.tx + self.b * other.ty + self.tx,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.c * other.tx + self.d * other.ty + self.ty,
        )

    def as_tuple(self):
        return (self.a, self.b, self.tx, self.c, self.d, self.ty)


def to_grayscale_array(color: np.ndarray) -> np.ndarray:
    """BT.601 luminance of an (H, W, 3) array in [0, 1]."""
    color = np.asarray(color, dtype=np.float64)
    g = _LUMA_R * color[..., 0] + _LUMA_G * color[..., 1] + _LUMA_B * color[..., 2]
    return np.clip(g, 0.0, 1.0)


def to_grayscale(frame: Frame) -> np.ndarray:
    return to_grayscale_array(frame.color)


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian with radius ceil(3*sigma)."""
    if sigma <= 0:
        raise InvalidParameterError(f"sigma must be positive, got {sigma}")
    r = int(math.ceil(3.0 * sigma))
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, edge-clamped borders, output dimensions unchanged."""
    img = _as_gray(img)
    k = gaussian_kernel1d(sigma)
    return kernels.sep_convolve(img, k, k)


def warp_affine(img: np.ndarray, t: AffineTransform) -> np.ndarray:
    """Apply ``t`` to the image content (inverse-mapping bilinear warp, zero outside)."""
    img = _as_gray(img)
    inv = t.inverse()
    return kernels.warp_bilinear(img, inv.a, inv.b, inv.tx, inv.c, inv.d, inv.ty)


def abs_difference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = _as_gray(a)
    b = _as_gray(b)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.abs(a - b)


def median_filter(img: np.ndarray, radius: int) -> np.ndarray:
    """Median over the (2r+1)^2 window, edge-clamped borders."""
    img = _as_gray(img)
    if radius < 1:
        raise InvalidParameterError(f"radius must be >= 1, got {radius}")
    return kernels.median2d(img, int(radius))
