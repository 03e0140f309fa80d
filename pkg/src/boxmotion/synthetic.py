"""Deterministic synthetic sequences: textured background under a planted
camera motion, rigid moving squares with exact masks, and an optional
flickering distractor patch. Everything needed to oracle-check the motion
and supervision pipelines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from boxmotion.compensation import BoundingBox
from boxmotion.errors import InvalidParameterError
from boxmotion.imaging import AffineTransform, Frame, gaussian_blur
from boxmotion.metrics import BinaryMask


@dataclass(frozen=True)
class SquareSpec:
    """A rigid textured square moving at constant velocity in frame coordinates."""

    x0: int
    y0: int
    size: int
    vx: float = 0.0
    vy: float = 0.0
    color: tuple = (0.9, 0.2, 0.1)
    object_id: int = 1
    texture_amp: float = 0.25  # checker modulation so the square carries corners

    def position(self, t: int) -> tuple[int, int]:
        return int(round(self.x0 + self.vx * t)), int(round(self.y0 + self.vy * t))


@dataclass(frozen=True)
class FlickerSpec:
    """A rectangle refilled with fresh noise every frame; untrackable by design."""

    x: int
    y: int
    w: int
    h: int
    amplitude: float = 1.0


@dataclass(frozen=True)
class SceneSpec:
    width: int = 320
    height: int = 240
    n_frames: int = 5
    seed: int = 0
    pan: tuple = (0.0, 0.0)  # camera translation per frame, pixels
    rotation_deg: float = 0.0  # camera rotation per frame about the frame center
    background_contrast: float = 0.9
    background_smooth_sigma: float = 1.2
    squares: tuple = ()
    flicker: FlickerSpec | None = None
    box_pad: int = 1

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise InvalidParameterError("scene must be at least 16x16")
        if self.n_frames < 1:
            raise InvalidParameterError("need at least one frame")
        if not (0.0 <= self.background_contrast <= 1.0):
            raise InvalidParameterError("background_contrast must lie in [0, 1]")


@dataclass(frozen=True)
class SyntheticSequence:
    spec: SceneSpec
    frames: list
    boxes: list  # per frame: list[BoundingBox]
    masks: list  # per frame: list[BinaryMask]
    camera: list  # per frame: AffineTransform, frame coords -> world coords
    align_prev_to_cur: list  # per frame t>=1: transform mapping frame t-1 coords to frame t


def _camera_transform(spec: SceneSpec, t: int, margin: float) -> AffineTransform:
    rot = AffineTransform.rotation_about(math.radians(spec.rotation_deg) * t,
                                         spec.width / 2.0, spec.height / 2.0)
    shift = AffineTransform.translation(margin + spec.pan[0] * t, margin + spec.pan[1] * t)
    return shift.compose(rot)


def _world_texture(spec: SceneSpec, rng, margin: int):
    h = spec.height + 2 * margin
    w = spec.width + 2 * margin
    base = gaussian_blur(rng.random((h, w)), spec.background_smooth_sigma)
    lo, hi = base.min(), base.max()
    if hi > lo:
        base = (base - lo) / (hi - lo)
    gray = 0.5 + spec.background_contrast * (base - 0.5)
    # fixed per-channel gains keep the background chromatically bland
    return np.stack([gray * 0.95, gray, gray * 0.9], axis=-1)


def generate_scene(spec: SceneSpec) -> SyntheticSequence:
    """Render the sequence described by ``spec``, deterministically from its seed."""
    rng = np.random.default_rng(spec.seed)
    excursion = (abs(spec.pan[0]) + abs(spec.pan[1])) * (spec.n_frames - 1)
    excursion += math.hypot(spec.width, spec.height) * abs(math.radians(spec.rotation_deg)) * (spec.n_frames - 1)
    margin = int(math.ceil(excursion)) + 8
    world = _world_texture(spec, rng, margin)

    frames = []
    boxes_per_frame = []
    masks_per_frame = []
    cameras = []
    aligns = [None]

    for t in range(spec.n_frames):
        cam = _camera_transform(spec, t, margin)
        cameras.append(cam)
        inv = cam.inverse()
        # frame(p) = world(cam(p)): sample the world through the camera
        ys, xs = np.mgrid[0:spec.height, 0:spec.width]
        pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
        src = cam.apply(pts)
        color = np.empty((spec.height, spec.width, 3), dtype=np.float64)
        for ch in range(3):
            color[..., ch] = _bilinear_gather(world[..., ch], src).reshape(spec.height, spec.width)

        if spec.flicker is not None:
            f = spec.flicker
            noise = rng.random((f.h, f.w))
            patch = color[f.y:f.y + f.h, f.x:f.x + f.w, :]
            for ch in range(3):
                patch[..., ch] = patch[..., ch] * (1.0 - f.amplitude) + (noise > 0.5) * f.amplitude

        boxes = []
        masks = []
        for sq in spec.squares:
            px, py = sq.position(t)
            x0, y0 = max(px, 0), max(py, 0)
            x1, y1 = min(px + sq.size, spec.width), min(py + sq.size, spec.height)
            if x0 >= x1 or y0 >= y1:
                continue
            block = np.empty((y1 - y0, x1 - x0, 3))
            block[:] = np.asarray(sq.color)
            if sq.texture_amp > 0:
                yy, xx = np.mgrid[y0:y1, x0:x1]
                checker = (((yy - py) // 4 + (xx - px) // 4) % 2) * 2.0 - 1.0
                block += sq.texture_amp * checker[..., None]
            color[y0:y1, x0:x1, :] = np.clip(block, 0.0, 1.0)

            m = np.zeros((spec.height, spec.width), dtype=bool)
            m[y0:y1, x0:x1] = True
            masks.append(BinaryMask(m, sq.object_id))
            bx0 = max(x0 - spec.box_pad, 0)
            by0 = max(y0 - spec.box_pad, 0)
            bx1 = min(x1 + spec.box_pad, spec.width)
            by1 = min(y1 + spec.box_pad, spec.height)
            boxes.append(BoundingBox(bx0, by0, bx1 - bx0, by1 - by0, sq.object_id))

        frames.append(Frame(index=t, color=np.clip(color, 0.0, 1.0)))
        boxes_per_frame.append(boxes)
        masks_per_frame.append(masks)
        if t >= 1:
            aligns.append(cameras[t].inverse().compose(cameras[t - 1]))

    return SyntheticSequence(spec, frames, boxes_per_frame, masks_per_frame, cameras, aligns)


def _bilinear_gather(img: np.ndarray, pts: np.ndarray) -> np.ndarray:
    h, w = img.shape
    x = np.clip(pts[:, 0], 0.0, w - 1.0)
    y = np.clip(pts[:, 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    return (img[y0, x0] * (1 - fx) * (1 - fy) + img[y0, x1] * fx * (1 - fy)
            + img[y1, x0] * (1 - fx) * fy + img[y1, x1] * fx * fy)
