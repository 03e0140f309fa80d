"""Sequence manifests, image files, and the raw float map format.

Manifest schema (UTF-8 JSON):
    {"sequence": "name",
     "frames": [{"index": 0, "file": "00000.png",
                 "boxes": [{"x": 10, "y": 20, "w": 30, "h": 40, "object_id": 1}]}]}

Raw float maps (.bmf): magic b"BMF1", then width and height as little-endian
uint32, then width*height little-endian float32 values in row-major order.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from boxmotion.compensation import BoundingBox
from boxmotion.errors import (
    ImageDecodeError,
    MalformedManifestError,
    MissingFileError,
    NonMonotoneIndexError,
)
from boxmotion.imaging import Frame
from boxmotion.metrics import BinaryMask

RAW_MAGIC = b"BMF1"


@dataclass(frozen=True)
class FrameRecord:
    index: int
    file: str
    boxes: list


@dataclass(frozen=True)
class SequenceManifest:
    sequence: str
    frames: list


def load_manifest(path) -> SequenceManifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("manifest not found", path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedManifestError(f"manifest is not valid JSON: {e}", path) from e

    if not isinstance(data, dict) or "frames" not in data:
        raise MalformedManifestError("manifest must be an object with a 'frames' list", path)
    records = []
    last_index = None
    for i, fr in enumerate(data["frames"]):
        try:
            index = int(fr["index"])
            file = str(fr["file"])
            boxes = [
                BoundingBox(int(b["x"]), int(b["y"]), int(b["w"]), int(b["h"]),
                            int(b.get("object_id", 1)))
                for b in fr.get("boxes", [])
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise MalformedManifestError(f"bad frame record #{i}: {e}", path) from e
        if last_index is not None and index <= last_index:
            raise NonMonotoneIndexError(
                f"frame indices must be strictly increasing, got {index} after {last_index}", path)
        last_index = index
        records.append(FrameRecord(index, file, boxes))
    return SequenceManifest(str(data.get("sequence", path.stem)), records)


def load_image_array(path) -> np.ndarray:
    """Decode an 8-bit PNG into an (H, W, 3) float array in [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("image not found", path)
    try:
        with Image.open(path) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(f"cannot decode image: {e}", path) from e
    return arr


def load_sequence(manifest_path, frames_dir):
    """Frames plus per-frame box lists; boxes are clipped to the frame with a warning."""
    manifest = load_manifest(manifest_path)
    frames_dir = Path(frames_dir)
    frames = []
    boxes_per_frame = []
    for rec in manifest.frames:
        arr = load_image_array(frames_dir / rec.file)
        frame = Frame(index=rec.index, color=arr)
        clipped = []
        for b in rec.boxes:
            x0 = max(b.x, 0)
            y0 = max(b.y, 0)
            x1 = min(b.x + b.w, frame.width)
            y1 = min(b.y + b.h, frame.height)
            if x0 >= x1 or y0 >= y1:
                warnings.warn(f"box {b} of frame {rec.index} lies outside the frame; dropped")
                continue
            if (x0, y0, x1 - x0, y1 - y0) != (b.x, b.y, b.w, b.h):
                warnings.warn(f"box {b} of frame {rec.index} clipped to frame bounds")
                b = BoundingBox(x0, y0, x1 - x0, y1 - y0, b.object_id)
            clipped.append(b)
        frames.append(frame)
        boxes_per_frame.append(clipped)
    return frames, boxes_per_frame


def save_image(path, arr: np.ndarray) -> None:
    """Write a [0, 1] float array as an 8-bit PNG (grayscale for 2-D input)."""
    a = np.asarray(arr)
    data = np.clip(np.round(a * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data).save(path)


def save_mask(path, masks) -> None:
    """Write per-object masks into one 8-bit PNG, pixel value = object_id."""
    masks = list(masks)
    if not masks:
        raise ValueError("need at least one mask")
    out = np.zeros((masks[0].height, masks[0].width), dtype=np.uint8)
    for m in masks:
        out[m.mask] = np.uint8(m.object_id)
    Image.fromarray(out).save(path)


def load_mask(path) -> list:
    """Read a mask PNG back into per-object BinaryMask values."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("mask not found", path)
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except (UnidentifiedImageError, OSError) as e:
        raise ImageDecodeError(f"cannot decode mask: {e}", path) from e
    ids = sorted(int(v) for v in np.unique(arr) if v != 0)
    if not ids:
        return [BinaryMask(np.zeros(arr.shape, dtype=bool), 1)]
    return [BinaryMask(arr == oid, oid) for oid in ids]


def save_raw_map(path, values: np.ndarray) -> None:
    v = np.asarray(values, dtype=np.float32)
    if v.ndim != 2:
        raise ValueError(f"raw maps are 2-D, got shape {v.shape}")
    h, w = v.shape
    with open(path, "wb") as f:
        f.write(RAW_MAGIC)
        f.write(struct.pack("<II", w, h))
        f.write(v.astype("<f4").tobytes(order="C"))


def load_raw_map(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise MissingFileError("raw map not found", path)
    blob = path.read_bytes()
    if blob[:4] != RAW_MAGIC:
        raise ImageDecodeError("bad raw map magic", path)
    w, h = struct.unpack("<II", blob[4:12])
    expect = 12 + 4 * w * h
    if len(blob) != expect:
        raise ImageDecodeError(f"raw map size mismatch: {len(blob)} != {expect}", path)
    return np.frombuffer(blob[12:], dtype="<f4").reshape(h, w).astype(np.float64)
