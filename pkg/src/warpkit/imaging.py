"""Image, mask, and pose containers plus the sampling primitives shared by all warps.

Pixel data lives in normalized [0, 1] float32 arrays; 8-bit conversion happens
only at file I/O so warp chains do not accumulate quantization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyImage, InvalidCoordinate, ShapeMismatch


@dataclass
class Image:
    """Row-major float image of shape (height, width, channels), values in [0, 1].

    Channels must be 1 (gray), 3 (RGB), or 4 (RGBA).
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3, 4):
            raise ShapeMismatch(f"image must be (H, W, C) with C in 1/3/4, got {arr.shape}")
        if arr.size and (not np.isfinite(arr).all() or arr.min() < 0 or arr.max() > 1):
            raise ValueError("image values must be finite and in [0, 1]")
        self.data = arr

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def zeros(cls, height: int, width: int, channels: int = 3) -> "Image":
        return cls(np.zeros((height, width, channels), dtype=np.float32))

    @classmethod
    def full(cls, height: int, width: int, value, channels: int = 3) -> "Image":
        arr = np.empty((height, width, channels), dtype=np.float32)
        arr[:] = np.asarray(value, dtype=np.float32)
        return cls(arr)


@dataclass
class Mask:
    """Binary (H, W) mask; values strictly 0 or 1."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim != 2:
            raise ShapeMismatch(f"mask must be 2-D, got shape {arr.shape}")
        if arr.size and not np.isin(arr, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        self.data = arr.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, height: int, width: int) -> "Mask":
        return cls(np.zeros((height, width), dtype=np.uint8))


DENSEPOSE_PARTS = 24


@dataclass
class DensePoseMap:
    """Per-pixel body-surface correspondence: part index 0..24 (0 = background)
    and (u, v) surface coordinates in [0, 1].

    The constructor clamps u/v into [0, 1] and zeroes them on background pixels,
    which keeps every map normalized regardless of the source.
    """

    parts: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        parts = np.asarray(self.parts)
        u = np.asarray(self.u, dtype=np.float32)
        v = np.asarray(self.v, dtype=np.float32)
        if parts.ndim != 2 or parts.shape != u.shape or parts.shape != v.shape:
            raise ShapeMismatch("parts, u, v must share one (H, W) extent")
        if parts.size and (parts.min() < 0 or parts.max() > DENSEPOSE_PARTS):
            raise ValueError(f"part indices must lie in 0..{DENSEPOSE_PARTS}")
        if not (np.isfinite(u).all() and np.isfinite(v).all()):
            raise ValueError("u/v must be finite")
        u = np.clip(u, 0.0, 1.0)
        v = np.clip(v, 0.0, 1.0)
        bg = parts == 0
        u[bg] = 0.0
        v[bg] = 0.0
        self.parts = parts.astype(np.uint8)
        self.u = u
        self.v = v

    @property
    def height(self) -> int:
        return self.parts.shape[0]

    @property
    def width(self) -> int:
        return self.parts.shape[1]

    def foreground(self) -> Mask:
        return Mask((self.parts > 0).astype(np.uint8))


@dataclass
class Keypoint:
    name: str
    x: float
    y: float
    score: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidCoordinate(f"keypoint {self.name!r} has non-finite coordinates")
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"keypoint {self.name!r} score must be in [0, 1]")


@dataclass
class KeypointSet:
    """Named 2-D landmarks with confidences; names unique within a set."""

    keypoints: list[Keypoint] = field(default_factory=list)

    def __post_init__(self):
        names = [k.name for k in self.keypoints]
        if len(set(names)) != len(names):
            raise ValueError("keypoint names must be unique within a set")

    def __len__(self) -> int:
        return len(self.keypoints)

    def get(self, name: str) -> Keypoint | None:
        for kp in self.keypoints:
            if kp.name == name:
                return kp
        return None

    def above(self, min_score: float) -> list[Keypoint]:
        return [k for k in self.keypoints if k.score >= min_score]

    def coords(self, min_score: float = 0.0) -> np.ndarray:
        """(N, 2) array of x, y for keypoints at or above min_score."""
        pts = [(k.x, k.y) for k in self.above(min_score)]
        return np.asarray(pts, dtype=np.float64).reshape(-1, 2)


def sample_grid(data: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear sampling of (H, W, C) data at float coordinate arrays.

    Coordinates are clamped to the valid sample range (clamp-to-edge), so the
    result is always a convex combination of in-bounds pixels.
    """
    h, w = data.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, max(w - 2, 0))
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    top = data[y0, x0] * (1.0 - fx) + data[y0, x1] * fx
    bot = data[y1, x0] * (1.0 - fx) + data[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def bilinear_sample(img: Image, x: float, y: float) -> np.ndarray:
    """Sample one color vector at continuous pixel coordinates.

    Exact at integer grid points; out-of-range coordinates clamp to the edge.
    """
    if img.width == 0 or img.height == 0:
        raise EmptyImage("cannot sample an empty image")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidCoordinate(f"sample coordinates must be finite, got ({x}, {y})")
    out = sample_grid(img.data.astype(np.float64), np.asarray([x]), np.asarray([y]))
    return out[0].astype(np.float32)


@dataclass
class Placement:
    """Where resize_pad put the scaled content, so results can be un-padded."""

    x0: int
    y0: int
    content_w: int
    content_h: int
    src_w: int
    src_h: int


def resize(img: Image, out_w: int, out_h: int) -> Image:
    """Bilinear resize to an explicit extent."""
    if img.width == 0 or img.height == 0:
        raise EmptyImage("cannot resize an empty image")
    if out_w < 1 or out_h < 1:
        raise ValueError("target extent must be positive")
    # Half-pixel convention: output centers map uniformly onto input centers.
    sx = img.width / out_w
    sy = img.height / out_h
    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * sx - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * sy - 0.5
    gx, gy = np.meshgrid(xs, ys)
    out = sample_grid(img.data.astype(np.float64), gx, gy)
    return Image(np.clip(out, 0.0, 1.0).astype(np.float32))


def resize_pad(img: Image, target: int, fill=1.0) -> tuple[Image, Placement]:
    """Scale the longer side to ``target`` and center-pad the shorter side.

    Padding defaults to white. When the split is odd the extra pixel goes to
    the right/bottom. Returns the padded image and the content placement.
    """
    if target < 1:
        raise ValueError("target must be positive")
    if img.width == 0 or img.height == 0:
        raise EmptyImage("cannot resize an empty image")
    scale = target / max(img.width, img.height)
    content_w = min(target, max(1, round(img.width * scale)))
    content_h = min(target, max(1, round(img.height * scale)))
    content = resize(img, content_w, content_h)
    x0 = (target - content_w) // 2
    y0 = (target - content_h) // 2
    canvas = Image.full(target, target, fill, channels=img.channels)
    canvas.data[y0:y0 + content_h, x0:x0 + content_w] = content.data
    return canvas, Placement(x0, y0, content_w, content_h, img.width, img.height)


def unpad(img: Image, placement: Placement) -> Image:
    """Undo resize_pad: crop the content rectangle and rescale to the original extent."""
    crop = img.data[
        placement.y0:placement.y0 + placement.content_h,
        placement.x0:placement.x0 + placement.content_w,
    ]
    return resize(Image(crop), placement.src_w, placement.src_h)
