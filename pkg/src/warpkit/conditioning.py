"""Conditioning inputs: partial-background extraction, pose rasterization,
the 9-channel condition stack, garment removal, part-feature pooling, and
the part-wise orientation augmentation used with unpaired images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPose, ShapeMismatch
from .imaging import DensePoseMap, Image, KeypointSet, Mask, sample_grid

PART_LABELS = (
    "background",
    "face",
    "hair",
    "headwear",
    "upper_clothing",
    "coat",
    "lower_clothing",
    "shoes",
    "accessories",
    "person",
)

DEFAULT_BOX_MARGIN = 0.1
DEFAULT_KP_FLOOR = 0.3
GARMENT_FILL = 0.5
DEFAULT_JITTER_DEG = 15.0

# 18-joint skeleton in the common pose-detector naming, with a fixed limb palette.
SKELETON_JOINTS = (
    "nose", "neck",
    "right_shoulder", "right_elbow", "right_wrist",
    "left_shoulder", "left_elbow", "left_wrist",
    "right_hip", "right_knee", "right_ankle",
    "left_hip", "left_knee", "left_ankle",
    "right_eye", "left_eye", "right_ear", "left_ear",
)
SKELETON_LIMBS = (
    ("neck", "right_shoulder"), ("neck", "left_shoulder"),
    ("right_shoulder", "right_elbow"), ("right_elbow", "right_wrist"),
    ("left_shoulder", "left_elbow"), ("left_elbow", "left_wrist"),
    ("neck", "right_hip"), ("right_hip", "right_knee"), ("right_knee", "right_ankle"),
    ("neck", "left_hip"), ("left_hip", "left_knee"), ("left_knee", "left_ankle"),
    ("neck", "nose"),
    ("nose", "right_eye"), ("right_eye", "right_ear"),
    ("nose", "left_eye"), ("left_eye", "left_ear"),
)
LIMB_PALETTE = (
    (255, 0, 0), (255, 85, 0), (255, 170, 0), (255, 255, 0), (170, 255, 0),
    (85, 255, 0), (0, 255, 0), (0, 255, 85), (0, 255, 170), (0, 255, 255),
    (0, 170, 255), (0, 85, 255), (0, 0, 255), (85, 0, 255), (170, 0, 255),
    (255, 0, 255), (255, 0, 170),
)


@dataclass
class PartSegmentation:
    """Per-pixel part labels 0..9 (see PART_LABELS). Label 9 marks person pixels
    not covered by a specific part; any pixel labeled 1..8 is implicitly part of
    the person region in a companion person mask."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ShapeMismatch(f"segmentation must be 2-D, got {arr.shape}")
        if arr.size and (arr.min() < 0 or arr.max() >= len(PART_LABELS)):
            raise ValueError("labels must lie in 0..9")
        self.labels = arr.astype(np.uint8)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    def present_labels(self) -> list[int]:
        return sorted(int(l) for l in np.unique(self.labels) if l != 0)


@dataclass
class ConditionStack:
    """9-channel conditioning tensor: channels 0-2 warped texture, 3-5 rendered
    target pose, 6-8 partial background."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 3 or arr.shape[0] != 9:
            raise ShapeMismatch(f"condition stack must be (9, H, W), got {arr.shape}")
        self.data = arr

    def tex(self) -> Image:
        return Image(np.moveaxis(self.data[0:3], 0, 2))

    def pose(self) -> Image:
        return Image(np.moveaxis(self.data[3:6], 0, 2))

    def bg(self) -> Image:
        return Image(np.moveaxis(self.data[6:9], 0, 2))


@dataclass
class PartFeatures:
    label: int
    name: str
    tokens: np.ndarray  # (n, C+E): visual feature ++ label embedding per cell
    pooled: np.ndarray  # (C+E,): mean visual feature ++ label embedding
    present: bool


@dataclass
class PartFeatureSet:
    parts: dict[int, PartFeatures] = field(default_factory=dict)

    def token_count(self) -> int:
        return sum(p.tokens.shape[0] for p in self.parts.values())

    def present(self) -> list[int]:
        return [l for l, p in sorted(self.parts.items()) if p.present]


def _cover_box(pts: np.ndarray, margin: float, width: int, height: int):
    """Pixel rectangle covering the points' bbox expanded by margin * max side."""
    x_min, y_min = pts.min(axis=0)
    x_max, y_max = pts.max(axis=0)
    pad = margin * max(x_max - x_min, y_max - y_min)
    x0 = max(0, math.floor(x_min - pad))
    y0 = max(0, math.floor(y_min - pad))
    x1 = min(width - 1, math.ceil(x_max + pad))
    y1 = min(height - 1, math.ceil(y_max + pad))
    return x0, y0, x1, y1


def extract_background(
    img: Image,
    src_kps: KeypointSet,
    tgt_kps: KeypointSet,
    margin: float = DEFAULT_BOX_MARGIN,
    confidence_floor: float = DEFAULT_KP_FLOOR,
) -> Image:
    """Zero out the union of the source- and target-pose bounding boxes.

    Each box covers its keypoints (score >= floor) expanded by margin times the
    larger box side. Raises EmptyPose when neither set has a usable keypoint.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    boxes = []
    for kps in (src_kps, tgt_kps):
        pts = kps.coords(confidence_floor)
        if pts.size:
            boxes.append(_cover_box(pts, margin, img.width, img.height))
    if not boxes:
        raise EmptyPose("no keypoints above the confidence floor in either set")
    out = img.data.copy()
    for x0, y0, x1, y1 in boxes:
        if x1 >= 0 and y1 >= 0 and x0 <= img.width - 1 and y0 <= img.height - 1:
            out[y0:y1 + 1, x0:x1 + 1] = 0.0
    return Image(out)


def render_pose_map(pose: DensePoseMap) -> Image:
    """Raster form of a dense pose: the IUV byte encoding as an RGB image."""
    r = pose.parts.astype(np.float32) / 255.0
    g = np.rint(pose.u * 255.0) / 255.0
    b = np.rint(pose.v * 255.0) / 255.0
    return Image(np.stack([r, g, b], axis=2))


def render_pose_keypoints(
    kps: KeypointSet,
    out_w: int,
    out_h: int,
    confidence_floor: float = DEFAULT_KP_FLOOR,
    base_thickness: float = 3.0,
) -> Image:
    """Draw the 18-joint skeleton as hard-edged colored limbs on black.

    Line thickness is base_thickness px at a 256-px extent and scales
    proportionally with the output size.
    """
    usable = {k.name: k for k in kps.above(confidence_floor)}
    if not usable:
        raise EmptyPose("no keypoints above the confidence floor")
    canvas = np.zeros((out_h, out_w, 3), dtype=np.float32)
    radius = 0.5 * base_thickness * max(out_w, out_h) / 256.0
    radius = max(radius, 0.5)
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    for idx, (a, b) in enumerate(SKELETON_LIMBS):
        if a not in usable or b not in usable:
            continue
        ax, ay = usable[a].x, usable[a].y
        bx, by = usable[b].x, usable[b].y
        # Squared distance from each pixel center to the segment.
        dx, dy = bx - ax, by - ay
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0:
            t = np.zeros_like(xs, dtype=np.float64)
        else:
            t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / seg_len2, 0.0, 1.0)
        d2 = (xs - (ax + t * dx)) ** 2 + (ys - (ay + t * dy)) ** 2
        hit = d2 <= radius * radius
        color = np.asarray(LIMB_PALETTE[idx % len(LIMB_PALETTE)], dtype=np.float32) / 255.0
        canvas[hit] = color
    return Image(canvas)


def pack_condition(tex: Image | None, pose_img: Image, bg: Image) -> ConditionStack:
    """Concatenate [texture; pose; background] into the fixed 9-channel stack.

    ``tex=None`` packs zero texture planes (full text-driven editing).
    """
    if tex is None:
        tex = Image.zeros(pose_img.height, pose_img.width, 3)
    planes = []
    for name, img in (("tex", tex), ("pose", pose_img), ("bg", bg)):
        if (img.height, img.width) != (pose_img.height, pose_img.width):
            raise ShapeMismatch(f"{name} extent {img.height}x{img.width} does not match stack")
        if img.channels != 3:
            raise ShapeMismatch(f"{name} must have 3 channels, got {img.channels}")
        planes.append(np.moveaxis(img.data, 2, 0))
    return ConditionStack(np.concatenate(planes, axis=0))


def remove_garment(img: Image, garment_mask: Mask, fill=GARMENT_FILL) -> Image:
    """Replace pixels under the garment mask with a flat fill (neutral gray)."""
    if (img.height, img.width) != (garment_mask.height, garment_mask.width):
        raise ShapeMismatch("image and garment mask extents differ")
    out = img.data.copy()
    out[garment_mask.data == 1] = np.asarray(fill, dtype=np.float32)
    return Image(out)


def _majority_downsample(labels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Per-cell majority label; ties go to background, then to the lowest id."""
    h, w = labels.shape
    ye = [round(i * h / out_h) for i in range(out_h + 1)]
    xe = [round(j * w / out_w) for j in range(out_w + 1)]
    out = np.zeros((out_h, out_w), dtype=np.uint8)
    for i in range(out_h):
        for j in range(out_w):
            block = labels[ye[i]:max(ye[i + 1], ye[i] + 1), xe[j]:max(xe[j + 1], xe[j] + 1)]
            counts = np.bincount(block.ravel(), minlength=len(PART_LABELS))
            best = counts.max()
            winners = np.flatnonzero(counts == best)
            out[i, j] = 0 if 0 in winners else winners.min()
    return out


def extract_part_features(
    feature_grid: np.ndarray,
    seg: PartSegmentation,
    label_embeds: dict[str, np.ndarray],
) -> PartFeatureSet:
    """Group feature-grid tokens by part label.

    The segmentation is majority-downsampled to the grid extent; each cell's
    feature vector joins its part's token list with the part's label embedding
    concatenated. The pooled vector is the mean raw feature plus the embedding.
    """
    grid = np.asarray(feature_grid, dtype=np.float32)
    if grid.ndim != 3:
        raise ShapeMismatch(f"feature grid must be (Hf, Wf, C), got {grid.shape}")
    hf, wf, c = grid.shape

    embeds = {}
    dim = None
    for label in range(1, len(PART_LABELS)):
        name = PART_LABELS[label]
        if name not in label_embeds:
            raise ShapeMismatch(f"label_embeds is missing {name!r}")
        vec = np.asarray(label_embeds[name], dtype=np.float32).ravel()
        if dim is None:
            dim = vec.size
        elif vec.size != dim:
            raise ShapeMismatch(f"label embedding {name!r} has dim {vec.size}, expected {dim}")
        embeds[label] = vec

    cell_labels = _majority_downsample(seg.labels, hf, wf)
    parts = {}
    for label in range(1, len(PART_LABELS)):
        cells = cell_labels == label
        raw = grid[cells]
        if raw.size:
            tokens = np.hstack([raw, np.tile(embeds[label], (raw.shape[0], 1))])
            pooled = np.concatenate([raw.mean(axis=0), embeds[label]])
            present = True
        else:
            tokens = np.zeros((0, c + dim), dtype=np.float32)
            pooled = np.zeros(c + dim, dtype=np.float32)
            present = False
        parts[label] = PartFeatures(
            label=label, name=PART_LABELS[label], tokens=tokens, pooled=pooled, present=present
        )
    return PartFeatureSet(parts)


def _part_rng(seed: int, label: int) -> np.random.Generator:
    # One stream per (seed, part) so parts can be transformed independently.
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(label,)))


def augment_parts(
    img: Image,
    seg: PartSegmentation,
    seed: int,
    jitter_deg: float = DEFAULT_JITTER_DEG,
) -> Image:
    """Scramble each part's orientation, deterministically in the seed.

    For every present part the bbox patch is flipped with a fair coin, rotated
    by a random quarter turn plus uniform jitter about the bbox center, and
    composited back over the original; pixels whose preimage falls outside the
    bbox keep their original value. Pixels outside every part bbox are untouched.
    """
    if (img.height, img.width) != (seg.height, seg.width):
        raise ShapeMismatch("image and segmentation extents differ")
    if seed < 0:
        raise ValueError("seed must be non-negative")
    out = img.data.copy()
    for label in seg.present_labels():
        rng = _part_rng(seed, label)
        # Fixed draw order keeps the stream stable across jitter configs.
        quarter = int(rng.integers(4))
        jitter = float(rng.uniform(-jitter_deg, jitter_deg))
        flip = bool(rng.integers(2))

        ys, xs = np.nonzero(seg.labels == label)
        y0, y1 = int(ys.min()), int(ys.max())
        x0, x1 = int(xs.min()), int(xs.max())
        patch = img.data[y0:y1 + 1, x0:x1 + 1]
        ph, pw = patch.shape[:2]
        cy, cx = (ph - 1) / 2.0, (pw - 1) / 2.0

        angle = math.radians(quarter * 90.0 + jitter)
        cos_a, sin_a = math.cos(angle), math.sin(angle)
        gy, gx = np.mgrid[0:ph, 0:pw].astype(np.float64)
        # Inverse map: rotate back about the center, then undo the flip.
        rx = cos_a * (gx - cx) + sin_a * (gy - cy)
        ry = -sin_a * (gx - cx) + cos_a * (gy - cy)
        if flip:
            rx = -rx
        sx = rx + cx
        sy = ry + cy
        # Quarter turns hit the grid exactly up to trig roundoff; snap so they
        # resample without interpolation loss.
        sx = np.where(np.abs(sx - np.rint(sx)) < 1e-9, np.rint(sx), sx)
        sy = np.where(np.abs(sy - np.rint(sy)) < 1e-9, np.rint(sy), sy)
        inside = (sx >= 0) & (sx <= pw - 1) & (sy >= 0) & (sy <= ph - 1)
        warped = sample_grid(patch.astype(np.float64), sx, sy)
        region = out[y0:y1 + 1, x0:x1 + 1]
        region[inside] = np.clip(warped[inside], 0.0, 1.0).astype(np.float32)
    return Image(out)
