"""Synthetic fixture generators shared by the test modules.

Identity fixtures tile the image with per-part rectangles whose UV ramps hit
atlas texels at integer steps, so a build/warp cycle with the same pose must
reproduce the source exactly up to float roundoff. Round-trip fixtures use
plain fractional ramps to exercise genuine resampling.
"""

from __future__ import annotations

import numpy as np

from warpkit.imaging import DensePoseMap, Image, Keypoint, KeypointSet


def integer_ramp_pose(size: int, tile: int, parts: list[int], atlas_res: int = 128) -> DensePoseMap:
    """Tile a size x size field with tile x tile parts; UV steps land on texels."""
    n = size // tile
    assert len(parts) >= n * n
    step = (atlas_res - 1) // (tile - 1)
    assert step >= 1, "tile too large for the atlas resolution"
    part_map = np.zeros((size, size), dtype=np.uint8)
    u = np.zeros((size, size), dtype=np.float32)
    v = np.zeros((size, size), dtype=np.float32)
    local = np.arange(tile, dtype=np.float64) * step / (atlas_res - 1)
    lu, lv = np.meshgrid(local, local)  # lu varies along x, lv along y
    for idx in range(n * n):
        ty, tx = divmod(idx, n)
        ys = slice(ty * tile, (ty + 1) * tile)
        xs = slice(tx * tile, (tx + 1) * tile)
        part_map[ys, xs] = parts[idx]
        u[ys, xs] = lu.astype(np.float32)
        v[ys, xs] = lv.astype(np.float32)
    return DensePoseMap(parts=part_map, u=u, v=v)


def rect_ramp_pose(size: int, rects: list[tuple[int, int, int, int, int]]) -> DensePoseMap:
    """Pose from (part, x0, y0, w, h) rectangles with full [0, 1] UV ramps."""
    part_map = np.zeros((size, size), dtype=np.uint8)
    u = np.zeros((size, size), dtype=np.float32)
    v = np.zeros((size, size), dtype=np.float32)
    for part, x0, y0, w, h in rects:
        assert w >= 2 and h >= 2
        ys = slice(y0, y0 + h)
        xs = slice(x0, x0 + w)
        part_map[ys, xs] = part
        ramp_u = (np.arange(w, dtype=np.float64) / (w - 1)).astype(np.float32)
        ramp_v = (np.arange(h, dtype=np.float64) / (h - 1)).astype(np.float32)
        u[ys, xs] = np.tile(ramp_u, (h, 1))
        v[ys, xs] = np.tile(ramp_v[:, None], (1, w))
    return DensePoseMap(parts=part_map, u=u, v=v)


def random_identity_fixture(
    rng: np.random.Generator, size: int = 256, atlas_res: int = 128
) -> tuple[Image, DensePoseMap]:
    """Random image plus a pose whose identity warp is exact at atlas_res."""
    tile = int(rng.choice([size // 4, size // 2]))
    n = size // tile
    parts = list(rng.permutation(24)[: n * n] + 1)
    pose = integer_ramp_pose(size, tile, parts, atlas_res)
    # Quantize colors to the 8-bit lattice so file round-trips stay exact too.
    img = Image(np.rint(rng.random((size, size, 3)) * 255.0).astype(np.float32) / 255.0)
    return img, pose


def smooth_image(rng: np.random.Generator, size: int, base: int = 16) -> Image:
    """Low-frequency random image: bilinear-upsampled coarse noise."""
    coarse = rng.random((base, base, 3))
    ys = np.linspace(0, base - 1, size)
    xs = np.linspace(0, base - 1, size)
    y0 = np.clip(np.floor(ys).astype(int), 0, base - 2)
    x0 = np.clip(np.floor(xs).astype(int), 0, base - 2)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = coarse[y0][:, x0] * (1 - fx) + coarse[y0][:, x0 + 1] * fx
    bot = coarse[y0 + 1][:, x0] * (1 - fx) + coarse[y0 + 1][:, x0 + 1] * fx
    return Image((top * (1 - fy) + bot * fy).astype(np.float32))


def roundtrip_pose_pair(
    rng: np.random.Generator, size: int = 256, n_parts: int = 9
) -> tuple[DensePoseMap, DensePoseMap]:
    """Two poses sharing parts but with resized, repositioned rectangles.

    The first pose keeps rectangles near the slot size so its atlas has few
    holes; the second varies more to force genuine resampling.
    """
    slots = size // 4  # 4x4 slot grid
    parts = list(rng.permutation(24)[:n_parts] + 1)

    def build(sizes_lo: int, sizes_hi: int) -> DensePoseMap:
        order = rng.permutation(16)[:n_parts]
        rects = []
        for part, slot in zip(parts, order):
            sy, sx = divmod(int(slot), 4)
            w = int(rng.integers(sizes_lo, sizes_hi + 1))
            h = int(rng.integers(sizes_lo, sizes_hi + 1))
            x0 = sx * slots + int(rng.integers(0, slots - w + 1))
            y0 = sy * slots + int(rng.integers(0, slots - h + 1))
            rects.append((part, x0, y0, w, h))
        return rect_ramp_pose(size, rects)

    return build(max(2, 7 * slots // 8), slots), build(max(2, 5 * slots // 8), slots)


def mask_pose(pose: DensePoseMap, vis) -> DensePoseMap:
    """Restrict a pose to its visible pixels (mask is authoritative downstream)."""
    return DensePoseMap(parts=pose.parts * vis.data, u=pose.u, v=pose.v)


def torso_keypoints(offset_x: float = 0.0, offset_y: float = 0.0, scale: float = 1.0) -> KeypointSet:
    """A simple 18-joint standing figure, optionally translated and scaled."""
    base = {
        "nose": (128, 40), "neck": (128, 64),
        "right_shoulder": (100, 66), "right_elbow": (88, 110), "right_wrist": (82, 150),
        "left_shoulder": (156, 66), "left_elbow": (168, 110), "left_wrist": (174, 150),
        "right_hip": (108, 140), "right_knee": (106, 190), "right_ankle": (104, 238),
        "left_hip": (148, 140), "left_knee": (150, 190), "left_ankle": (152, 238),
        "right_eye": (120, 34), "left_eye": (136, 34),
        "right_ear": (112, 38), "left_ear": (144, 38),
    }
    return KeypointSet(
        [
            Keypoint(name, x * scale + offset_x, y * scale + offset_y, 0.9)
            for name, (x, y) in base.items()
        ]
    )
