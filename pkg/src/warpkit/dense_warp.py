"""Reposing warp: scatter source pixels into a per-part UV atlas, then gather
them back under a target pose, producing a pose-warped texture and the binary
visibility mask of pixels that survived the repose.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .imaging import DENSEPOSE_PARTS, DensePoseMap, Image, Mask

# Texels filled by hole inference get a sub-unit weight so they stay
# distinguishable from texels that received real source pixels.
HOLE_WEIGHT = 0.25
DEFAULT_ATLAS_RES = 128
DEFAULT_HOLE_FILL_ITERS = 2
DEFAULT_VIS_THRESHOLD = 0.5


@dataclass
class UVAtlas:
    """Per-part canonical texture grids.

    colors:  (P, R, R, C) weighted-mean colors, valid wherever weight > 0.
    weights: (P, R, R) fill weights; 0 means the texel is empty.
    """

    colors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if (
            self.colors.ndim != 4
            or self.weights.ndim != 3
            or self.colors.shape[:3] != self.weights.shape
            or self.colors.shape[1] != self.colors.shape[2]
        ):
            raise ShapeMismatch("atlas arrays must be (P, R, R, C) and (P, R, R)")

    @property
    def part_count(self) -> int:
        return self.colors.shape[0]

    @property
    def resolution(self) -> int:
        return self.colors.shape[1]


def build_uv_atlas(src: Image, src_pose: DensePoseMap, atlas_res: int = DEFAULT_ATLAS_RES) -> UVAtlas:
    """Scatter every foreground source pixel into its part grid.

    Texel (round(v*(R-1)), round(u*(R-1))) accumulates the pixel color; colliding
    contributions are averaged, which keeps the result independent of scan order.
    """
    if (src.height, src.width) != (src_pose.height, src_pose.width):
        raise ShapeMismatch(
            f"source {src.height}x{src.width} and pose {src_pose.height}x{src_pose.width} differ"
        )
    if atlas_res < 2:
        raise ValueError("atlas resolution must be at least 2")

    r = atlas_res
    channels = src.channels
    color_sum = np.zeros((DENSEPOSE_PARTS * r * r, channels), dtype=np.float64)
    weight = np.zeros(DENSEPOSE_PARTS * r * r, dtype=np.float64)

    fg = src_pose.parts > 0
    if fg.any():
        part = src_pose.parts[fg].astype(np.intp) - 1
        col = np.rint(src_pose.u[fg].astype(np.float64) * (r - 1)).astype(np.intp)
        row = np.rint(src_pose.v[fg].astype(np.float64) * (r - 1)).astype(np.intp)
        flat = (part * r + row) * r + col
        np.add.at(color_sum, flat, src.data[fg].astype(np.float64))
        np.add.at(weight, flat, 1.0)

    colors = np.zeros_like(color_sum)
    filled = weight > 0
    colors[filled] = color_sum[filled] / weight[filled, None]
    return UVAtlas(
        colors=colors.reshape(DENSEPOSE_PARTS, r, r, channels).astype(np.float32),
        weights=weight.reshape(DENSEPOSE_PARTS, r, r).astype(np.float32),
    )


def _neighbor_sums(filled: np.ndarray, colors: np.ndarray):
    """Sum of filled 8-neighbors (count and color), within each part grid."""
    p, r, _, c = colors.shape
    count = np.zeros((p, r, r), dtype=np.float64)
    csum = np.zeros((p, r, r, c), dtype=np.float64)
    fcol = np.where(filled[..., None], colors, 0.0).astype(np.float64)
    f = filled.astype(np.float64)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            ys = slice(max(dy, 0), r + min(dy, 0))
            yd = slice(max(-dy, 0), r + min(-dy, 0))
            xs = slice(max(dx, 0), r + min(dx, 0))
            xd = slice(max(-dx, 0), r + min(-dx, 0))
            count[:, yd, xd] += f[:, ys, xs]
            csum[:, yd, xd] += fcol[:, ys, xs]
    return count, csum


def fill_atlas_holes(atlas: UVAtlas, iterations: int = DEFAULT_HOLE_FILL_ITERS) -> UVAtlas:
    """Grow filled regions: each pass fills empty texels that touch at least one
    filled 8-neighbor with the mean of those neighbors. Originally filled texels
    never change; inferred texels carry HOLE_WEIGHT.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    colors = atlas.colors.astype(np.float32).copy()
    weights = atlas.weights.astype(np.float32).copy()
    for _ in range(iterations):
        filled = weights > 0
        count, csum = _neighbor_sums(filled, colors)
        grow = (~filled) & (count > 0)
        if not grow.any():
            break
        colors[grow] = (csum[grow] / count[grow, None]).astype(np.float32)
        weights[grow] = HOLE_WEIGHT
    return UVAtlas(colors=colors, weights=weights)


def warp_dense(
    atlas: UVAtlas,
    tgt_pose: DensePoseMap,
    vis_threshold: float = DEFAULT_VIS_THRESHOLD,
) -> tuple[Image, Mask]:
    """Gather atlas texels under the target pose.

    Each foreground target pixel bilinearly samples its part grid at
    (u*(R-1), v*(R-1)); interpolation coefficients are multiplied by fill
    weights so empty texels contribute nothing. A pixel is visible iff the
    interpolated fill weight reaches the visibility threshold; invisible and
    background pixels come out zero.
    """
    if atlas.part_count != DENSEPOSE_PARTS:
        raise ShapeMismatch(f"atlas must hold {DENSEPOSE_PARTS} parts, got {atlas.part_count}")
    h, w = tgt_pose.height, tgt_pose.width
    channels = atlas.colors.shape[3]
    tex = np.zeros((h, w, channels), dtype=np.float32)
    vis = np.zeros((h, w), dtype=np.uint8)

    fg = tgt_pose.parts > 0
    if not fg.any():
        return Image(tex), Mask(vis)

    r = atlas.resolution
    part = tgt_pose.parts[fg].astype(np.intp) - 1
    x = tgt_pose.u[fg].astype(np.float64) * (r - 1)
    y = tgt_pose.v[fg].astype(np.float64) * (r - 1)
    x0 = np.clip(np.floor(x).astype(np.intp), 0, r - 2)
    y0 = np.clip(np.floor(y).astype(np.intp), 0, r - 2)
    fx = x - x0
    fy = y - y0

    colors = atlas.colors.astype(np.float64)
    weights = atlas.weights.astype(np.float64)
    num = np.zeros((part.size, channels), dtype=np.float64)
    den = np.zeros(part.size, dtype=np.float64)
    for dy, wy in ((0, 1.0 - fy), (1, fy)):
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            coeff = wx * wy * weights[part, y0 + dy, x0 + dx]
            num += coeff[:, None] * colors[part, y0 + dy, x0 + dx]
            den += coeff

    visible = den >= vis_threshold
    values = np.zeros_like(num)
    values[visible] = num[visible] / den[visible, None]

    tex[fg] = np.clip(values, 0.0, 1.0).astype(np.float32)
    vis[fg] = visible.astype(np.uint8)
    return Image(tex), Mask(vis)
