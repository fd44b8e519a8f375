"""Try-on warp: estimate a perspective transform from sparse keypoint
correspondences and warp a canonical-view garment onto the body.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateConfiguration,
    InsufficientPoints,
    InvalidCoordinate,
    ShapeMismatch,
    SingularTransform,
)
from .imaging import Image, KeypointSet, Mask, sample_grid

DEFAULT_CONFIDENCE_FLOOR = 0.3

# Relative eigenvalue floor below which the design matrix counts as rank-deficient.
_RANK_TOL = 1e-9
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 64


def _inv3(m: np.ndarray) -> np.ndarray:
    """Adjugate inverse of a 3x3 matrix; raises on (near-)zero determinant."""
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    cof = np.array(
        [
            [e * i - f * h, c * h - b * i, b * f - c * e],
            [f * g - d * i, a * i - c * g, c * d - a * f],
            [d * h - e * g, b * g - a * h, a * e - b * d],
        ],
        dtype=np.float64,
    )
    det = a * cof[0, 0] + b * cof[1, 0] + c * cof[2, 0]
    scale = np.abs(m).max()
    if scale == 0 or abs(det) < 1e-12 * scale**3:
        raise SingularTransform("matrix is singular")
    return cof / det


@dataclass
class Homography:
    """3x3 projective transform, normalized so H[2,2] = 1 when that entry is
    nonzero, otherwise to unit Frobenius norm. Must be invertible."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ShapeMismatch(f"homography must be 3x3, got {m.shape}")
        if not np.isfinite(m).all():
            raise InvalidCoordinate("homography entries must be finite")
        if abs(m[2, 2]) > 1e-12 * max(np.abs(m).max(), 1.0):
            m = m / m[2, 2]
        else:
            m = m / np.linalg.norm(m)
        self._inverse = _inv3(m)  # also proves rank 3
        self.matrix = m

    def inverse(self) -> "Homography":
        return Homography(self._inverse)

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Map (N, 2) points through the transform."""
        pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        ones = np.ones((pts.shape[0], 1))
        q = np.hstack([pts, ones]) @ self.matrix.T
        return q[:, :2] / q[:, 2:3]


def jacobi_eigh(sym: np.ndarray, tol: float = _JACOBI_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-columns). Iterates until the
    off-diagonal Frobenius norm drops below ``tol`` (relative to the matrix norm).
    """
    a = np.array(sym, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = max(np.linalg.norm(a), 1.0)
    for _ in range(_JACOBI_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.square(a - np.diag(np.diag(a)))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) <= 1e-36:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def _normalize_points(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hartley normalization: translate to zero mean, scale to RMS distance sqrt(2)."""
    mean = pts.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((pts - mean) ** 2, axis=1)))
    if rms < 1e-12:
        raise DegenerateConfiguration("point set is a single location")
    s = np.sqrt(2.0) / rms
    t = np.array(
        [[s, 0.0, -s * mean[0]], [0.0, s, -s * mean[1]], [0.0, 0.0, 1.0]], dtype=np.float64
    )
    normed = (pts - mean) * s
    return normed, t


def estimate_homography(src_pts, dst_pts) -> Homography:
    """Algebraic least-squares homography via the normalized direct linear transform.

    Both point sets are Hartley-normalized, the 2Nx9 design matrix is assembled,
    and the unit vector minimizing |A h| is taken as the eigenvector of the
    smallest eigenvalue of A^T A, then denormalized.
    """
    src = np.asarray(src_pts, dtype=np.float64).reshape(-1, 2)
    dst = np.asarray(dst_pts, dtype=np.float64).reshape(-1, 2)
    if src.shape[0] != dst.shape[0]:
        raise ShapeMismatch("source and destination point counts differ")
    if src.shape[0] < 4:
        raise InsufficientPoints(f"need at least 4 correspondences, got {src.shape[0]}")
    if not (np.isfinite(src).all() and np.isfinite(dst).all()):
        raise InvalidCoordinate("correspondences must be finite")

    src_n, t_src = _normalize_points(src)
    dst_n, t_dst = _normalize_points(dst)

    n = src.shape[0]
    a = np.zeros((2 * n, 9), dtype=np.float64)
    for i in range(n):
        x, y = src_n[i]
        xp, yp = dst_n[i]
        a[2 * i] = [-x, -y, -1.0, 0.0, 0.0, 0.0, xp * x, xp * y, xp]
        a[2 * i + 1] = [0.0, 0.0, 0.0, -x, -y, -1.0, yp * x, yp * y, yp]

    evals, evecs = jacobi_eigh(a.T @ a)
    order = np.argsort(evals)
    # Rank of A equals the count of nonzero eigenvalues of A^T A; a homography
    # needs rank 8, so the second-smallest eigenvalue must be clearly nonzero.
    largest = max(evals[order[-1]], 0.0)
    if largest <= 0 or evals[order[1]] < _RANK_TOL * largest:
        raise DegenerateConfiguration("design matrix rank < 8 (collinear or repeated points)")
    h = evecs[:, order[0]].reshape(3, 3)
    return Homography(_inv3(t_dst) @ h @ t_src)


def warp_perspective(
    img: Image, alpha: Mask, h: Homography, out_w: int, out_h: int
) -> tuple[Image, Mask]:
    """Inverse-mapping perspective warp.

    Every output pixel samples the input at H^-1 p (bilinear, clamp-to-edge);
    it is visible iff that preimage lands inside the image bounds and the
    interpolated alpha is at least 0.5. Invisible pixels are zero.
    """
    if (img.height, img.width) != (alpha.height, alpha.width):
        raise ShapeMismatch("image and alpha mask extents differ")
    hinv = h.inverse().matrix
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64), np.arange(out_h, dtype=np.float64))
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    ok = np.abs(denom) > 1e-12
    safe = np.where(ok, denom, 1.0)
    qx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / safe
    qy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / safe

    inb = ok & (qx >= 0.0) & (qx <= img.width - 1.0) & (qy >= 0.0) & (qy <= img.height - 1.0)
    alpha_val = sample_grid(alpha.data.astype(np.float64)[..., None], qx, qy)[..., 0]
    vis = inb & (alpha_val >= 0.5)

    tex = sample_grid(img.data.astype(np.float64), qx, qy)
    tex[~vis] = 0.0
    return Image(np.clip(tex, 0.0, 1.0).astype(np.float32)), Mask(vis.astype(np.uint8))


def match_landmarks(
    a: KeypointSet, b: KeypointSet, confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Pair keypoints by name where both sides clear the confidence floor."""
    names = [
        k.name
        for k in a.keypoints
        if k.score >= confidence_floor
        and (other := b.get(k.name)) is not None
        and other.score >= confidence_floor
    ]
    src = np.asarray([[a.get(n).x, a.get(n).y] for n in names], dtype=np.float64).reshape(-1, 2)
    dst = np.asarray([[b.get(n).x, b.get(n).y] for n in names], dtype=np.float64).reshape(-1, 2)
    return src, dst, names


def warp_garment(
    garment: Image,
    garment_mask: Mask,
    garment_landmarks: KeypointSet,
    body_kps: KeypointSet,
    out_w: int,
    out_h: int,
    confidence_floor: float = DEFAULT_CONFIDENCE_FLOOR,
) -> tuple[Image, Mask]:
    """Perspective-warp a canonical-view garment onto the body.

    Landmarks are matched by name; at least four confident matches are required
    to estimate the garment-to-body homography.
    """
    src, dst, names = match_landmarks(garment_landmarks, body_kps, confidence_floor)
    if len(names) < 4:
        raise InsufficientPoints(f"only {len(names)} usable landmark matches, need 4")
    h = estimate_homography(src, dst)
    return warp_perspective(garment, garment_mask, h, out_w, out_h)
