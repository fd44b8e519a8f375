"""Reference cross-attention operator and the training losses that localize
attention mass inside designated spatial masks, with analytic gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidWeight, ShapeMismatch

DEFAULT_LAMBDA1 = 1e-3
DEFAULT_LAMBDA2 = 2.5e-4


def cross_attention(
    q: np.ndarray, k: np.ndarray, v: np.ndarray, scale: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Row-softmax attention: output = softmax(scale * Q K^T) V.

    ``scale=None`` uses 1/sqrt(d); pass 1.0 for the unscaled product. Returns
    (output n x c, attention map n x m).
    """
    q = np.asarray(q, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ShapeMismatch("Q, K, V must be 2-D matrices")
    if q.shape[1] != k.shape[1]:
        raise ShapeMismatch(f"Q cols {q.shape[1]} != K cols {k.shape[1]}")
    if k.shape[0] != v.shape[0]:
        raise ShapeMismatch(f"K rows {k.shape[0]} != V rows {v.shape[0]}")
    if scale is None:
        scale = 1.0 / np.sqrt(q.shape[1])
    if not scale > 0:
        raise InvalidWeight(f"scale must be positive, got {scale}")

    logits = scale * (q @ k.T)
    logits -= logits.max(axis=1, keepdims=True)
    expl = np.exp(logits)
    # Reduce in value order: row sums and the A.V contraction then give
    # bit-identical results under any simultaneous permutation of K and V.
    attn = expl / np.sort(expl, axis=1).sum(axis=1, keepdims=True)
    out = np.sort(attn[:, :, None] * v[None, :, :], axis=1).sum(axis=1)
    return out, attn


def _region_means_setup(a: np.ndarray, m: np.ndarray):
    a = np.asarray(a, dtype=np.float64)
    mask = np.asarray(m.data if hasattr(m, "data") else m)
    if a.shape != mask.shape:
        raise ShapeMismatch(f"attention {a.shape} and mask {mask.shape} extents differ")
    if mask.size and not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must be binary")
    if a.size and a.min() < 0:
        raise ValueError("attention entries must be non-negative")
    inside = mask == 1
    return a, inside


def localization_loss(a, m, region_normalized: bool = True) -> float:
    """Attention-localization penalty: mass outside the mask minus mass inside.

    With region normalization each mean is taken over its own region's cells
    (empty regions contribute 0); otherwise both means run over all cells.
    """
    a, inside = _region_means_setup(a, m)
    n_in = int(inside.sum())
    n_out = a.size - n_in
    if region_normalized:
        mean_in = a[inside].sum() / n_in if n_in else 0.0
        mean_out = a[~inside].sum() / n_out if n_out else 0.0
    else:
        total = a.size
        mean_in = a[inside].sum() / total if total else 0.0
        mean_out = a[~inside].sum() / total if total else 0.0
    return float(mean_out - mean_in)


def localization_loss_grad(a, m, region_normalized: bool = True) -> np.ndarray:
    """Analytic gradient of localization_loss; the loss is affine in A, so the
    gradient depends only on the mask geometry."""
    a, inside = _region_means_setup(a, m)
    n_in = int(inside.sum())
    n_out = a.size - n_in
    grad = np.zeros(a.shape, dtype=np.float64)
    if region_normalized:
        if n_out:
            grad[~inside] = 1.0 / n_out
        if n_in:
            grad[inside] = -1.0 / n_in
    else:
        if a.size:
            grad[~inside] = 1.0 / a.size
            grad[inside] = -1.0 / a.size
    return grad


def noise_mse(eps: np.ndarray, eps_hat: np.ndarray) -> float:
    """Mean squared difference between ground-truth and predicted noise."""
    eps = np.asarray(eps, dtype=np.float64)
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if eps.shape != eps_hat.shape:
        raise ShapeMismatch(f"noise shapes differ: {eps.shape} vs {eps_hat.shape}")
    return float(np.mean((eps - eps_hat) ** 2))


@dataclass
class LossBreakdown:
    l_sd: float
    l_b: float
    l_e: float
    total: float
    lambda1: float
    lambda2: float

    def to_dict(self) -> dict:
        return {
            "l_sd": self.l_sd,
            "l_b": self.l_b,
            "l_e": self.l_e,
            "total": self.total,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
        }


def total_loss(
    l_sd: float,
    l_b: float,
    l_e: float,
    lambda1: float = DEFAULT_LAMBDA1,
    lambda2: float = DEFAULT_LAMBDA2,
) -> LossBreakdown:
    """Combine the denoising and localization terms: l_sd + λ1 l_b + λ2 l_e."""
    if lambda1 < 0 or lambda2 < 0:
        raise InvalidWeight("loss weights must be non-negative")
    total = l_sd + lambda1 * l_b + lambda2 * l_e
    return LossBreakdown(
        l_sd=float(l_sd), l_b=float(l_b), l_e=float(l_e),
        total=float(total), lambda1=float(lambda1), lambda2=float(lambda2),
    )
