"""Worst-case reconstruction oracle: what a curious coordinator can recover
when a participant's projection matrix leaks.

Two estimators live here:

* ``min_norm_estimate`` — the exact least-squares minimum-norm solution via
  the Moore-Penrose pseudoinverse. For a consistent system A x = y it is the
  x-hat of least L2 norm, and recovers x exactly when k = d and R is
  invertible.
* ``correlation_estimate`` — x-hat = (1/k) R^T R x (equivalently
  sqrt(k) R^T y for scaled keys). Over the ensemble of Gaussian keys it is an
  unbiased estimate of x with per-element variance
  (2/k) x_i^2 + (1/k) sum_{j != i} x_j^2, which is the privacy metric
  reported by ``predicted_variance``. The pseudoinverse estimator is biased
  toward zero by k/d and its ensemble variance is smaller, so the variance
  accounting is defined in terms of the correlation estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError
from .projection import SV_CUTOFF, ProjectionKey

_KEY_BATCH = 256  # keys drawn per vectorized Monte Carlo block


@dataclass(frozen=True)
class ReconstructionReport:
    estimate: np.ndarray
    per_element_variance: np.ndarray
    mean_variance: float
    l2_error: float | None = None


def min_norm_estimate(key: ProjectionKey, y: np.ndarray) -> np.ndarray:
    """Least-squares minimum-norm solution of (effective matrix) x = y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != key.k:
        raise InvalidDimensionError(f"y length {y.shape[-1]} != k {key.k}")
    a_pinv = np.linalg.pinv(key.effective_matrix, rcond=SV_CUTOFF)
    return y @ a_pinv.T


def correlation_estimate(key: ProjectionKey, y: np.ndarray) -> np.ndarray:
    """Ensemble-unbiased reconstruction (1/k) R^T R x from y.

    For scaled keys y = R x / sqrt(k), so x-hat = R^T y / sqrt(k); for
    unscaled keys x-hat = R^T y / k.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != key.k:
        raise InvalidDimensionError(f"y length {y.shape[-1]} != k {key.k}")
    scale = np.sqrt(key.k) if key.scaled else key.k
    return (y @ key.matrix) / scale


def predicted_variance(x: np.ndarray, k: int) -> np.ndarray:
    """Per-element reconstruction error variance: (1/k)(||x||^2 + x_i^2)."""
    if k < 1:
        raise InvalidDimensionError("k must be positive")
    x = np.asarray(x, dtype=np.float64)
    return (np.sum(x**2) + x**2) / k


def empirical_reconstruction_variance(
    x: np.ndarray, k: int, trials: int, seed: int
) -> np.ndarray:
    """Per-element sample variance of the correlation estimate over fresh keys."""
    if trials < 1000:
        raise ValueError("use at least 10^3 trials for a stable variance")
    x = np.asarray(x, dtype=np.float64)
    d = x.size
    rng = np.random.Generator(np.random.PCG64(seed))
    count = 0
    mean = np.zeros(d)
    m2 = np.zeros(d)
    while count < trials:
        b = min(_KEY_BATCH, trials - count)
        r = rng.standard_normal((b, k, d))
        # (1/k) R^T R x per key, batched
        rx = np.einsum("bkd,d->bk", r, x)
        est = np.einsum("bkd,bk->bd", r, rx) / k
        # Chan et al. pairwise merge keeps the reduction order fixed.
        b_mean = est.mean(axis=0)
        b_m2 = ((est - b_mean) ** 2).sum(axis=0)
        delta = b_mean - mean
        total = count + b
        mean = mean + delta * b / total
        m2 = m2 + b_m2 + delta**2 * count * b / total
        count = total
    return m2 / (count - 1)


def reconstruction_report(
    key: ProjectionKey, y: np.ndarray, ground_truth: np.ndarray | None = None
) -> ReconstructionReport:
    """Bundle the min-norm estimate with the Property-style variance metric."""
    estimate = min_norm_estimate(key, y)
    if ground_truth is not None:
        x = np.asarray(ground_truth, dtype=np.float64)
        per_elem = predicted_variance(x, key.k)
        l2 = float(np.linalg.norm(estimate - x))
    else:
        per_elem = predicted_variance(estimate, key.k)
        l2 = None
    return ReconstructionReport(
        estimate=estimate,
        per_element_variance=per_elem,
        mean_variance=float(per_elem.mean()),
        l2_error=l2,
    )
