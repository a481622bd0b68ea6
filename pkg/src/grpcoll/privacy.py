"""Additive Laplace noisification: the epsilon-DP baseline obfuscation.

The Laplace density used is f(x|lam) = (1/2 lam) exp(-|x|/lam); samples are
drawn by inverse CDF, x = -lam * sign(u) * ln(1 - 2|u|) with u uniform on
(-1/2, 1/2). Noise is freshly sampled for every vector, never reused.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array

from .errors import InvalidBoundsError, InvalidScaleError


@dataclass(frozen=True)
class NoiseBudget:
    """Privacy loss epsilon and L1 global sensitivity; scale = S/epsilon."""

    epsilon: float
    sensitivity: float
    scale: float = field(init=False)

    def __post_init__(self):
        if self.epsilon <= 0:
            raise InvalidScaleError("epsilon must be positive")
        if self.sensitivity <= 0:
            raise InvalidScaleError("sensitivity must be positive")
        object.__setattr__(self, "scale", self.sensitivity / self.epsilon)

    @classmethod
    def from_scale(cls, scale: float) -> "NoiseBudget":
        """Budget parameterized by the noise scale directly (sensitivity 1)."""
        if scale <= 0:
            raise InvalidScaleError("scale must be positive")
        return cls(epsilon=1.0 / scale, sensitivity=1.0)


def laplace_sample(scale: float, rng: np.random.Generator, size=None):
    """Zero-mean Laplace draw(s) with the given scale, by inverse CDF."""
    if scale <= 0:
        raise InvalidScaleError(f"scale must be positive, got {scale}")
    u = rng.random(size) - 0.5
    # u = -1/2 occurs with probability 2^-53; nudge it off the pole.
    u = np.where(u == -0.5, np.nextafter(-0.5, 0.0), u)
    x = -scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(x) if size is None else x


def identity_query_sensitivity(lower: np.ndarray, upper: np.ndarray) -> float:
    """L1 diameter of the data domain: the sensitivity of releasing x itself."""
    lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
    upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
    if lower.size == 0 or lower.shape != upper.shape:
        raise InvalidBoundsError("bounds must be nonempty and of equal length")
    if np.any(upper < lower):
        raise InvalidBoundsError("upper bound below lower bound")
    s = float(np.sum(upper - lower))
    if s <= 0:
        raise InvalidBoundsError("domain has zero L1 diameter")
    return s


def noisify(x: np.ndarray, budget: NoiseBudget, rng: np.random.Generator) -> np.ndarray:
    """x + fresh elementwise Laplace(budget.scale) noise."""
    x = np.asarray(x, dtype=np.float64)
    return x + laplace_sample(budget.scale, rng, size=x.shape)


def noisify_dataset(ds, budget: NoiseBudget, rng: np.random.Generator):
    """Fresh noise per sample; labels and shape preserved."""
    from .datasets import Dataset

    vectors = noisify(ds.vectors, budget, rng)
    lo = vectors.min(axis=0) if len(ds) else np.zeros(ds.dimension)
    hi = vectors.max(axis=0) if len(ds) else np.zeros(ds.dimension)
    return Dataset(
        vectors=vectors,
        labels=ds.labels.copy(),
        class_count=ds.class_count,
        domain_bounds=np.stack([lo, hi]),
        provenance=ds.provenance + f"|laplace(scale={budget.scale:g})",
    )


class LaplaceNoiser(BaseEstimator, TransformerMixin):
    """sklearn-style transformer adding Laplace noise for epsilon-DP.

    Sensitivity defaults to the L1 diameter of the fitted data's
    per-feature [min, max] box; pass ``sensitivity`` to override.
    """

    def __init__(self, epsilon=1.0, sensitivity=None, seed=0):
        self.epsilon = epsilon
        self.sensitivity = sensitivity
        self.seed = seed

    def fit(self, X, y=None):
        X = check_array(X)
        s = self.sensitivity
        if s is None:
            s = identity_query_sensitivity(X.min(axis=0), X.max(axis=0))
        self.budget_ = NoiseBudget(epsilon=self.epsilon, sensitivity=s)
        self.rng_ = np.random.Generator(np.random.PCG64(self.seed))
        return self

    def transform(self, X):
        X = check_array(X)
        return noisify(X, self.budget_, self.rng_)
