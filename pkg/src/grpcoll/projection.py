"""Gaussian random projection keys and condition-number-controlled matrices.

A participant's key is a private k x d matrix with i.i.d. standard-normal
entries. Projection optionally applies the 1/sqrt(k) factor that makes dot
products and squared distances between projected vectors unbiased estimates
of the originals.

Reproducibility: matrices are drawn from ``numpy.random.Generator`` backed by
PCG64 and numpy's ziggurat ``standard_normal``. The same (k, d, seed) always
yields a bitwise-identical matrix.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import (
    DegenerateMatrixError,
    FramingError,
    InvalidDimensionError,
    UnachievableConditionError,
)

# Relative singular-value cutoff for numerical rank / pseudoinverse.
SV_CUTOFF = 1e-12

_BLOB_MAGIC = b"GRPM"
_BLOB_VERSION = 1
_BLOB_HEADER = struct.Struct("<4sHHII")  # magic, version, k, d, reserved


@dataclass(frozen=True)
class ProjectionKey:
    """A participant's private projection matrix plus its metadata."""

    matrix: np.ndarray
    k: int
    d: int
    seed: int
    scaled: bool = True

    def __post_init__(self):
        if self.k < 1 or self.k > self.d:
            raise InvalidDimensionError(f"need 1 <= k <= d, got k={self.k}, d={self.d}")
        if self.matrix.shape != (self.k, self.d):
            raise InvalidDimensionError(
                f"matrix shape {self.matrix.shape} != ({self.k}, {self.d})"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise InvalidDimensionError("matrix entries must be finite")
        self.matrix.setflags(write=False)

    @property
    def effective_matrix(self) -> np.ndarray:
        """The matrix actually applied to data: R/sqrt(k) if scaled, else R."""
        if self.scaled:
            return self.matrix / math.sqrt(self.k)
        return self.matrix


@dataclass(frozen=True)
class ConditionReport:
    frobenius_norm: float
    pseudoinverse_frobenius_norm: float
    condition_number: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "condition_number",
            self.frobenius_norm * self.pseudoinverse_frobenius_norm,
        )


def generate_projection(k: int, d: int, seed: int, scaled: bool = True) -> ProjectionKey:
    """Draw a k x d matrix of i.i.d. N(0,1) entries from a PCG64 stream."""
    if k < 1 or k > d:
        raise InvalidDimensionError(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = np.random.Generator(np.random.PCG64(seed))
    matrix = rng.standard_normal((k, d))
    return ProjectionKey(matrix=matrix, k=k, d=d, seed=seed, scaled=scaled)


def project(key: ProjectionKey, x: np.ndarray) -> np.ndarray:
    """Project one d-vector (or an n x d batch) to k dimensions."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != key.d:
        raise InvalidDimensionError(
            f"vector dimension {x.shape[-1]} != key dimension {key.d}"
        )
    y = x @ key.matrix.T
    if key.scaled:
        y = y / math.sqrt(key.k)
    return y


def project_dataset(key: ProjectionKey, ds):
    """Project every vector of a dataset; labels are preserved in order."""
    from .datasets import Dataset  # local import to keep module deps one-way

    if ds.dimension != key.d and len(ds) > 0:
        raise InvalidDimensionError(
            f"dataset dimension {ds.dimension} != key dimension {key.d}"
        )
    if len(ds) == 0:
        vectors = np.empty((0, key.k), dtype=np.float64)
    else:
        vectors = project(key, ds.vectors)
    lo = vectors.min(axis=0) if len(ds) else np.zeros(key.k)
    hi = vectors.max(axis=0) if len(ds) else np.zeros(key.k)
    return Dataset(
        vectors=vectors,
        labels=ds.labels.copy(),
        class_count=ds.class_count,
        domain_bounds=np.stack([lo, hi]),
        provenance=f"{ds.provenance}|projected(k={key.k},seed={key.seed})",
    )


def compression_ratio(key: ProjectionKey) -> float:
    """d/k: factor by which projection shrinks the data dimension."""
    return key.d / key.k


def condition_number(M: np.ndarray) -> ConditionReport:
    """Frobenius condition number ||M||_F * ||M+||_F via SVD.

    Singular values below SV_CUTOFF * sigma_max are treated as zero when
    forming the pseudoinverse.
    """
    M = np.asarray(M, dtype=np.float64)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise DegenerateMatrixError("all-zero matrix has no condition number")
    keep = s > SV_CUTOFF * s[0]
    s = s[keep]
    fro = float(np.sqrt(np.sum(s**2)))
    pinv_fro = float(np.sqrt(np.sum(s**-2)))
    return ConditionReport(frobenius_norm=fro, pseudoinverse_frobenius_norm=pinv_fro)


def _kappa_of_ratio(r: float, d: int) -> float:
    """Frobenius condition number of diag(r^0, r^1, ..., r^(d-1))."""
    i = np.arange(d, dtype=np.float64)
    s2 = r ** (2 * i)
    return math.sqrt(np.sum(s2)) * math.sqrt(np.sum(1.0 / s2))


def generate_conditioned_matrix(d: int, target_condition: float, seed: int) -> np.ndarray:
    """Random d x d matrix with Frobenius condition number ~= target.

    Built as U diag(s) V^T with U, V random orthogonal (QR of Gaussian draws)
    and a geometric spectrum s_i = r^(i-1); r is found by bisection so the
    Frobenius condition number hits the target.
    """
    if d < 1:
        raise InvalidDimensionError("d must be positive")
    if target_condition < d:
        raise UnachievableConditionError(
            f"minimum Frobenius condition number for a full-rank {d}x{d} "
            f"matrix is {d}; requested {target_condition}"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    if d == 1:
        return np.array([[rng.standard_normal()]])

    # kappa(r) decreases monotonically from +inf (r -> 0) to d (r = 1).
    lo, hi = 1e-12, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _kappa_of_ratio(mid, d) > target_condition:
            lo = mid
        else:
            hi = mid
    r = 0.5 * (lo + hi)
    s = r ** np.arange(d, dtype=np.float64)

    u, _ = np.linalg.qr(rng.standard_normal((d, d)))
    v, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (u * s) @ v.T


def key_to_bytes(key: ProjectionKey) -> bytes:
    """Serialize the matrix as a GRPM blob (doubles, row-major, little-endian)."""
    header = _BLOB_HEADER.pack(_BLOB_MAGIC, _BLOB_VERSION, key.k, key.d, 0)
    body = np.ascontiguousarray(key.matrix, dtype="<f8").tobytes()
    return header + body


def key_from_bytes(blob: bytes, seed: int = 0, scaled: bool = True) -> ProjectionKey:
    """Inverse of key_to_bytes. The seed is not stored in the blob."""
    if len(blob) < _BLOB_HEADER.size:
        raise FramingError("blob shorter than header")
    magic, version, k, d, _ = _BLOB_HEADER.unpack_from(blob)
    if magic != _BLOB_MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if version != _BLOB_VERSION:
        raise FramingError(f"unsupported version {version}")
    expected = _BLOB_HEADER.size + k * d * 8
    if len(blob) != expected:
        raise FramingError(f"blob length {len(blob)} != expected {expected}")
    matrix = np.frombuffer(blob, dtype="<f8", offset=_BLOB_HEADER.size).reshape(k, d)
    return ProjectionKey(matrix=matrix.copy(), k=k, d=d, seed=seed, scaled=scaled)


class GaussianRandomProjector(BaseEstimator, TransformerMixin):
    """sklearn-style transformer around a private Gaussian projection key.

    Parameters
    ----------
    n_components : projected dimension k. ``None`` keeps the input dimension.
    seed : generator seed for the key matrix.
    scaled : apply the 1/sqrt(k) factor at transform time.
    """

    def __init__(self, n_components=None, seed=0, scaled=True):
        self.n_components = n_components
        self.seed = seed
        self.scaled = scaled

    def fit(self, X, y=None):
        X = check_array(X)
        d = X.shape[1]
        k = d if self.n_components is None else int(self.n_components)
        self.key_ = generate_projection(k, d, self.seed, scaled=self.scaled)
        return self

    def transform(self, X):
        check_is_fitted(self, "key_")
        X = check_array(X)
        return project(self.key_, X)
