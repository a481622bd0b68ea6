"""Dataset container, loaders (IDX, CSV), synthetic generators, augmentation,
normalization, and disjoint even sharding across participants.

Dataset files are never downloaded here; paths come from the caller or the
GRPC0LL_DATA_DIR environment variable.
"""

from __future__ import annotations

import csv
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DataFormatError,
    EmptyDatasetError,
    InvalidBoundsError,
    InvalidDimensionError,
    ShardingError,
)

DATA_DIR_ENV = "GRPC0LL_DATA_DIR"

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "./data"))


@dataclass
class Dataset:
    """Immutable-by-convention collection of d-dimensional labeled vectors."""

    vectors: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64
    class_count: int
    domain_bounds: np.ndarray  # (2, d): row 0 lower, row 1 upper
    provenance: str = ""

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.vectors.ndim != 2:
            raise InvalidDimensionError("vectors must be a 2-D array")
        if len(self.vectors) != len(self.labels):
            raise DataFormatError(
                f"{len(self.vectors)} vectors but {len(self.labels)} labels"
            )
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= self.class_count
        ):
            raise DataFormatError("label out of range")
        self.domain_bounds = np.asarray(self.domain_bounds, dtype=np.float64)
        if self.domain_bounds.shape != (2, self.dimension):
            raise InvalidBoundsError(
                f"bounds shape {self.domain_bounds.shape} != (2, {self.dimension})"
            )

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def subset(self, indices, provenance_suffix: str = "") -> "Dataset":
        return Dataset(
            vectors=self.vectors[indices],
            labels=self.labels[indices],
            class_count=self.class_count,
            domain_bounds=self.domain_bounds.copy(),
            provenance=self.provenance + provenance_suffix,
        )


@dataclass
class ShardPlan:
    """Disjoint, even partition of sample indices across N participants."""

    participant_count: int
    assignment: np.ndarray  # (n,) participant index per sample
    seed: int

    def indices_for(self, participant: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == participant)

    def shard_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.participant_count)


def _bounds_from_data(vectors: np.ndarray) -> np.ndarray:
    if len(vectors) == 0:
        return np.zeros((2, vectors.shape[1]))
    return np.stack([vectors.min(axis=0), vectors.max(axis=0)])


def load_idx(images_path, labels_path) -> Dataset:
    """Load an MNIST-convention IDX image/label pair (big-endian)."""
    images_path, labels_path = Path(images_path), Path(labels_path)
    img_raw = images_path.read_bytes()
    lbl_raw = labels_path.read_bytes()

    if len(img_raw) < 16:
        raise DataFormatError(f"{images_path}: truncated header")
    magic, count, rows, cols = struct.unpack_from(">IIII", img_raw)
    if magic != _IDX_IMAGES_MAGIC:
        raise DataFormatError(f"{images_path}: bad magic {magic:#010x}")
    if len(img_raw) != 16 + count * rows * cols:
        raise DataFormatError(f"{images_path}: truncated file")

    if len(lbl_raw) < 8:
        raise DataFormatError(f"{labels_path}: truncated header")
    lmagic, lcount = struct.unpack_from(">II", lbl_raw)
    if lmagic != _IDX_LABELS_MAGIC:
        raise DataFormatError(f"{labels_path}: bad magic {lmagic:#010x}")
    if len(lbl_raw) != 8 + lcount:
        raise DataFormatError(f"{labels_path}: truncated file")
    if lcount != count:
        raise DataFormatError(
            f"label count {lcount} != image count {count}"
        )

    pixels = np.frombuffer(img_raw, dtype=np.uint8, offset=16)
    vectors = pixels.reshape(count, rows * cols).astype(np.float64)
    labels = np.frombuffer(lbl_raw, dtype=np.uint8, offset=8).astype(np.int64)
    class_count = int(labels.max()) + 1 if count else 10
    d = rows * cols
    bounds = np.stack([np.zeros(d), np.full(d, 255.0)])
    return Dataset(
        vectors=vectors,
        labels=labels,
        class_count=class_count,
        domain_bounds=bounds,
        provenance=f"idx:{images_path.name}",
    )


def write_idx(ds: Dataset, images_path, labels_path, rows: int, cols: int) -> None:
    """Write a dataset of byte-valued vectors as an IDX pair (for round-trips)."""
    if rows * cols != ds.dimension:
        raise InvalidDimensionError(f"{rows}x{cols} != dimension {ds.dimension}")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", _IDX_IMAGES_MAGIC, len(ds), rows, cols))
        f.write(np.clip(ds.vectors, 0, 255).astype(np.uint8).tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", _IDX_LABELS_MAGIC, len(ds)))
        f.write(ds.labels.astype(np.uint8).tobytes())


def load_csv(path, label_column: int = -1) -> Dataset:
    """Load a rectangular numeric CSV (spambase convention: label last)."""
    path = Path(path)
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and any(not _numeric(c) for c in row):
                continue  # optional header
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}:{lineno}: non-numeric cell") from exc
    if not rows:
        raise EmptyDatasetError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataFormatError(f"{path}: ragged row {i + 1} ({len(r)} != {width})")
    arr = np.asarray(rows, dtype=np.float64)
    label_column = label_column % width
    labels = arr[:, label_column].astype(np.int64)
    vectors = np.delete(arr, label_column, axis=1)
    class_count = int(labels.max()) + 1
    return Dataset(
        vectors=vectors,
        labels=labels,
        class_count=class_count,
        domain_bounds=_bounds_from_data(vectors),
        provenance=f"csv:{path.name}",
    )


def _numeric(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False


def synth_gaussian_two_class(
    d: int, mean_magnitude: float, n_per_class: int, seed: int
) -> Dataset:
    """Two isotropic Gaussian classes at -m*1 and +m*1 with unit covariance."""
    if d < 1 or n_per_class < 1:
        raise InvalidDimensionError("d and n_per_class must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    m = mean_magnitude
    neg = rng.standard_normal((n_per_class, d)) - m
    pos = rng.standard_normal((n_per_class, d)) + m
    vectors = np.concatenate([neg, pos])
    labels = np.concatenate(
        [np.zeros(n_per_class, dtype=np.int64), np.ones(n_per_class, dtype=np.int64)]
    )
    perm = rng.permutation(len(labels))
    vectors, labels = vectors[perm], labels[perm]
    return Dataset(
        vectors=vectors,
        labels=labels,
        class_count=2,
        domain_bounds=_bounds_from_data(vectors),
        provenance=f"synth2class(d={d},m={m},seed={seed})",
    )


def augment_gaussian(
    ds: Dataset,
    noise_std,
    target_train: int,
    target_test: int,
    seed: int,
    test_fraction: float = 0.1,
):
    """Split, then replicate-with-noise each side until the targets are reached.

    noise_std may be a scalar, a per-dimension array, or None for the default
    of 0.05 x the per-feature std of the training split.
    """
    if len(ds) == 0:
        raise EmptyDatasetError("cannot augment an empty dataset")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(ds))
    n_test = max(1, int(round(test_fraction * len(ds))))
    test_idx, train_idx = perm[:n_test], perm[n_test:]
    if target_train < len(train_idx) or target_test < len(test_idx):
        raise InvalidDimensionError("targets smaller than the base split")

    base_train = ds.subset(train_idx)
    base_test = ds.subset(test_idx)

    if noise_std is None:
        noise_std = 0.05 * base_train.vectors.std(axis=0)
    noise_std = np.broadcast_to(np.asarray(noise_std, dtype=np.float64), (ds.dimension,))

    def grow(base: Dataset, target: int, tag: str) -> Dataset:
        reps = int(np.ceil(target / len(base)))
        idx = np.tile(np.arange(len(base)), reps)[:target]
        vectors = base.vectors[idx].copy()
        labels = base.labels[idx].copy()
        fresh = np.arange(target) >= len(base)  # originals kept noise-free
        vectors[fresh] += rng.standard_normal((fresh.sum(), ds.dimension)) * noise_std
        return Dataset(
            vectors=vectors,
            labels=labels,
            class_count=ds.class_count,
            domain_bounds=_bounds_from_data(vectors),
            provenance=ds.provenance + f"|augmented({tag},n={target},seed={seed})",
        )

    # Replicas are taken in tiled order so every sample index beyond the base
    # length is a noisy copy of index % len(base).
    return grow(base_train, target_train, "train"), grow(base_test, target_test, "test")


def shard(ds: Dataset, N: int, seed: int) -> ShardPlan:
    """Seeded shuffle then round-robin: disjoint shards, sizes within 1."""
    if N < 1:
        raise ShardingError("participant count must be positive")
    if N > len(ds):
        raise ShardingError(f"{N} shards requested for {len(ds)} samples")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(len(ds))
    assignment = np.empty(len(ds), dtype=np.int64)
    assignment[perm] = np.arange(len(ds)) % N
    return ShardPlan(participant_count=N, assignment=assignment, seed=seed)


def normalize(ds: Dataset, mode: str = "unit_range") -> Dataset:
    """Affinely map each dimension to [0,1] using the domain bounds.

    Zero-width (constant) dimensions are left unchanged.
    """
    if mode == "none":
        return ds
    if mode != "unit_range":
        raise ValueError(f"unknown normalization mode {mode!r}")
    lo, hi = ds.domain_bounds
    width = hi - lo
    constant = width <= 0
    safe = np.where(constant, 1.0, width)
    vectors = (ds.vectors - np.where(constant, 0.0, lo)) / safe
    new_lo = np.where(constant, lo, 0.0)
    new_hi = np.where(constant, hi, 1.0)
    tag = "|unit_range"
    if constant.any():
        tag += f"(constant_dims={int(constant.sum())})"
    return Dataset(
        vectors=vectors,
        labels=ds.labels.copy(),
        class_count=ds.class_count,
        domain_bounds=np.stack([new_lo, new_hi]),
        provenance=ds.provenance + tag,
    )


def concat(parts: list[Dataset], provenance: str = "concat") -> Dataset:
    """Concatenate datasets of equal dimension/class count."""
    if not parts:
        raise EmptyDatasetError("nothing to concatenate")
    d = parts[0].dimension
    cc = parts[0].class_count
    for p in parts:
        if p.dimension != d or p.class_count != cc:
            raise InvalidDimensionError("incompatible parts")
    vectors = np.concatenate([p.vectors for p in parts])
    labels = np.concatenate([p.labels for p in parts])
    return Dataset(
        vectors=vectors,
        labels=labels,
        class_count=cc,
        domain_bounds=_bounds_from_data(vectors),
        provenance=provenance,
    )


def mnist_paths(base=None) -> dict:
    base = Path(base) if base else data_dir()
    return {
        "train_images": base / "train-images-idx3-ubyte",
        "train_labels": base / "train-labels-idx1-ubyte",
        "test_images": base / "t10k-images-idx3-ubyte",
        "test_labels": base / "t10k-labels-idx1-ubyte",
    }


def load_mnist(base=None):
    """(train, test) on the raw [0,255] scale; normalize separately if needed."""
    p = mnist_paths(base)
    train = load_idx(p["train_images"], p["train_labels"])
    test = load_idx(p["test_images"], p["test_labels"])
    return train, test


def spambase_path(base=None) -> Path:
    base = Path(base) if base else data_dir()
    return base / "spambase.data"


def load_spambase(base=None) -> Dataset:
    return load_csv(spambase_path(base), label_column=-1)
