"""Per-participant obfuscation schemes applied before data leaves a shard.

Each scheme derives an independent deterministic stream per participant from
a base seed, so a networked run and its in-process simulation obfuscate
identically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import Dataset
from .privacy import NoiseBudget, noisify_dataset
from .projection import ProjectionKey, generate_projection, project_dataset


def derive_seed(base_seed: int, *path: int) -> int:
    """Stable 64-bit seed for a (participant, purpose) path."""
    ss = np.random.SeedSequence([base_seed, *path])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class GrpScheme:
    """Independent Gaussian projection per participant."""

    k: int
    base_seed: int = 0
    scaled: bool = True
    name = "grp"

    def key_for(self, participant: int, d: int) -> ProjectionKey:
        return generate_projection(
            self.k, d, derive_seed(self.base_seed, participant), scaled=self.scaled
        )

    def output_dim(self, d: int) -> int:
        return self.k

    def obfuscate(self, ds: Dataset, participant: int, phase: int = 0) -> Dataset:
        # Same key for training (phase 0) and testing (phase 1) data.
        return project_dataset(self.key_for(participant, ds.dimension), ds)


@dataclass(frozen=True)
class DpScheme:
    """Additive Laplace noise; parameterize by (epsilon, sensitivity) or scale."""

    epsilon: float | None = None
    sensitivity: float | None = None
    scale: float | None = None
    base_seed: int = 0
    name = "dp"

    def budget(self) -> NoiseBudget:
        if self.scale is not None:
            return NoiseBudget.from_scale(self.scale)
        if self.epsilon is None or self.sensitivity is None:
            raise ValueError("need either scale or (epsilon, sensitivity)")
        return NoiseBudget(epsilon=self.epsilon, sensitivity=self.sensitivity)

    def output_dim(self, d: int) -> int:
        return d

    def obfuscate(self, ds: Dataset, participant: int, phase: int = 0) -> Dataset:
        rng = np.random.Generator(
            np.random.PCG64(derive_seed(self.base_seed, participant, phase))
        )
        return noisify_dataset(ds, self.budget(), rng)


@dataclass(frozen=True)
class NoScheme:
    """Pass-through (plain baseline)."""

    name = "none"

    def output_dim(self, d: int) -> int:
        return d

    def obfuscate(self, ds: Dataset, participant: int, phase: int = 0) -> Dataset:
        return ds
