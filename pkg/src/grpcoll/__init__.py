"""Privacy-preserving collaborative learning with per-participant Gaussian
random projection, a from-scratch neural engine, an epsilon-DP baseline, a
reconstruction-attack oracle, and a participant/coordinator wire protocol."""

from . import attack, datasets, errors, nn, privacy, projection, properties, protocol
from .obfuscation import DpScheme, GrpScheme, NoScheme
from .privacy import LaplaceNoiser, NoiseBudget
from .projection import GaussianRandomProjector, ProjectionKey
from .nn import NeuralNetClassifier, TrainConfig

__version__ = "0.1.0"

__all__ = [
    "DpScheme",
    "GaussianRandomProjector",
    "GrpScheme",
    "LaplaceNoiser",
    "NeuralNetClassifier",
    "NoScheme",
    "NoiseBudget",
    "ProjectionKey",
    "TrainConfig",
    "attack",
    "datasets",
    "errors",
    "nn",
    "privacy",
    "projection",
    "properties",
    "protocol",
]
