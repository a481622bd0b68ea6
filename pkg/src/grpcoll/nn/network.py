"""Network container, loss/gradient computation, SGD training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyDatasetError, InvalidDimensionError
from .layers import Layer, Softmax


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = 30
    lam: float = 0.0  # L2 coefficient of the training objective
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")


@dataclass
class NetworkModel:
    """Ordered layers ending in softmax, plus input metadata."""

    layers: list[Layer]
    input_dim: int
    class_count: int
    name: str = "model"

    def __post_init__(self):
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise InvalidDimensionError("model must end with a softmax layer")

    def parameters(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in layer.params]

    def gradients(self) -> list[np.ndarray]:
        return [g for layer in self.layers for g in layer.grads]

    def forward(self, batch: np.ndarray, training: bool = False, rng=None) -> np.ndarray:
        """Class-probability rows for a (n, input_dim) batch."""
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != 2 or batch.shape[1] != self.input_dim:
            raise InvalidDimensionError(
                f"expected (n, {self.input_dim}) batch, got {batch.shape}"
            )
        out = batch
        for layer in self.layers:
            out = layer.forward(out, training=training, rng=rng)
        return out


def loss_and_gradients(
    model: NetworkModel,
    batch: np.ndarray,
    labels: np.ndarray,
    lam: float = 0.0,
    training: bool = True,
    rng=None,
):
    """Mean cross-entropy + lam * ||theta||^2, with gradients by backprop.

    Softmax and cross-entropy are fused: the gradient at the softmax input is
    (p - onehot)/n, which is then propagated through the remaining layers.
    The L2 term contributes exactly 2*lam*theta to every parameter gradient.
    """
    labels = np.asarray(labels)
    if labels.min(initial=0) < 0 or labels.max(initial=-1) >= model.class_count:
        raise ValueError("label out of range")
    n = len(labels)
    probs = model.forward(batch, training=training, rng=rng)
    eps = 1e-300  # guards log(0) without disturbing the gradient check
    data_loss = -np.log(probs[np.arange(n), labels] + eps).mean()
    reg_loss = lam * sum(float(np.sum(p**2)) for p in model.parameters())

    delta = probs.copy()
    delta[np.arange(n), labels] -= 1.0
    delta /= n
    for layer in reversed(model.layers[:-1]):
        delta = layer.backward(delta)

    grads = model.gradients()
    if lam:
        for g, p in zip(grads, model.parameters()):
            g += 2.0 * lam * p
    return data_loss + reg_loss, grads


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)


def train(model: NetworkModel, train_set, config: TrainConfig):
    """Mini-batch SGD with per-epoch seeded shuffling. Mutates the model."""
    if len(train_set) == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")
    rng = np.random.Generator(np.random.PCG64(config.seed))
    history = TrainHistory()
    n = len(train_set)
    for epoch in range(config.epochs):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        total_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            batch = train_set.vectors[idx]
            labels = train_set.labels[idx]
            loss, grads = loss_and_gradients(
                model, batch, labels, lam=config.lam, training=True, rng=rng
            )
            probs = model.layers[-1]._probs
            correct += int((probs.argmax(axis=1) == labels).sum())
            total_loss += loss * len(idx)
            for p, g in zip(model.parameters(), grads):
                p -= config.learning_rate * g
        history.epochs.append(
            EpochStats(epoch=epoch, loss=total_loss / n, accuracy=correct / n)
        )
    return model, history


def evaluate(model: NetworkModel, test_set, batch_size: int = 512) -> float:
    """Fraction of argmax-correct predictions (argmax ties -> lowest index)."""
    if len(test_set) == 0:
        raise EmptyDatasetError("cannot evaluate on an empty dataset")
    correct = 0
    for start in range(0, len(test_set), batch_size):
        batch = test_set.vectors[start : start + batch_size]
        labels = test_set.labels[start : start + batch_size]
        probs = model.forward(batch, training=False)
        correct += int((probs.argmax(axis=1) == labels).sum())
    return correct / len(test_set)


def predict_proba(model: NetworkModel, vectors: np.ndarray, batch_size: int = 512):
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    out = [
        model.forward(vectors[s : s + batch_size], training=False)
        for s in range(0, len(vectors), batch_size)
    ]
    return np.concatenate(out)
