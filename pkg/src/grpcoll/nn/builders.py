"""Model builders for the architectures used throughout the experiments."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidDimensionError
from .layers import Conv2d, Dense, Dropout, Flatten, MaxPool2d, PadReshape, ReLU, Softmax
from .network import NetworkModel


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def build_mnist_cnn(input_dim: int = 784, seed: int = 0) -> NetworkModel:
    """Image CNN: conv(1->10,5x5), pool, relu, conv(10->20,5x5), pool, relu,
    dense(->50), relu, dense(50->10), softmax.

    For 784 inputs the image is 28x28 and the dense stack input is 320. A
    compressed k-vector is zero-padded to the next even-pipeline-compatible
    square before reshaping, keeping the same topology.
    """
    side = math.isqrt(input_dim)
    if side * side < input_dim:
        side += 1
    # Shape algebra: side -conv5-> side-4 -pool2-> /2 -conv5-> -4 -pool2-> /2.
    while True:
        a = side - 4
        if a >= 2 and a % 2 == 0:
            b = a // 2 - 4
            if b >= 2 and b % 2 == 0:
                break
        side += 1
    flat = 20 * (((side - 4) // 2 - 4) // 2) ** 2
    rng = _rng(seed)
    layers = [
        PadReshape(input_dim, side),
        Conv2d(1, 10, kernel=5, rng=rng),
        MaxPool2d(2),
        ReLU(),
        Conv2d(10, 20, kernel=5, rng=rng),
        MaxPool2d(2),
        ReLU(),
        Flatten(),
        Dense(flat, 50, rng=rng),
        ReLU(),
        Dense(50, 10, rng=rng),
        Softmax(),
    ]
    return NetworkModel(layers=layers, input_dim=input_dim, class_count=10, name="mnist_cnn")


def build_spam_mlp(input_dim: int = 57, dropout_rate: float = 0.5, seed: int = 0) -> NetworkModel:
    """Five-layer MLP 57 -> 100 -> 50 -> 10 -> 2 with ReLU, dropout, softmax."""
    widths = [input_dim, 100, 50, 10, 2]
    rng = _rng(seed)
    layers = []
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(Dense(a, b, rng=rng))
        if i < len(widths) - 2:
            layers.append(ReLU())
            layers.append(Dropout(dropout_rate))
    layers.append(Softmax())
    model = NetworkModel(layers=layers, input_dim=input_dim, class_count=2, name="spam_mlp")
    model.layer_widths = widths
    return model


def build_toy_mlp(input_dim: int, hidden: list[int], classes: int, seed: int = 0) -> NetworkModel:
    """MLP with the given hidden ReLU widths and a softmax head."""
    if input_dim < 1 or classes < 1 or any(h < 1 for h in hidden):
        raise InvalidDimensionError("widths must be positive")
    widths = [input_dim, *hidden, classes]
    rng = _rng(seed)
    layers = []
    for i, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(Dense(a, b, rng=rng))
        if i < len(widths) - 2:
            layers.append(ReLU())
    layers.append(Softmax())
    model = NetworkModel(
        layers=layers, input_dim=input_dim, class_count=classes, name="toy_mlp"
    )
    model.layer_widths = widths
    return model


BUILDERS = {
    "mnist_cnn": build_mnist_cnn,
    "spam_mlp": build_spam_mlp,
    "toy_mlp": build_toy_mlp,
}
