from .builders import build_mnist_cnn, build_spam_mlp, build_toy_mlp
from .checkpoint import load_model, save_model
from .estimator import NeuralNetClassifier
from .network import (
    NetworkModel,
    TrainConfig,
    TrainHistory,
    evaluate,
    loss_and_gradients,
    predict_proba,
    train,
)

__all__ = [
    "NetworkModel",
    "TrainConfig",
    "TrainHistory",
    "NeuralNetClassifier",
    "build_mnist_cnn",
    "build_spam_mlp",
    "build_toy_mlp",
    "evaluate",
    "loss_and_gradients",
    "load_model",
    "predict_proba",
    "save_model",
    "train",
]
