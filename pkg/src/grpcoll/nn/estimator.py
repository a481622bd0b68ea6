"""sklearn-style classifier facade over the from-scratch network engine."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..datasets import Dataset
from .builders import build_mnist_cnn, build_spam_mlp, build_toy_mlp
from .network import TrainConfig, evaluate, predict_proba, train


class NeuralNetClassifier(BaseEstimator, ClassifierMixin):
    """Trains one of the built-in architectures with mini-batch SGD.

    Parameters
    ----------
    architecture : "mlp", "mnist_cnn", or "spam_mlp".
    hidden : hidden widths for the "mlp" architecture.
    learning_rate, batch_size, epochs, lam, seed, shuffle : see TrainConfig.
    """

    def __init__(
        self,
        architecture="mlp",
        hidden=(30, 40),
        learning_rate=0.01,
        batch_size=64,
        epochs=30,
        lam=0.0,
        seed=0,
        shuffle=True,
    ):
        self.architecture = architecture
        self.hidden = hidden
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.lam = lam
        self.seed = seed
        self.shuffle = shuffle

    def _build(self, input_dim, class_count):
        if self.architecture == "mnist_cnn":
            return build_mnist_cnn(input_dim=input_dim, seed=self.seed)
        if self.architecture == "spam_mlp":
            return build_spam_mlp(input_dim=input_dim, seed=self.seed)
        if self.architecture == "mlp":
            return build_toy_mlp(input_dim, list(self.hidden), class_count, seed=self.seed)
        raise ValueError(f"unknown architecture {self.architecture!r}")

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_ = np.unique(y)
        labels = np.searchsorted(self.classes_, y)
        ds = Dataset(
            vectors=X,
            labels=labels,
            class_count=len(self.classes_),
            domain_bounds=np.stack([X.min(axis=0), X.max(axis=0)]),
            provenance="estimator",
        )
        self.model_ = self._build(X.shape[1], len(self.classes_))
        config = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            lam=self.lam,
            seed=self.seed,
            shuffle=self.shuffle,
        )
        _, self.history_ = train(self.model_, ds, config)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        return predict_proba(self.model_, X)

    def predict(self, X):
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    def score(self, X, y):
        X, y = check_X_y(X, y)
        labels = np.searchsorted(self.classes_, y)
        ds = Dataset(
            vectors=X,
            labels=labels,
            class_count=len(self.classes_),
            domain_bounds=np.stack([X.min(axis=0), X.max(axis=0)]),
            provenance="estimator",
        )
        return evaluate(self.model_, ds)
