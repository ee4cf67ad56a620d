"""K-nearest-neighbors voting on standardized features."""

from __future__ import annotations

import numpy as np

from .base import Classifier, KTooLarge, check_binary_labels


class KNNClassifier(Classifier):
    """Lazy Euclidean majority vote; ties go to class 0.

    k defaults to 5 and should stay odd so ties only arise through equal
    distances, which the stable sort resolves by training-row order.
    """

    kind = "KNN"

    def __init__(self, k_neighbors: int = 5):
        super().__init__()
        if k_neighbors < 1:
            raise ValueError("k_neighbors must be >= 1")
        self.k_neighbors = k_neighbors
        self.train_X = None
        self.train_y = None

    def _fit(self, X, y):
        y = check_binary_labels(y)
        if self.k_neighbors > X.shape[0]:
            raise KTooLarge(f"k={self.k_neighbors} exceeds {X.shape[0]} training rows")
        self.train_X = X.copy()
        self.train_y = y.copy()

    def vote_shares(self, X) -> np.ndarray:
        """Fraction of class-1 votes among the k nearest, per query row."""
        X = np.asarray(X, dtype=float)
        shares = np.empty(X.shape[0])
        for i, q in enumerate(X):
            d = np.linalg.norm(self.train_X - q, axis=1)
            nearest = np.argsort(d, kind="stable")[: self.k_neighbors]
            shares[i] = float(np.sum(self.train_y[nearest])) / self.k_neighbors
        return shares

    def _predict(self, X):
        return (self.vote_shares(X) > 0.5).astype(int)

    def hyperparameters(self):
        return {"k_neighbors": self.k_neighbors}

    def state_dict(self):
        return {"train_X": self.train_X.tolist(), "train_y": self.train_y.tolist()}

    def load_state(self, state):
        self.train_X = np.asarray(state["train_X"], dtype=float)
        self.train_y = np.asarray(state["train_y"], dtype=int)
        self.fitted = True
