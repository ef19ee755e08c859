"""Supervised normal/faulty frame classification.

Features are the six normalized channel values of a single frame; labels are
-1 (normal) and +1 (faulty). The linear SVM minimizes the regularized hinge
loss  lambda/2 ||w||^2 + mean(max(0, 1 - y (w.x + b)))  by stochastic
subgradient descent with step 1/(lambda t), the bias kept out of the
regularizer. An MLP head with logistic output provides the neural-network
counterpart on the same features.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .dataset import Label, TimeSeriesDataset
from .identify import (
    forward_batch,
    init_mlp,
    load_mlp,
    save_mlp,
    sgd_epochs,
)
from .validation import as_float_matrix, check_feature_count, check_finite

SVM_MAGIC = "OSMOGUARD-SVM v1"


def _check_labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain both classes")
    return y


class LinearSvm(BaseEstimator, ClassifierMixin):
    """Linear SVM trained by Pegasos-style stochastic subgradient descent.

    The weight step is 1/(lambda t) with projection onto the ball of radius
    1/sqrt(lambda); the unregularized bias is not strongly convex, so it gets
    the classical 1/sqrt(t) subgradient step instead (the 1/(lambda t) step
    makes it blow up on its first update). Because subgradient descent is not
    a descent method, fit returns the epoch-end iterate with the lowest full
    training objective. Deterministic for a fixed seed; ties on the decision
    boundary resolve to +1.
    """

    def __init__(self, lambda_: float = 3e-5, epochs: int = 500, seed: int = 0):
        self.lambda_ = lambda_
        self.epochs = epochs
        self.seed = seed

    def objective(self, X, y, w=None, b=None) -> float:
        """Regularized hinge loss lambda/2 ||w||^2 + mean hinge."""
        w = self.w_ if w is None else w
        b = self.b_ if b is None else b
        hinge = np.maximum(0.0, 1.0 - y * (X @ w + b))
        return float(self.lambda_ / 2.0 * np.dot(w, w) + np.mean(hinge))

    def fit(self, X, y) -> "LinearSvm":
        X = as_float_matrix(X)
        check_finite(X, "features")
        y = _check_labels(y)
        if X.shape[0] != len(y):
            raise ValueError("features and labels disagree on sample count")
        if self.lambda_ <= 0:
            raise ValueError(f"lambda_ must be positive, got {self.lambda_}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")

        rng = np.random.default_rng(self.seed)
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        radius = 1.0 / np.sqrt(self.lambda_)
        t = 0
        best = (self.objective(X, y, w, b), w.copy(), b)
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.lambda_ * t)
                margin = y[i] * (X[i] @ w + b)
                w *= 1.0 - eta * self.lambda_
                if margin < 1.0:
                    w += eta * y[i] * X[i]
                    b += y[i] / np.sqrt(t)
                norm = np.linalg.norm(w)
                if norm > radius:
                    w *= radius / norm
            obj = self.objective(X, y, w, b)
            if obj < best[0]:
                best = (obj, w.copy(), b)
        self.w_ = best[1]
        self.b_ = best[2]
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "w_"):
            raise NotFittedError("LinearSvm is not fitted")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_float_matrix(X)
        check_feature_count(X, len(self.w_))
        return X @ self.w_ + self.b_

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0.0, 1.0, -1.0)

    def save(self, path: str | Path) -> None:
        self._check_fitted()
        lines = [
            SVM_MAGIC,
            " ".join(repr(float(v)) for v in self.w_),
            repr(float(self.b_)),
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearSvm":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != SVM_MAGIC:
            raise ValueError(f"{path} is not a recognized SVM model file")
        model = cls()
        model.w_ = np.array([float(v) for v in lines[1].split()])
        model.b_ = float(lines[2])
        return model


class MlpClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier head: the identification network with a logistic
    output unit, thresholded at 1/2."""

    def __init__(
        self,
        hidden_layer_sizes: tuple[int, ...] = (22, 20),
        learning_rate: float = 0.05,
        epochs: int = 200,
        batch_size: int = 32,
        seed: int = 0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def fit(self, X, y) -> "MlpClassifier":
        X = as_float_matrix(X)
        check_finite(X, "features")
        y = _check_labels(y)
        targets = (y + 1.0) / 2.0
        sizes = (X.shape[1], *self.hidden_layer_sizes, 1)
        self.model_ = init_mlp(sizes, seed=self.seed, output_activation="logistic")
        rng = np.random.default_rng(self.seed)
        self.loss_history_ = sgd_epochs(
            self.model_,
            X,
            targets.reshape(-1, 1),
            self.learning_rate,
            self.epochs,
            self.batch_size,
            rng,
        )
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise NotFittedError("MlpClassifier is not fitted")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        return forward_batch(self.model_, X)[:, 0]

    def predict(self, X) -> np.ndarray:
        return np.where(self.predict_proba(X) >= 0.5, 1.0, -1.0)

    def save(self, path: str | Path) -> None:
        self._check_fitted()
        save_mlp(self.model_, path)

    @classmethod
    def load(cls, path: str | Path) -> "MlpClassifier":
        clf = cls()
        clf.model_ = load_mlp(path)
        return clf


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary counts with faulty mapped to the positive class (+1)."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f_score(self) -> float:
        denom = self.precision + self.recall
        return 2.0 * self.precision * self.recall / denom if denom else 0.0

    def __str__(self) -> str:
        return (
            f"tp={self.tp} fp={self.fp} tn={self.tn} fn={self.fn} "
            f"accuracy={self.accuracy:.4f} precision={self.precision:.4f} "
            f"recall={self.recall:.4f} f_score={self.f_score:.4f}"
        )

    @classmethod
    def from_predictions(cls, y_true, y_pred) -> "ConfusionMatrix":
        y_true = np.asarray(y_true, dtype=np.float64).ravel()
        y_pred = np.asarray(y_pred, dtype=np.float64).ravel()
        if len(y_true) != len(y_pred):
            raise ValueError("prediction and truth lengths differ")
        return cls(
            tp=int(np.sum((y_pred > 0) & (y_true > 0))),
            fp=int(np.sum((y_pred > 0) & (y_true <= 0))),
            tn=int(np.sum((y_pred <= 0) & (y_true <= 0))),
            fn=int(np.sum((y_pred <= 0) & (y_true > 0))),
        )


def confusion(model, X, y_true) -> ConfusionMatrix:
    """Score a fitted classifier on a labeled holdout."""
    X = as_float_matrix(X)
    if X.shape[0] == 0:
        raise ValueError("holdout must be non-empty")
    return ConfusionMatrix.from_predictions(y_true, model.predict(X))


def frame_labels(dataset: TimeSeriesDataset) -> np.ndarray:
    """Dataset labels as -1 (normal) / +1 (faulty); invalid frames rejected."""
    out = np.empty(len(dataset))
    for i, lab in enumerate(dataset.labels):
        if lab is Label.INVALID:
            raise ValueError("cleanse the dataset before building class labels")
        out[i] = 1.0 if lab is Label.FAULTY else -1.0
    return out
