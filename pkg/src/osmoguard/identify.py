"""Feedforward network with backpropagation, used for component identification.

Each plant component is identified by a small fully connected network that
predicts the component's output one step ahead from lagged inputs and lagged
measured outputs. The default architecture has layer sizes 5-22-20-1 (tanh
hidden units, linear output) and is trained by mini-batch gradient descent on
mean squared error; a logistic output turns the same machinery into a binary
classifier head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .dataset import ChannelId, TimeSeriesDataset
from .validation import as_float_matrix, check_feature_count

HIDDEN_ACTIVATIONS = ("tanh",)
OUTPUT_ACTIVATIONS = ("identity", "logistic")

MODEL_MAGIC = "OSMOGUARD-MLP v1"


def _logistic(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z)
    if name == "logistic":
        return _logistic(z)
    return z


def _activation_slope(name: str, a: np.ndarray) -> np.ndarray:
    """Derivative of the activation expressed through its output value."""
    if name == "tanh":
        return 1.0 - a * a
    if name == "logistic":
        return a * (1.0 - a)
    return np.ones_like(a)


@dataclass
class MlpModel:
    """Weights and biases of a fully connected network.

    ``weights[l]`` has shape (layer_sizes[l+1], layer_sizes[l]); row r holds
    the incoming weights of neuron r in layer l+1.
    """

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    hidden_activation: str = "tanh"
    output_activation: str = "identity"

    def __post_init__(self) -> None:
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        n_layers = len(self.layer_sizes) - 1
        if len(self.weights) != n_layers or len(self.biases) != n_layers:
            raise ValueError("weights/biases do not match layer count")
        for l in range(n_layers):
            fan_out, fan_in = self.layer_sizes[l + 1], self.layer_sizes[l]
            if self.weights[l].shape != (fan_out, fan_in):
                raise ValueError(
                    f"layer {l} weights have shape {self.weights[l].shape}, "
                    f"expected ({fan_out}, {fan_in})"
                )
            if self.biases[l].shape != (fan_out,):
                raise ValueError(f"layer {l} biases have wrong shape")
            if not (
                np.all(np.isfinite(self.weights[l])) and np.all(np.isfinite(self.biases[l]))
            ):
                raise ValueError(f"layer {l} parameters must be finite")

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MlpModel":
        return MlpModel(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            hidden_activation=self.hidden_activation,
            output_activation=self.output_activation,
        )


def init_mlp(
    layer_sizes: tuple[int, ...] | list[int],
    seed: int = 0,
    output_activation: str = "identity",
) -> MlpModel:
    """Seeded network with weights uniform in +-1/sqrt(fan_in), zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    sizes = tuple(layer_sizes)
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        output_activation=output_activation,
    )


def _forward_layers(model: MlpModel, X: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer for a batch, input included."""
    activations = [X]
    last = len(model.weights) - 1
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = activations[-1] @ W.T + b
        name = model.output_activation if l == last else model.hidden_activation
        activations.append(_activate(name, z))
    return activations


def forward(model: MlpModel, x) -> np.ndarray:
    """Evaluate the network on one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.input_size,):
        raise ValueError(f"input has shape {x.shape}, expected ({model.input_size},)")
    return _forward_layers(model, x[None, :])[-1][0]


def forward_batch(model: MlpModel, X) -> np.ndarray:
    X = as_float_matrix(X)
    check_feature_count(X, model.input_size)
    return _forward_layers(model, X)[-1]


def _as_targets(model: MlpModel, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y.reshape(-1, 1)
    if Y.shape[1] != model.output_size:
        raise ValueError(f"targets have {Y.shape[1]} columns, expected {model.output_size}")
    return Y


def mse(model: MlpModel, X, Y) -> float:
    """Mean squared error over all batch elements and output components."""
    Y = _as_targets(model, Y)
    pred = forward_batch(model, X)
    return float(np.mean((pred - Y) ** 2))


def gradient(
    model: MlpModel, X, Y
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Backpropagated d(MSE)/d(theta) for every weight matrix and bias vector."""
    X = as_float_matrix(X)
    check_feature_count(X, model.input_size)
    Y = _as_targets(model, Y)
    if X.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    if X.shape[0] != Y.shape[0]:
        raise ValueError("inputs and targets disagree on batch size")

    activations = _forward_layers(model, X)
    out = activations[-1]
    delta = (2.0 / Y.size) * (out - Y)
    delta = delta * _activation_slope(model.output_activation, out)

    grads_w = [np.empty(0)] * len(model.weights)
    grads_b = [np.empty(0)] * len(model.biases)
    for l in range(len(model.weights) - 1, -1, -1):
        grads_w[l] = delta.T @ activations[l]
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ model.weights[l]) * _activation_slope(
                model.hidden_activation, activations[l]
            )
    return grads_w, grads_b


@dataclass(frozen=True)
class TrainConfig:
    """Gradient-descent settings. ``shuffle`` selects a seeded random
    train/holdout split instead of the default chronological one; mini-batch
    order is reshuffled every epoch either way."""

    learning_rate: float = 0.01
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    train_fraction: float = 0.75
    shuffle: bool = False

    def validate(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(
                f"train_fraction must lie in (0, 1), got {self.train_fraction}"
            )


def pairs_to_arrays(pairs) -> tuple[np.ndarray, np.ndarray]:
    """Stack a list of (input vector, target) pairs into (X, Y) arrays."""
    X = np.asarray([np.asarray(x, dtype=np.float64) for x, _ in pairs])
    Y = np.asarray([t for _, t in pairs], dtype=np.float64)
    return X, Y


def sgd_epochs(
    model: MlpModel,
    X: np.ndarray,
    Y: np.ndarray,
    learning_rate: float,
    epochs: int,
    batch_size: int,
    rng: np.random.Generator,
) -> list[float]:
    """In-place mini-batch gradient descent; returns the per-epoch full-set MSE."""
    history = []
    n = X.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            gw, gb = gradient(model, X[batch], Y[batch])
            for l in range(len(model.weights)):
                model.weights[l] -= learning_rate * gw[l]
                model.biases[l] -= learning_rate * gb[l]
        history.append(mse(model, X, Y))
    return history


def train(
    model: MlpModel, pairs, cfg: TrainConfig | None = None
) -> tuple[MlpModel, list[float], float]:
    """Split, train by mini-batch gradient descent, and score the holdout.

    Returns (trained model copy, per-epoch training MSE, holdout MSE); fully
    deterministic given ``cfg.seed``.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    if isinstance(pairs, tuple) and len(pairs) == 2 and np.asarray(pairs[0]).ndim == 2:
        X, Y = pairs
        X = as_float_matrix(X)
        Y = _as_targets(model, Y)
    else:
        X, Y = pairs_to_arrays(pairs)
        Y = _as_targets(model, Y)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 samples to split into train and holdout")

    n_train = int(n * cfg.train_fraction)
    if n_train == 0 or n_train == n:
        raise ValueError(
            f"train_fraction {cfg.train_fraction} leaves an empty split for n={n}"
        )
    rng = np.random.default_rng(cfg.seed)
    if cfg.shuffle:
        perm = rng.permutation(n)
        train_idx, hold_idx = perm[:n_train], perm[n_train:]
    else:
        train_idx, hold_idx = np.arange(n_train), np.arange(n_train, n)

    trained = model.copy()
    history = sgd_epochs(
        trained,
        X[train_idx],
        Y[train_idx],
        cfg.learning_rate,
        cfg.epochs,
        cfg.batch_size,
        rng,
    )
    holdout_mse = mse(trained, X[hold_idx], Y[hold_idx])
    return trained, history, holdout_mse


# -- lagged regressors --------------------------------------------------------


@dataclass(frozen=True)
class RegressorSpec:
    """One-step-ahead regressor layout for a single component.

    The input vector at time k is [u(k-l) for l in input_lags] followed by
    [y(k-l) for l in output_lags]; the target is y(k). Output lags must not
    contain 0 (the target may not feed itself).
    """

    input_channel: ChannelId
    output_channel: ChannelId
    input_lags: tuple[int, ...] = (0, 1, 2)
    output_lags: tuple[int, ...] = (1, 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_lags", tuple(int(l) for l in self.input_lags))
        object.__setattr__(self, "output_lags", tuple(int(l) for l in self.output_lags))
        lags = self.input_lags + self.output_lags
        if not lags:
            raise ValueError("regressor needs at least one lag")
        if any(l < 0 for l in lags):
            raise ValueError("lags must be non-negative")
        if 0 in self.output_lags:
            raise ValueError("output_lags must not contain 0")

    @property
    def max_lag(self) -> int:
        return max(self.input_lags + self.output_lags)

    @property
    def size(self) -> int:
        return len(self.input_lags) + len(self.output_lags)


def design_matrix(
    dataset: TimeSeriesDataset, spec: RegressorSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Timestamps, input matrix, and targets for every usable time step.

    A step is usable when the full lag window behind it consists of
    consecutive-minute, valid, finite frames; windows spanning a dropped or
    invalid frame are excluded.
    """
    n = len(dataset)
    m = spec.max_lag
    if n <= m:
        raise ValueError(f"dataset of length {n} is too short for max lag {m}")

    u = dataset.channel(spec.input_channel)
    y = dataset.channel(spec.output_channel)
    t = dataset.t
    usable_frame = dataset.valid_mask() & np.isfinite(u) & np.isfinite(y)

    ok = np.ones(n, dtype=bool)
    ok[:m] = False
    if m > 0:
        ok[m:] &= (t[m:] - t[:-m]) == m
    for off in range(m + 1):
        ok[m:] &= usable_frame[off : n - m + off]
    idx = np.flatnonzero(ok)

    cols = [u[idx - l] for l in spec.input_lags]
    cols.extend(y[idx - l] for l in spec.output_lags)
    X = np.column_stack(cols) if len(idx) else np.empty((0, spec.size))
    return t[idx], X, y[idx]


def build_regressors(dataset: TimeSeriesDataset, spec: RegressorSpec):
    """Usable (input vector, target) pairs in time order."""
    _, X, Y = design_matrix(dataset, spec)
    return [(X[i], float(Y[i])) for i in range(X.shape[0])]


def predict_series(
    model: MlpModel, dataset: TimeSeriesDataset, spec: RegressorSpec
) -> tuple[np.ndarray, np.ndarray]:
    """One-step-ahead predictions vs. measurements, aligned by timestamp.

    Lagged outputs are the measured values, never fed-back predictions; the
    first max-lag frames (and any frames behind gaps) are skipped.
    """
    if model.input_size != spec.size:
        raise ValueError(
            f"model expects {model.input_size} inputs but spec provides {spec.size}"
        )
    _, X, Y = design_matrix(dataset, spec)
    y_nn = forward_batch(model, X)[:, 0]
    return y_nn, Y


# -- persistence ---------------------------------------------------------------
# Text format: line 1 the magic string, line 2 space-separated layer sizes,
# line 3 `<hidden_activation> <output_activation>`, then per layer the weight
# matrix row-major (one line per row) followed by one line of biases. Values
# use full round-trip precision.


def save_mlp(model: MlpModel, path: str | Path) -> None:
    lines = [
        MODEL_MAGIC,
        " ".join(str(s) for s in model.layer_sizes),
        f"{model.hidden_activation} {model.output_activation}",
    ]
    for W, b in zip(model.weights, model.biases):
        for row in W:
            lines.append(" ".join(repr(float(v)) for v in row))
        lines.append(" ".join(repr(float(v)) for v in b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_mlp(path: str | Path) -> MlpModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path} is not a recognized model file")
    sizes = tuple(int(s) for s in lines[1].split())
    hidden_act, output_act = lines[2].split()
    weights, biases = [], []
    pos = 3
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        W = np.array(
            [[float(v) for v in lines[pos + r].split()] for r in range(fan_out)]
        )
        pos += fan_out
        b = np.array([float(v) for v in lines[pos].split()])
        pos += 1
        weights.append(W)
        biases.append(b)
    return MlpModel(
        layer_sizes=sizes,
        weights=weights,
        biases=biases,
        hidden_activation=hidden_act,
        output_activation=output_act,
    )


class MlpRegressor(BaseEstimator, RegressorMixin):
    """Estimator wrapper: fit holds out the configured tail for scoring.

    After fit, ``model_`` holds the trained network, ``loss_history_`` the
    per-epoch training MSE and ``holdout_mse_`` the score on the held-out
    fraction.
    """

    def __init__(
        self,
        hidden_layer_sizes: tuple[int, ...] = (22, 20),
        learning_rate: float = 0.01,
        epochs: int = 200,
        batch_size: int = 32,
        seed: int = 0,
        train_fraction: float = 0.75,
        shuffle: bool = False,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed
        self.train_fraction = train_fraction
        self.shuffle = shuffle

    def fit(self, X, y) -> "MlpRegressor":
        X = as_float_matrix(X)
        sizes = (X.shape[1], *self.hidden_layer_sizes, 1)
        model = init_mlp(sizes, seed=self.seed)
        cfg = TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            train_fraction=self.train_fraction,
            shuffle=self.shuffle,
        )
        self.model_, self.loss_history_, self.holdout_mse_ = train(model, (X, y), cfg)
        return self

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "model_"):
            raise NotFittedError("MlpRegressor is not fitted")
        return forward_batch(self.model_, X)[:, 0]
