"""Composed flows: per-component identification, residual streams, and the
synthetic classification benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import frame_labels
from .dataset import ChannelId, TimeSeriesDataset
from .identify import (
    MlpModel,
    RegressorSpec,
    TrainConfig,
    design_matrix,
    forward_batch,
    init_mlp,
    train,
)
from .preprocessing import Normalizer, SavGolSpec, cleanse, smooth
from .simulator import FaultKind, FaultSpec, PlantConfig, inject_fault, simulate

#: Monitored components and their one-step-ahead regressor layouts. The
#: reverse-osmosis stage has no feed-conductivity sensor, so the concentrate
#: reading (which tracks the removed ion load) stands in as its input.
COMPONENTS: dict[str, RegressorSpec] = {
    "pump": RegressorSpec(ChannelId.PT270_5_1, ChannelId.PT270_5_4),
    "ro": RegressorSpec(ChannelId.QE270_6_2, ChannelId.QE270_5_1),
    "edi": RegressorSpec(ChannelId.QE270_5_1, ChannelId.QE270_6_1),
}

DEFAULT_HIDDEN_LAYERS = (22, 20)


def train_identifier(
    dataset: TimeSeriesDataset,
    component: str,
    cfg: TrainConfig | None = None,
    hidden_layer_sizes: tuple[int, ...] = DEFAULT_HIDDEN_LAYERS,
) -> tuple[MlpModel, list[float], float]:
    """Fit the component's network on a (preprocessed) normal-operation run."""
    spec = component_spec(component)
    _, X, Y = design_matrix(dataset, spec)
    model = init_mlp((spec.size, *hidden_layer_sizes, 1), seed=(cfg or TrainConfig()).seed)
    return train(model, (X, Y), cfg)


def component_spec(component: str) -> RegressorSpec:
    try:
        return COMPONENTS[component]
    except KeyError:
        raise ValueError(
            f"unknown component {component!r}; expected one of {sorted(COMPONENTS)}"
        ) from None


def residual_series(
    model: MlpModel, dataset: TimeSeriesDataset, component: str
) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and residuals (measured minus predicted) for a stream."""
    spec = component_spec(component)
    t, X, Y = design_matrix(dataset, spec)
    y_nn = forward_batch(model, X)[:, 0]
    return t, Y - y_nn


@dataclass(frozen=True)
class Benchmark:
    """Preprocessed frame-classification benchmark with a random split."""

    X_train: np.ndarray
    y_train: np.ndarray
    X_holdout: np.ndarray
    y_holdout: np.ndarray
    normalizer: Normalizer


def make_benchmark(
    seed: int = 0,
    normal_minutes: int = 2000,
    faulty_minutes: int = 2000,
    holdout_fraction: float = 0.25,
    bias_channel: ChannelId = ChannelId.QE270_5_1,
    bias_magnitude: float = 10.0,
    savgol: SavGolSpec | None = SavGolSpec(),
) -> Benchmark:
    """Two independently generated runs, one normal and one with a sensor bias
    from the first minute, each cleansed and smoothed on its own so classes
    never blend across a window. The normalizer is fitted on the training
    split only."""
    normal = simulate(PlantConfig(seed=seed), normal_minutes)
    faulty = inject_fault(
        simulate(PlantConfig(seed=seed + 1), faulty_minutes),
        FaultSpec(
            kind=FaultKind.SENSOR_BIAS,
            onset=0,
            magnitude=bias_magnitude,
            target=bias_channel,
        ),
    )
    parts = []
    for stream in (normal, faulty):
        cleaned, _ = cleanse(stream)
        parts.append(smooth(cleaned, savgol) if savgol else cleaned)

    X_all = np.vstack([p.values for p in parts])
    y_all = np.concatenate([frame_labels(p) for p in parts])
    n = len(y_all)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_holdout = int(n * holdout_fraction)
    holdout_idx, train_idx = perm[:n_holdout], perm[n_holdout:]

    norm = Normalizer().fit(X_all[train_idx])
    return Benchmark(
        X_train=norm.transform(X_all[train_idx]),
        y_train=y_all[train_idx],
        X_holdout=norm.transform(X_all[holdout_idx]),
        y_holdout=y_all[holdout_idx],
        normalizer=norm,
    )
