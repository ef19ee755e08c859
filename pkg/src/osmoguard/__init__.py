"""Anomaly and fault detection toolkit for a reverse-osmosis / EDI
water-purification line, with a built-in plant simulator.

Two detection routes are provided: supervised classification of labeled
normal/faulty frames, and model-based monitoring of the residual between each
component's measured output and a neural identifier's one-step prediction,
judged against fixed or windowed adaptive threshold bands.
"""

__version__ = "0.1.0"

from .classify import ConfusionMatrix, LinearSvm, MlpClassifier, confusion, frame_labels
from .dataset import CHANNELS, ChannelId, Label, SensorFrame, TimeSeriesDataset
from .detect import (
    AlarmEvent,
    DetectionMetrics,
    Mode,
    Monitor,
    MonitorConfig,
    ThresholdBand,
    adaptive_band,
    cumulative_alarm,
    empirical_max_band,
    evaluate,
    fixed_band,
    residual,
)
from .identify import (
    MlpModel,
    MlpRegressor,
    RegressorSpec,
    TrainConfig,
    build_regressors,
    forward,
    gradient,
    init_mlp,
    load_mlp,
    predict_series,
    save_mlp,
    train,
)
from .pipelines import COMPONENTS, make_benchmark, residual_series, train_identifier
from .preprocessing import (
    CleanseReport,
    Normalizer,
    SavGolSpec,
    SavitzkyGolay,
    cleanse,
    fit_normalizer,
    normalize,
    savgol,
    savgol_coefficients,
    smooth,
)
from .simulator import FaultKind, FaultSpec, PlantConfig, inject_fault, simulate

__all__ = [
    "AlarmEvent",
    "CHANNELS",
    "COMPONENTS",
    "ChannelId",
    "CleanseReport",
    "ConfusionMatrix",
    "DetectionMetrics",
    "FaultKind",
    "FaultSpec",
    "Label",
    "LinearSvm",
    "MlpClassifier",
    "MlpModel",
    "MlpRegressor",
    "Mode",
    "Monitor",
    "MonitorConfig",
    "Normalizer",
    "PlantConfig",
    "RegressorSpec",
    "SavGolSpec",
    "SavitzkyGolay",
    "SensorFrame",
    "ThresholdBand",
    "TimeSeriesDataset",
    "TrainConfig",
    "adaptive_band",
    "build_regressors",
    "cleanse",
    "confusion",
    "cumulative_alarm",
    "empirical_max_band",
    "evaluate",
    "fit_normalizer",
    "fixed_band",
    "forward",
    "frame_labels",
    "gradient",
    "init_mlp",
    "inject_fault",
    "load_mlp",
    "make_benchmark",
    "normalize",
    "predict_series",
    "residual",
    "residual_series",
    "savgol",
    "savgol_coefficients",
    "save_mlp",
    "simulate",
    "smooth",
    "train",
    "train_identifier",
]
