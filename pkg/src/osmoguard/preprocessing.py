"""Data preparation pipeline: cleansing, [0,1] normalization, noise removal.

Raw recordings contain shutdown gaps and implausible readings; those rows are
dropped, never imputed. Remaining values are min-max scaled with extrema
fitted on training data only, then smoothed with a Savitzky-Golay filter
(least-squares local polynomial fit), whose coefficients are derived here
rather than taken from a table so arbitrary window/order pairs work.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dataset import (
    CHANNELS,
    CONDUCTIVITY_CHANNELS,
    PRESSURE_CHANNELS,
    ChannelId,
    Label,
    TimeSeriesDataset,
)
from .validation import as_float_matrix, as_series, check_feature_count, check_finite

#: Generous physical envelopes used when no explicit cleansing ranges are given.
DEFAULT_RANGES: dict[ChannelId, tuple[float, float]] = {
    **{ch: (0.0, 40.0) for ch in PRESSURE_CHANNELS},
    **{ch: (0.0, 2000.0) for ch in CONDUCTIVITY_CHANNELS},
}

REASON_INVALID = "invalid_flag"
REASON_NON_FINITE = "non_finite"
REASON_RANGE = "out_of_physical_range"


@dataclass
class CleanseReport:
    """Tally of rows removed by `cleanse`, keyed by first matching reason."""

    rows_in: int
    rows_dropped: int
    reasons: dict[str, int] = field(default_factory=dict)

    def __str__(self) -> str:
        parts = [f"rows_in={self.rows_in}", f"rows_dropped={self.rows_dropped}"]
        parts.extend(f"{k}={v}" for k, v in self.reasons.items())
        return "cleanse: " + " ".join(parts)


def cleanse(
    dataset: TimeSeriesDataset,
    ranges: dict[ChannelId, tuple[float, float]] | None = None,
) -> tuple[TimeSeriesDataset, CleanseReport]:
    """Drop invalid, non-finite, and out-of-range rows, preserving order.

    Each dropped row is counted once under the first reason that applies,
    checked in the order: invalid flag, non-finite value, physical range.
    Channels missing from `ranges` fall back to DEFAULT_RANGES.
    """
    effective = dict(DEFAULT_RANGES)
    if ranges:
        effective.update(ranges)
    for ch, (lo, hi) in effective.items():
        if not lo < hi:
            raise ValueError(f"range for {ch.value} must satisfy lo < hi, got [{lo}, {hi}]")

    lo = np.array([effective[ch][0] for ch in CHANNELS])
    hi = np.array([effective[ch][1] for ch in CHANNELS])

    keep: list[int] = []
    reasons = {REASON_INVALID: 0, REASON_NON_FINITE: 0, REASON_RANGE: 0}
    for i in range(len(dataset)):
        row = dataset.values[i]
        if dataset.labels[i] is Label.INVALID:
            reasons[REASON_INVALID] += 1
        elif not np.all(np.isfinite(row)):
            reasons[REASON_NON_FINITE] += 1
        elif np.any(row < lo) or np.any(row > hi):
            reasons[REASON_RANGE] += 1
        else:
            keep.append(i)

    report = CleanseReport(
        rows_in=len(dataset),
        rows_dropped=len(dataset) - len(keep),
        reasons={k: v for k, v in reasons.items() if v},
    )
    cleaned = replace(
        dataset,
        t=dataset.t[keep],
        values=dataset.values[keep],
        labels=dataset.labels[keep],
        provenance=dataset.provenance + ("cleansed",),
    )
    return cleaned, report


class Normalizer(BaseEstimator, TransformerMixin):
    """Per-channel min-max scaler, fitted on training data only.

    Maps x to (x - min) / (max - min); a constant channel maps to 0. Data
    outside the fitted range is not clamped, so later streams may produce
    values outside [0, 1] by design.
    """

    min_: np.ndarray
    max_: np.ndarray
    feature_names_: list[str]

    def fit(self, X, y=None) -> "Normalizer":
        names = None
        if isinstance(X, TimeSeriesDataset):
            names = [ch.value for ch in CHANNELS]
            X = X.values[X.valid_mask()]
        X = as_float_matrix(X)
        if X.shape[0] == 0:
            raise ValueError("cannot fit a normalizer on an empty dataset")
        check_finite(X, "training data")
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        self.feature_names_ = names or [f"c{i}" for i in range(X.shape[1])]
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "min_"):
            raise NotFittedError("Normalizer is not fitted")

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_float_matrix(X)
        check_feature_count(X, len(self.min_))
        span = self.max_ - self.min_
        out = X - self.min_
        nonzero = span != 0
        out[:, nonzero] /= span[nonzero]
        out[:, ~nonzero] = 0.0
        return out

    def inverse_transform(self, X) -> np.ndarray:
        self._check_fitted()
        X = as_float_matrix(X)
        check_feature_count(X, len(self.min_))
        return X * (self.max_ - self.min_) + self.min_

    # Persisted as UTF-8 text, one `channel,min,max` line per channel with
    # full round-trip precision.
    def save(self, path: str | Path) -> None:
        self._check_fitted()
        lines = [
            f"{name},{repr(float(lo))},{repr(float(hi))}"
            for name, lo, hi in zip(self.feature_names_, self.min_, self.max_)
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Normalizer":
        norm = cls()
        names, mins, maxs = [], [], []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line:
                continue
            name, lo, hi = line.split(",")
            names.append(name)
            mins.append(float(lo))
            maxs.append(float(hi))
        if not names:
            raise ValueError(f"empty normalizer file {path}")
        norm.min_ = np.array(mins)
        norm.max_ = np.array(maxs)
        norm.feature_names_ = names
        return norm


def fit_normalizer(dataset: TimeSeriesDataset) -> Normalizer:
    """Fit channel extrema on the (valid rows of the) given dataset."""
    if len(dataset) == 0:
        raise ValueError("cannot fit a normalizer on an empty dataset")
    return Normalizer().fit(dataset)


def normalize(norm: Normalizer, dataset: TimeSeriesDataset) -> TimeSeriesDataset:
    """Apply a fitted normalizer to every frame, keeping timestamps and labels."""
    valid = dataset.valid_mask()
    values = dataset.values.copy()
    values[valid] = norm.transform(dataset.values[valid])
    return replace(
        dataset,
        values=values,
        provenance=dataset.provenance + ("normalized",),
    )


@dataclass(frozen=True)
class SavGolSpec:
    """Savitzky-Golay window length (odd) and polynomial order (< window)."""

    window: int = 11
    order: int = 3

    def __post_init__(self) -> None:
        _check_savgol(self.window, self.order)


def _check_savgol(window: int, order: int) -> None:
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be an odd integer >= 3, got {window}")
    if order < 0 or order >= window:
        raise ValueError(f"order must satisfy 0 <= order < window, got {order}")


def _design_matrix(window: int, order: int) -> np.ndarray:
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    return np.vander(x, order + 1, increasing=True)


def savgol_coefficients(window: int, order: int) -> np.ndarray:
    """Convolution weights reproducing the central value of the least-squares
    polynomial fit over the window. Weights sum to 1 and are symmetric."""
    _check_savgol(window, order)
    A = _design_matrix(window, order)
    e0 = np.zeros(order + 1)
    e0[0] = 1.0
    return A @ np.linalg.solve(A.T @ A, e0)


def savgol(series, window: int = 11, order: int = 3) -> np.ndarray:
    """Smooth a uniformly sampled series, output length equal to input.

    Interior points use the central-point convolution weights; the first and
    last half-window points come from evaluating the polynomial fitted to the
    first/last full window at the boundary offsets, so polynomials of degree
    <= order pass through unchanged everywhere.
    """
    y = as_series(series)
    _check_savgol(window, order)
    if len(y) < window:
        raise ValueError(f"series of length {len(y)} is shorter than window {window}")
    weights = savgol_coefficients(window, order)
    half = window // 2
    out = np.empty_like(y)
    out[half : len(y) - half] = np.correlate(y, weights, mode="valid")
    A = _design_matrix(window, order)
    projector = A @ np.linalg.solve(A.T @ A, A.T)
    out[:half] = (projector @ y[:window])[:half]
    out[len(y) - half :] = (projector @ y[-window:])[half + 1 :]
    return out


def smooth(dataset: TimeSeriesDataset, spec: SavGolSpec | None = None) -> TimeSeriesDataset:
    """Savitzky-Golay smooth every channel of a cleansed dataset."""
    spec = spec or SavGolSpec()
    if not np.all(dataset.valid_mask()):
        raise ValueError("smoothing requires a cleansed dataset without invalid frames")
    values = np.column_stack(
        [savgol(dataset.values[:, j], spec.window, spec.order) for j in range(len(CHANNELS))]
    )
    return replace(
        dataset,
        values=values,
        provenance=dataset.provenance + ("smoothed",),
    )


class SavitzkyGolay(BaseEstimator, TransformerMixin):
    """Stateless column-wise Savitzky-Golay transformer."""

    def __init__(self, window: int = 11, order: int = 3):
        self.window = window
        self.order = order

    def fit(self, X=None, y=None) -> "SavitzkyGolay":
        _check_savgol(self.window, self.order)
        return self

    def transform(self, X) -> np.ndarray:
        X = as_float_matrix(X)
        return np.column_stack(
            [savgol(X[:, j], self.window, self.order) for j in range(X.shape[1])]
        )
