"""Synthetic purification-line simulator with parameterized fault injection.

The real plant takes potable feed water (~700 uS/cm), pressurizes it with a
frequency-regulated pump (~15 bar), strips most ions by reverse osmosis and
polishes the permeate with electro-deionization, delivering < 1 uS/cm to the
storage tank. Each stage is modeled as the simplest affine map that reproduces
those operating points, with AR(1) sensor noise so smoothing filters and
windowed thresholds see realistically correlated input:

    pt270_5_1 = pump_inlet_mean + e1
    pt270_5_4 = pump_setpoint + pump_gain * (pt270_5_1 - pump_inlet_mean) + e2
    qe270_5_1 = feed * (1 - ro_rejection) + e3
    qe270_6_2 = concentrate_gain * qe270_5_1 * edi_rejection + e4
    pt270_6_3 = edi_pressure_mean + edi_pressure_gain * (pt270_5_4 - pump_setpoint) + e5
    qe270_6_1 = qe270_5_1 * (1 - edi_rejection) + e6

where each e is a stationary AR(1) process with the configured standard
deviation. Generation is a deterministic function of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .dataset import CHANNEL_INDEX, CHANNELS, ChannelId, Label, TimeSeriesDataset

DEFAULT_NOISE_STD: dict[ChannelId, float] = {
    ChannelId.PT270_5_1: 0.05,
    ChannelId.PT270_5_4: 0.02,
    ChannelId.QE270_5_1: 0.20,
    ChannelId.QE270_6_2: 2.00,
    ChannelId.PT270_6_3: 0.02,
    ChannelId.QE270_6_1: 0.02,
}

DEFAULT_AR_COEFFICIENT: dict[ChannelId, float] = {ch: 0.9 for ch in CHANNELS}


@dataclass(frozen=True)
class PlantConfig:
    """Operating point and noise model of the simulated line."""

    feed_conductivity_mean: float = 700.0
    pump_setpoint: float = 15.0
    pump_inlet_mean: float = 3.0
    pump_gain: float = 0.1
    ro_rejection: float = 0.98
    edi_rejection: float = 0.96
    concentrate_gain: float = 10.0
    edi_pressure_mean: float = 2.0
    edi_pressure_gain: float = 0.5
    noise_std: dict[ChannelId, float] = field(
        default_factory=lambda: dict(DEFAULT_NOISE_STD)
    )
    ar_coefficient: dict[ChannelId, float] = field(
        default_factory=lambda: dict(DEFAULT_AR_COEFFICIENT)
    )
    seed: int = 0

    def validate(self) -> None:
        """Raise ValueError naming the offending field if any parameter is bad."""
        scalars = {
            "feed_conductivity_mean": self.feed_conductivity_mean,
            "pump_setpoint": self.pump_setpoint,
            "pump_inlet_mean": self.pump_inlet_mean,
            "pump_gain": self.pump_gain,
            "concentrate_gain": self.concentrate_gain,
            "edi_pressure_mean": self.edi_pressure_mean,
            "edi_pressure_gain": self.edi_pressure_gain,
        }
        for name, value in scalars.items():
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
        for name, value in (
            ("ro_rejection", self.ro_rejection),
            ("edi_rejection", self.edi_rejection),
        ):
            if not (math.isfinite(value) and 0.0 < value < 1.0):
                raise ValueError(f"{name} must lie strictly in (0, 1), got {value}")
        for ch in CHANNELS:
            std = self.noise_std.get(ch)
            if std is None or not math.isfinite(std) or std < 0.0:
                raise ValueError(f"noise_std[{ch.value}] must be finite and >= 0, got {std}")
            phi = self.ar_coefficient.get(ch)
            if phi is None or not (math.isfinite(phi) and 0.0 <= phi < 1.0):
                raise ValueError(
                    f"ar_coefficient[{ch.value}] must lie in [0, 1), got {phi}"
                )


class FaultKind(Enum):
    SENSOR_BIAS = "sensor_bias"
    LINEAR_DRIFT = "linear_drift"
    MEMBRANE_FOULING = "membrane_fouling"
    PUMP_DEGRADATION = "pump_degradation"
    OUTAGE = "outage"


#: Fault kinds whose target is a sensor channel rather than a component.
_CHANNEL_FAULTS = (FaultKind.SENSOR_BIAS, FaultKind.LINEAR_DRIFT)


@dataclass(frozen=True)
class FaultSpec:
    """One injected fault.

    ``magnitude`` is in channel units for bias/drift and a dimensionless
    fraction for fouling/degradation. ``ramp_minutes`` ramps the effect in
    linearly after onset (0 = full effect immediately); for outages it is the
    blackout duration.
    """

    kind: FaultKind
    onset: int
    magnitude: float = 0.0
    target: ChannelId | str | None = None
    ramp_minutes: int = 0

    def validate(self) -> None:
        if self.onset < 0:
            raise ValueError(f"fault onset must be >= 0, got {self.onset}")
        if not math.isfinite(self.magnitude):
            raise ValueError("fault magnitude must be finite")
        if self.ramp_minutes < 0:
            raise ValueError(f"ramp_minutes must be >= 0, got {self.ramp_minutes}")
        if self.kind in _CHANNEL_FAULTS and not isinstance(self.target, ChannelId):
            raise ValueError(f"{self.kind.value} requires a ChannelId target")


def _ar1(rng: np.random.Generator, n: int, std: float, phi: float) -> np.ndarray:
    """Stationary AR(1) noise: e[t] = phi*e[t-1] + std*sqrt(1-phi^2)*z[t]."""
    z = rng.standard_normal(n)
    if std == 0.0:
        return np.zeros(n)
    e = np.empty(n)
    e[0] = std * z[0]
    c = std * math.sqrt(1.0 - phi * phi)
    for t in range(1, n):
        e[t] = phi * e[t - 1] + c * z[t]
    return e


def simulate(config: PlantConfig, minutes: int) -> TimeSeriesDataset:
    """Generate `minutes` frames of normal operation, one per minute.

    Deterministic in ``config.seed``; all frames are labeled normal.
    """
    if minutes < 1:
        raise ValueError(f"minutes must be >= 1, got {minutes}")
    config.validate()

    rng = np.random.default_rng(config.seed)
    noise = {
        ch: _ar1(rng, minutes, config.noise_std[ch], config.ar_coefficient[ch])
        for ch in CHANNELS
    }

    values = np.empty((minutes, len(CHANNELS)))
    col = CHANNEL_INDEX
    pt_5_1 = config.pump_inlet_mean + noise[ChannelId.PT270_5_1]
    pt_5_4 = (
        config.pump_setpoint
        + config.pump_gain * (pt_5_1 - config.pump_inlet_mean)
        + noise[ChannelId.PT270_5_4]
    )
    qe_5_1 = (
        config.feed_conductivity_mean * (1.0 - config.ro_rejection)
        + noise[ChannelId.QE270_5_1]
    )
    qe_6_2 = (
        config.concentrate_gain * qe_5_1 * config.edi_rejection
        + noise[ChannelId.QE270_6_2]
    )
    pt_6_3 = (
        config.edi_pressure_mean
        + config.edi_pressure_gain * (pt_5_4 - config.pump_setpoint)
        + noise[ChannelId.PT270_6_3]
    )
    qe_6_1 = qe_5_1 * (1.0 - config.edi_rejection) + noise[ChannelId.QE270_6_1]

    values[:, col[ChannelId.PT270_5_1]] = pt_5_1
    values[:, col[ChannelId.PT270_5_4]] = pt_5_4
    values[:, col[ChannelId.QE270_5_1]] = qe_5_1
    values[:, col[ChannelId.QE270_6_2]] = qe_6_2
    values[:, col[ChannelId.PT270_6_3]] = pt_6_3
    values[:, col[ChannelId.QE270_6_1]] = qe_6_1

    return TimeSeriesDataset(
        t=np.arange(minutes, dtype=np.int64),
        values=values,
        labels=np.array([Label.NORMAL] * minutes, dtype=object),
        config=config,
        provenance=("simulated",),
    )


def _ramp_fraction(fault: FaultSpec, n: int) -> np.ndarray:
    """Per-frame effect fraction in [0, 1]; zero before onset."""
    idx = np.arange(n, dtype=np.float64)
    if fault.ramp_minutes > 0:
        frac = np.clip((idx - fault.onset) / fault.ramp_minutes, 0.0, 1.0)
    else:
        frac = np.ones(n)
    frac[idx < fault.onset] = 0.0
    return frac


def inject_fault(dataset: TimeSeriesDataset, fault: FaultSpec) -> TimeSeriesDataset:
    """Return a copy of `dataset` with the fault applied from its onset on.

    Frames at index >= onset are relabeled faulty, except outage frames, which
    become invalid with their values blanked. Process faults (fouling,
    degradation) rewrite the affected channels consistently with the
    simulator's stage equations.
    """
    fault.validate()
    n = len(dataset)
    if fault.onset >= n:
        raise ValueError(f"fault onset {fault.onset} outside dataset of length {n}")

    ds = dataset.copy()
    values, labels = ds.values, ds.labels
    col = CHANNEL_INDEX
    after = np.arange(n) >= fault.onset
    frac = _ramp_fraction(fault, n)

    if fault.kind is FaultKind.SENSOR_BIAS:
        values[after, col[fault.target]] += fault.magnitude

    elif fault.kind is FaultKind.LINEAR_DRIFT:
        values[:, col[fault.target]] += fault.magnitude * frac

    elif fault.kind is FaultKind.MEMBRANE_FOULING:
        cfg = dataset.config
        if cfg is None:
            raise ValueError(
                "membrane fouling needs the generating PlantConfig on the dataset"
            )
        # Lowered rejection passes extra feed ions; propagate the surplus
        # through the downstream stage equations.
        delta = cfg.feed_conductivity_mean * cfg.ro_rejection * fault.magnitude * frac
        values[:, col[ChannelId.QE270_5_1]] += delta
        values[:, col[ChannelId.QE270_6_2]] += cfg.concentrate_gain * delta * cfg.edi_rejection
        values[:, col[ChannelId.QE270_6_1]] += delta * (1.0 - cfg.edi_rejection)

    elif fault.kind is FaultKind.PUMP_DEGRADATION:
        # Worn pump loses head: output pressure relaxes toward the inlet.
        out = values[:, col[ChannelId.PT270_5_4]]
        inlet = values[:, col[ChannelId.PT270_5_1]]
        eff = fault.magnitude * frac
        values[:, col[ChannelId.PT270_5_4]] = out + eff * (inlet - out)

    elif fault.kind is FaultKind.OUTAGE:
        stop = min(n, fault.onset + fault.ramp_minutes)
        window = slice(fault.onset, stop)
        values[window] = np.nan
        labels[window] = Label.INVALID

    for i in np.flatnonzero(after):
        if labels[i] is not Label.INVALID:
            labels[i] = Label.FAULTY

    return replace(
        ds,
        values=values,
        labels=labels,
        provenance=dataset.provenance + (f"fault:{fault.kind.value}",),
    )
