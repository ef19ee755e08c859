"""Residual thresholding and streaming alarm logic.

The decision signal is the residual between a component's measured output and
the identifier's one-step prediction. A fixed band is calibrated once from
normal-operation residuals as mean +- zeta * std; an adaptive band recomputes
the same statistics over the trailing window at every step. Alarms are
debounced (c consecutive out-of-band residuals) and latch until reset.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .dataset import TimeSeriesDataset
from .validation import as_series


def residual(y_out: float, y_nn: float) -> float:
    """Measured output minus model prediction."""
    return y_out - y_nn


@dataclass(frozen=True)
class ThresholdBand:
    """Symmetric decision band center +- spread (closed interval)."""

    center: float
    spread: float
    lower: float = field(init=False)
    upper: float = field(init=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and math.isfinite(self.spread)):
            raise ValueError("band parameters must be finite")
        if self.spread < 0:
            raise ValueError(f"spread must be >= 0, got {self.spread}")
        object.__setattr__(self, "lower", self.center - self.spread)
        object.__setattr__(self, "upper", self.center + self.spread)

    @classmethod
    def from_edges(cls, lower: float, upper: float) -> "ThresholdBand":
        """Band with exactly these edges (round-trip safe for parsed logs)."""
        if not lower <= upper:
            raise ValueError(f"need lower <= upper, got [{lower}, {upper}]")
        band = cls(center=(lower + upper) / 2.0, spread=(upper - lower) / 2.0)
        object.__setattr__(band, "lower", lower)
        object.__setattr__(band, "upper", upper)
        return band

    def contains(self, r: float) -> bool:
        return self.lower <= r <= self.upper


def fixed_band(training_residuals, zeta: float) -> ThresholdBand:
    """Calibrate mean +- zeta * (unbiased) standard deviation."""
    r = as_series(training_residuals, "residuals")
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if len(r) < 2:
        raise ValueError("need at least 2 residuals to calibrate a band")
    m = float(np.mean(r))
    v = float(np.std(r, ddof=1))
    return ThresholdBand(center=m, spread=zeta * v)


def empirical_max_band(training_residuals) -> ThresholdBand:
    """Alternative calibration: zero-centered band at the largest observed
    |residual|, the 'never exceeded in normal operation' reading."""
    r = as_series(training_residuals, "residuals")
    if len(r) < 1:
        raise ValueError("need at least 1 residual")
    return ThresholdBand(center=0.0, spread=float(np.max(np.abs(r))))


def adaptive_band(window, zeta: float) -> ThresholdBand:
    """Band from the trailing window: windowed mean +- zeta * windowed std."""
    r = as_series(window, "window")
    if zeta <= 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    if len(r) < 2:
        raise ValueError(f"window must hold at least 2 samples, got {len(r)}")
    m = float(np.mean(r))
    v = float(np.std(r, ddof=1))
    return ThresholdBand(center=m, spread=zeta * v)


class Mode(Enum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class MonitorConfig:
    """zeta scales the band, window is the adaptive history length, debounce
    is the number of consecutive out-of-band samples required to alarm."""

    zeta: float = 3.0
    window: int = 60
    mode: Mode = Mode.FIXED
    debounce: int = 5

    def validate(self) -> None:
        if not (math.isfinite(self.zeta) and self.zeta > 0):
            raise ValueError(f"zeta must be positive, got {self.zeta}")
        if self.window < 2:
            raise ValueError(f"window must be >= 2, got {self.window}")
        if self.debounce < 1:
            raise ValueError(f"debounce must be >= 1, got {self.debounce}")


@dataclass(frozen=True)
class AlarmEvent:
    component: str
    timestamp: int
    residual: float
    band: ThresholdBand
    mode: Mode


class Monitor:
    """Streaming per-component detector; single-owner, mutated only by step().

    In fixed mode residuals are judged against the calibration band. In
    adaptive mode each residual is judged against the band of the previous
    `window` residuals (never including itself), so an anomalous sample cannot
    mask its own detection; until the buffer fills the monitor is warming up
    and makes no decision. The alarm latches on the debounce-th consecutive
    out-of-band sample and stays latched until reset(); with ``latch=False``
    every out-of-band run re-emits instead.
    """

    def __init__(
        self,
        component: str,
        config: MonitorConfig | None = None,
        fixed: ThresholdBand | None = None,
        latch: bool = True,
    ):
        self.component = component
        self.config = config or MonitorConfig()
        self.config.validate()
        if self.config.mode is Mode.FIXED and fixed is None:
            raise ValueError("fixed mode requires a calibrated band")
        self.fixed_band = fixed
        self.latch = latch
        self.buffer: deque[float] = deque(maxlen=self.config.window)
        self.consecutive_out = 0
        self.alarmed = False
        self.last_band: ThresholdBand | None = None

    @property
    def warming_up(self) -> bool:
        return (
            self.config.mode is Mode.ADAPTIVE
            and len(self.buffer) < self.config.window
        )

    def reset(self) -> None:
        """Clear the latch, the debounce counter, and the residual history."""
        self.buffer.clear()
        self.consecutive_out = 0
        self.alarmed = False
        self.last_band = None

    def step(self, k: int, r: float) -> AlarmEvent | None:
        """Consume one residual; return an AlarmEvent when the alarm latches."""
        if self.config.mode is Mode.FIXED:
            band = self.fixed_band
            if band is None:
                raise RuntimeError("fixed-mode monitor has no calibration band")
        elif self.warming_up:
            self.buffer.append(r)
            self.last_band = None
            return None
        else:
            band = adaptive_band(np.fromiter(self.buffer, dtype=np.float64), self.config.zeta)
        self.buffer.append(r)
        self.last_band = band

        if band.contains(r):
            self.consecutive_out = 0
            if not self.latch:
                self.alarmed = False
            return None
        self.consecutive_out = min(self.consecutive_out + 1, self.config.debounce)
        if self.consecutive_out < self.config.debounce or self.alarmed:
            return None
        self.alarmed = True
        return AlarmEvent(
            component=self.component,
            timestamp=int(k),
            residual=float(r),
            band=band,
            mode=self.config.mode,
        )

    def run(self, timestamps, residuals) -> list[AlarmEvent]:
        """Feed a whole residual series; collect emitted alarms."""
        events = []
        for k, r in zip(timestamps, residuals):
            event = self.step(int(k), float(r))
            if event is not None:
                events.append(event)
        return events


def cumulative_alarm(monitors: list[Monitor]) -> bool:
    """OR of all per-component alarm flags."""
    if not monitors:
        raise ValueError("need at least one monitor")
    return any(m.alarmed for m in monitors)


@dataclass(frozen=True)
class DetectionMetrics:
    detected: bool
    detection_delay: int | None
    false_alarms: int
    false_alarm_rate: float

    def __str__(self) -> str:
        delay = "-" if self.detection_delay is None else str(self.detection_delay)
        return (
            f"detected={str(self.detected).lower()} delay={delay} "
            f"false_alarms={self.false_alarms} "
            f"false_alarm_rate={self.false_alarm_rate:.6g}"
        )


def evaluate(
    alarms: list[AlarmEvent], ground_truth: TimeSeriesDataset, onset: int
) -> DetectionMetrics:
    """Score an alarm log against a known fault onset.

    Alarms at or after the onset count as detections (delay = first such alarm
    minus onset); earlier alarms are false, rated per pre-onset minute.
    """
    t0, t1 = int(ground_truth.t[0]), int(ground_truth.t[-1])
    if not t0 <= onset <= t1:
        raise ValueError(f"onset {onset} outside stream [{t0}, {t1}]")
    detections = sorted(a.timestamp for a in alarms if a.timestamp >= onset)
    false_alarms = sum(1 for a in alarms if a.timestamp < onset)
    pre_minutes = onset - t0
    rate = false_alarms / pre_minutes if pre_minutes > 0 else 0.0
    return DetectionMetrics(
        detected=bool(detections),
        detection_delay=(detections[0] - onset) if detections else None,
        false_alarms=false_alarms,
        false_alarm_rate=rate,
    )


# -- alarm log serialization ----------------------------------------------------

ALARM_HEADER = "component,t,residual,lower,upper,mode"


def write_alarms(alarms: list[AlarmEvent], path: str | Path) -> None:
    lines = [ALARM_HEADER]
    for a in alarms:
        lines.append(
            ",".join(
                [
                    a.component,
                    str(int(a.timestamp)),
                    repr(float(a.residual)),
                    repr(float(a.band.lower)),
                    repr(float(a.band.upper)),
                    a.mode.value,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_alarms(path: str | Path) -> list[AlarmEvent]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ALARM_HEADER:
        raise ValueError(f"unrecognized alarm log header in {path}")
    alarms = []
    for line in lines[1:]:
        if not line:
            continue
        component, t, r, lower, upper, mode = line.split(",")
        alarms.append(
            AlarmEvent(
                component=component,
                timestamp=int(t),
                residual=float(r),
                band=ThresholdBand.from_edges(float(lower), float(upper)),
                mode=Mode(mode),
            )
        )
    return alarms
