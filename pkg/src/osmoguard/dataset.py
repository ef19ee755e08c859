"""Sensor channel schema and the time-series container shared by the whole toolkit.

The plant exposes six monitored channels, sampled once per minute. A dataset is
an ordered run of frames; each frame carries one value per channel plus a label
(``normal``, ``faulty``, or ``invalid`` for frames lost to outages/shutdowns).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterator

import numpy as np

if TYPE_CHECKING:
    from .simulator import PlantConfig


class ChannelId(Enum):
    """The six monitored sensors, in canonical column order."""

    PT270_5_1 = "pt270_5_1"  # pressure before the frequency-regulated pump [bar]
    PT270_5_4 = "pt270_5_4"  # pressure after the pump [bar]
    QE270_5_1 = "qe270_5_1"  # conductivity after reverse osmosis [uS/cm]
    QE270_6_2 = "qe270_6_2"  # conductivity of the concentrate loop [uS/cm]
    PT270_6_3 = "pt270_6_3"  # pressure at the EDI stage [bar]
    QE270_6_1 = "qe270_6_1"  # conductivity of EDI output to the tank [uS/cm]


#: Canonical channel order used for array columns and CSV files.
CHANNELS: tuple[ChannelId, ...] = tuple(ChannelId)

#: Column index of each channel inside a dataset's value matrix.
CHANNEL_INDEX: dict[ChannelId, int] = {ch: i for i, ch in enumerate(CHANNELS)}

PRESSURE_CHANNELS = (ChannelId.PT270_5_1, ChannelId.PT270_5_4, ChannelId.PT270_6_3)
CONDUCTIVITY_CHANNELS = (ChannelId.QE270_5_1, ChannelId.QE270_6_2, ChannelId.QE270_6_1)


class Label(Enum):
    NORMAL = "normal"
    FAULTY = "faulty"
    INVALID = "invalid"


@dataclass(frozen=True)
class SensorFrame:
    """One timestamped reading of all six channels."""

    timestamp: int
    values: dict[ChannelId, float]
    label: Label = Label.NORMAL

    @property
    def valid(self) -> bool:
        return self.label is not Label.INVALID


def _format_value(x: float) -> str:
    # repr() emits the shortest decimal that round-trips to the exact float,
    # so written files reload bit-identically.
    return repr(float(x))


@dataclass
class TimeSeriesDataset:
    """Ordered run of sensor frames backed by numpy arrays.

    ``values`` has one row per frame and one column per channel in
    ``CHANNELS`` order. Timestamps are integer minutes and must strictly
    increase; consecutive-by-one is guaranteed for freshly simulated data but
    not after cleansing. ``config`` records the generating plant parameters
    when known, ``provenance`` the processing steps applied so far.
    """

    t: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    config: "PlantConfig | None" = None
    provenance: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.labels is None:
            self.labels = np.array([Label.NORMAL] * len(self.t), dtype=object)
        else:
            self.labels = np.asarray(self.labels, dtype=object)
        if self.values.ndim != 2 or self.values.shape[1] != len(CHANNELS):
            raise ValueError(
                f"values must be (n, {len(CHANNELS)}), got {self.values.shape}"
            )
        n = len(self.t)
        if self.values.shape[0] != n or self.labels.shape[0] != n:
            raise ValueError("t, values and labels must have equal length")
        if n > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        # Non-finite values are tolerated here: raw recordings may carry
        # unflagged glitches, which is exactly what cleansing removes.

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self) -> Iterator[SensorFrame]:
        return (self.frame(i) for i in range(len(self)))

    def frame(self, i: int) -> SensorFrame:
        row = self.values[i]
        return SensorFrame(
            timestamp=int(self.t[i]),
            values={ch: float(row[j]) for j, ch in enumerate(CHANNELS)},
            label=self.labels[i],
        )

    def channel(self, ch: ChannelId) -> np.ndarray:
        """Read-only view of one channel's series."""
        return self.values[:, CHANNEL_INDEX[ch]]

    def valid_mask(self) -> np.ndarray:
        return np.array([lab is not Label.INVALID for lab in self.labels])

    def copy(self) -> "TimeSeriesDataset":
        return replace(
            self, t=self.t.copy(), values=self.values.copy(), labels=self.labels.copy()
        )

    def with_provenance(self, step: str) -> "TimeSeriesDataset":
        return replace(self, provenance=self.provenance + (step,))

    # -- CSV serialization ---------------------------------------------------
    # Schema: header `t,pt270_5_1,pt270_5_4,qe270_5_1,qe270_6_2,pt270_6_3,
    # qe270_6_1,label`, one row per minute, label in {normal, faulty, invalid}.
    # Values are written with full round-trip precision.

    CSV_HEADER = "t," + ",".join(ch.value for ch in CHANNELS) + ",label"

    def to_csv(self, path: str | Path) -> None:
        lines = [self.CSV_HEADER]
        for i in range(len(self)):
            cells = [str(int(self.t[i]))]
            cells.extend(_format_value(v) for v in self.values[i])
            cells.append(self.labels[i].value)
            lines.append(",".join(cells))
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path) -> "TimeSeriesDataset":
        text = Path(path).read_text(encoding="utf-8")
        lines = [ln for ln in text.splitlines() if ln]
        if not lines or lines[0] != cls.CSV_HEADER:
            raise ValueError(f"unrecognized dataset header in {path}")
        n = len(lines) - 1
        t = np.empty(n, dtype=np.int64)
        values = np.empty((n, len(CHANNELS)), dtype=np.float64)
        labels = np.empty(n, dtype=object)
        for i, line in enumerate(lines[1:]):
            cells = line.split(",")
            if len(cells) != len(CHANNELS) + 2:
                raise ValueError(f"malformed row {i + 1} in {path}")
            t[i] = int(cells[0])
            values[i] = [float(c) for c in cells[1 : 1 + len(CHANNELS)]]
            labels[i] = Label(cells[-1])
        return cls(t=t, values=values, labels=labels)


def concat(datasets: list[TimeSeriesDataset]) -> TimeSeriesDataset:
    """Stack runs end to end, re-numbering timestamps to stay increasing."""
    if not datasets:
        raise ValueError("need at least one dataset")
    t_parts, offset = [], 0
    for ds in datasets:
        t_parts.append(ds.t - ds.t[0] + offset)
        offset = t_parts[-1][-1] + 1
    return TimeSeriesDataset(
        t=np.concatenate(t_parts),
        values=np.concatenate([ds.values for ds in datasets]),
        labels=np.concatenate([ds.labels for ds in datasets]),
        provenance=("concatenated",),
    )
