"""Flat `key = value` run-configuration files.

Sections are dotted key prefixes (`plant.seed = 42`, `monitor.zeta = 3.0`,
`monitor.pump.zeta = 2.5` for per-component overrides). Command-line flags
always win over file keys. The environment variable OSMOGUARD_CONFIG names a
default file used when --config is not given.
"""

from __future__ import annotations

import os
from pathlib import Path

from .dataset import ChannelId
from .detect import Mode, MonitorConfig
from .identify import TrainConfig
from .preprocessing import SavGolSpec
from .simulator import FaultKind, FaultSpec, PlantConfig

CONFIG_ENV_VAR = "OSMOGUARD_CONFIG"


def read_config(path: str | Path) -> dict[str, str]:
    """Parse a flat config file; `#` starts a comment, blank lines ignored."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.strip()
    return entries


def load_config(explicit_path: str | None) -> dict[str, str]:
    path = explicit_path or os.environ.get(CONFIG_ENV_VAR)
    return read_config(path) if path else {}


def _get(cfg: dict[str, str], key: str, default, cast):
    if key not in cfg:
        return default
    raw = cfg[key]
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ValueError(f"invalid value for {key}: {raw!r}") from None


def _bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(raw)


def _channel(raw: str) -> ChannelId:
    try:
        return ChannelId(raw.lower())
    except ValueError:
        raise ValueError(f"unknown channel {raw!r}") from None


def plant_config_from(cfg: dict[str, str], seed: int | None = None) -> PlantConfig:
    base = PlantConfig()
    noise = dict(base.noise_std)
    ar = dict(base.ar_coefficient)
    for ch in ChannelId:
        noise[ch] = _get(cfg, f"plant.noise_std.{ch.value}", noise[ch], float)
        ar[ch] = _get(cfg, f"plant.ar.{ch.value}", ar[ch], float)
    return PlantConfig(
        feed_conductivity_mean=_get(
            cfg, "plant.feed_conductivity_mean", base.feed_conductivity_mean, float
        ),
        pump_setpoint=_get(cfg, "plant.pump_setpoint", base.pump_setpoint, float),
        pump_inlet_mean=_get(cfg, "plant.pump_inlet_mean", base.pump_inlet_mean, float),
        pump_gain=_get(cfg, "plant.pump_gain", base.pump_gain, float),
        ro_rejection=_get(cfg, "plant.ro_rejection", base.ro_rejection, float),
        edi_rejection=_get(cfg, "plant.edi_rejection", base.edi_rejection, float),
        concentrate_gain=_get(cfg, "plant.concentrate_gain", base.concentrate_gain, float),
        edi_pressure_mean=_get(cfg, "plant.edi_pressure_mean", base.edi_pressure_mean, float),
        edi_pressure_gain=_get(cfg, "plant.edi_pressure_gain", base.edi_pressure_gain, float),
        noise_std=noise,
        ar_coefficient=ar,
        seed=seed if seed is not None else _get(cfg, "plant.seed", base.seed, int),
    )


def fault_from_mapping(fields: dict[str, str], origin: str) -> FaultSpec:
    known = {"kind", "target", "onset", "magnitude", "ramp_minutes", "ramp"}
    unknown = set(fields) - known
    if unknown:
        raise ValueError(f"{origin}: unknown fault fields {sorted(unknown)}")
    if "kind" not in fields or "onset" not in fields:
        raise ValueError(f"{origin}: a fault needs at least kind and onset")
    try:
        kind = FaultKind(fields["kind"].lower())
    except ValueError:
        raise ValueError(f"{origin}: unknown fault kind {fields['kind']!r}") from None
    target: ChannelId | str | None = fields.get("target")
    if target is not None:
        try:
            target = _channel(target)
        except ValueError:
            pass  # component-name targets (e.g. "ro") stay as strings
    ramp = fields.get("ramp_minutes", fields.get("ramp", "0"))
    try:
        return FaultSpec(
            kind=kind,
            onset=int(fields["onset"]),
            magnitude=float(fields.get("magnitude", "0")),
            target=target,
            ramp_minutes=int(ramp),
        )
    except ValueError as exc:
        raise ValueError(f"{origin}: {exc}") from None


def fault_from_flag(flag: str) -> FaultSpec:
    """Parse a --fault flag like
    `kind=sensor_bias,target=pt270_5_4,onset=50,magnitude=0.3,ramp=10`."""
    fields: dict[str, str] = {}
    for part in flag.split(","):
        if "=" not in part:
            raise ValueError(f"--fault: expected key=value, got {part!r}")
        key, value = part.split("=", 1)
        fields[key.strip()] = value.strip()
    return fault_from_mapping(fields, "--fault")


def faults_from_config(cfg: dict[str, str]) -> list[FaultSpec]:
    fields = {
        key.split(".", 1)[1]: value
        for key, value in cfg.items()
        if key.startswith("fault.")
    }
    return [fault_from_mapping(fields, "config")] if fields else []


def savgol_from(cfg: dict[str, str], window: int | None, order: int | None) -> SavGolSpec:
    base = SavGolSpec()
    return SavGolSpec(
        window=window if window is not None else _get(cfg, "savgol.window", base.window, int),
        order=order if order is not None else _get(cfg, "savgol.order", base.order, int),
    )


def train_config_from(cfg: dict[str, str], **overrides) -> TrainConfig:
    base = TrainConfig()
    values = {
        "learning_rate": _get(cfg, "train.learning_rate", base.learning_rate, float),
        "epochs": _get(cfg, "train.epochs", base.epochs, int),
        "batch_size": _get(cfg, "train.batch_size", base.batch_size, int),
        "seed": _get(cfg, "train.seed", base.seed, int),
        "train_fraction": _get(cfg, "train.train_fraction", base.train_fraction, float),
        "shuffle": _get(cfg, "train.shuffle", base.shuffle, _bool),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def monitor_config_from(
    cfg: dict[str, str], component: str | None = None, **overrides
) -> MonitorConfig:
    base = MonitorConfig()

    def lookup(key: str, default, cast):
        value = _get(cfg, f"monitor.{key}", default, cast)
        if component is not None:
            value = _get(cfg, f"monitor.{component}.{key}", value, cast)
        return value

    values = {
        "zeta": lookup("zeta", base.zeta, float),
        "window": lookup("window", base.window, int),
        "mode": lookup("mode", base.mode, lambda raw: Mode(raw.lower())),
        "debounce": lookup("debounce", base.debounce, int),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    return MonitorConfig(**values)


def cleanse_ranges_from(cfg: dict[str, str]) -> dict[ChannelId, tuple[float, float]]:
    """Per-channel `cleanse.<channel> = lo,hi` overrides."""
    ranges: dict[ChannelId, tuple[float, float]] = {}
    for key, value in cfg.items():
        if not key.startswith("cleanse."):
            continue
        ch = _channel(key.split(".", 1)[1])
        parts = value.split(",")
        if len(parts) != 2:
            raise ValueError(f"invalid value for {key}: {value!r} (expected `lo,hi`)")
        try:
            ranges[ch] = (float(parts[0]), float(parts[1]))
        except ValueError:
            raise ValueError(f"invalid value for {key}: {value!r}") from None
    return ranges
