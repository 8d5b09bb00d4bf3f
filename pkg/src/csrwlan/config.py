"""Radio, MAC timing and contention parameters, plus the JSON config loader.

Every value is in SI units (seconds, bits/s, meters) except the radio
quantities that are conventionally logarithmic (dB, dBm) and the carrier
frequency, which the path loss model takes in GHz.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional


class ConfigError(ValueError):
    """Raised when a config or scenario file is malformed."""


def thermal_noise_dbm(bandwidth_mhz: float, noise_figure_db: float = 7.0) -> float:
    return -174.0 + 10.0 * math.log10(bandwidth_mhz * 1e6) + noise_figure_db


@dataclass(frozen=True)
class McsEntry:
    index: int
    min_sinr_db: float
    data_rate_bps: float


@dataclass(frozen=True)
class RadioConfig:
    carrier_freq_ghz: float = 6.0
    breakpoint_dist_m: float = 3.0
    wall_count: int = 1
    eirp_dbm: float = 24.0
    bandwidth_mhz: float = 80.0
    spatial_streams: int = 2
    noise_floor_dbm: float = field(default_factory=lambda: thermal_noise_dbm(80.0))
    capture_threshold_db: float = 15.0
    mcs_table: tuple[McsEntry, ...] = ()
    # "rssi": in-group MCS from the interference-free link, SINR only gates
    # feasibility; "sinr": MCS from the SINR with all group members on air
    group_mcs_rule: str = "rssi"

    def __post_init__(self):
        if self.breakpoint_dist_m <= 0:
            raise ConfigError("breakpoint_dist_m must be positive")
        if self.capture_threshold_db < 0:
            raise ConfigError("capture_threshold_db must be >= 0")
        if self.wall_count < 0:
            raise ConfigError("wall_count must be >= 0")
        if not self.mcs_table:
            raise ConfigError("mcs_table must not be empty")
        for prev, cur in zip(self.mcs_table, self.mcs_table[1:]):
            if not (cur.min_sinr_db > prev.min_sinr_db and cur.data_rate_bps > prev.data_rate_bps):
                raise ConfigError(
                    f"mcs_table must be strictly ascending (MCS {prev.index} -> {cur.index})"
                )
        if any(e.data_rate_bps <= 0 for e in self.mcs_table):
            raise ConfigError("MCS data rates must be positive")
        if self.group_mcs_rule not in ("rssi", "sinr"):
            raise ConfigError("group_mcs_rule must be 'rssi' or 'sinr'")

    @property
    def thresholds_db(self) -> list[float]:
        return [e.min_sinr_db for e in self.mcs_table]

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["mcs_table"] = [asdict(e) for e in self.mcs_table]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RadioConfig":
        d = dict(d)
        try:
            table = tuple(
                McsEntry(int(e["index"]), float(e["min_sinr_db"]), float(e["data_rate_bps"]))
                for e in d.pop("mcs_table")
            )
        except KeyError as exc:
            raise ConfigError(f"radio.mcs_table: missing field {exc}") from None
        nf = d.pop("noise_figure_db", 7.0)
        if "noise_floor_dbm" not in d:
            d["noise_floor_dbm"] = thermal_noise_dbm(float(d.get("bandwidth_mhz", 80.0)), nf)
        known = set(cls.__dataclass_fields__) - {"mcs_table"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"radio: unknown field(s) {sorted(unknown)}")
        return cls(mcs_table=table, **d)


@dataclass(frozen=True)
class MacTiming:
    """Durations of the MAC exchange. ``t_share`` is the shared TXOP length."""

    t_empty: float = 9e-6
    t_collision: float = 137e-6
    t_sifs: float = 16e-6
    t_difs: float = 34e-6
    t_mapc: float = 286e-6
    t_back: float = 100e-6
    t_share: float = 5e-3
    payload_bytes: int = 1500
    max_ampdu: Optional[int] = None

    def __post_init__(self):
        for name in ("t_empty", "t_collision", "t_sifs", "t_difs", "t_mapc", "t_back",
                     "t_share", "payload_bytes"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"timing.{name} must be strictly positive")
        if self.t_share <= self.overhead(with_mapc=True):
            raise ConfigError("timing.t_share leaves no room for data")
        if self.max_ampdu is not None and self.max_ampdu < 1:
            raise ConfigError("timing.max_ampdu must be >= 1 when set")

    def overhead(self, with_mapc: bool = True) -> float:
        base = 2 * self.t_sifs + self.t_back + self.t_difs + self.t_empty
        return base + self.t_mapc if with_mapc else base

    def t_data(self, with_mapc: bool = True) -> float:
        return self.t_share - self.overhead(with_mapc)


@dataclass(frozen=True)
class ContentionParams:
    cw_min: int = 15
    stages: int = 6
    k: int = 4

    def __post_init__(self):
        if self.cw_min < 1:
            raise ConfigError("cw_min must be >= 1")
        if self.stages < 0:
            raise ConfigError("stages must be >= 0")
        if self.k < 1:
            raise ConfigError("k must be >= 1")


@dataclass(frozen=True)
class Config:
    radio: RadioConfig
    timing: MacTiming
    contention: ContentionParams


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key, {})
    if not isinstance(val, dict):
        raise ConfigError(f"{key}: expected an object")
    return val


def config_from_dict(raw: dict[str, Any]) -> Config:
    try:
        timing = MacTiming(**_section(raw, "timing"))
        contention = ContentionParams(**_section(raw, "contention"))
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return Config(RadioConfig.from_dict(_section(raw, "radio")), timing, contention)


def default_config_dict() -> dict[str, Any]:
    text = resources.files("csrwlan.data").joinpath("default_config.json").read_text()
    return json.loads(text)


def load_config(path: Optional[str | Path] = None) -> Config:
    """Load a config file; missing sections fall back to the bundled defaults."""
    raw = default_config_dict()
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        for key, val in user.items():
            if isinstance(val, dict) and isinstance(raw.get(key), dict):
                raw[key] = {**raw[key], **val}
            else:
                raw[key] = val
    return config_from_dict(raw)


def default_radio() -> RadioConfig:
    return load_config().radio
