"""Scenario construction and the JSON scenario file format.

A scenario holds K APs, the STAs associated with each AP, the radio
configuration and the seed that produced it. Generated scenarios put the
four APs on the corners of a square and drop each STA at a uniformly drawn
distance and angle from its AP.

Seeding: ``generate(seed)`` draws from ``numpy.random.default_rng(seed)``
(PCG64). Sweeps derive the seed of deployment ``i`` with
:func:`deployment_seed`, which is portable across machines and independent
of the distance being swept, so the same STA layout is reused at every
inter-AP distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, NamedTuple, Optional, Sequence

import numpy as np

from .config import ConfigError, RadioConfig, default_radio
from .radio import db_to_linear, path_loss

FORMAT_TAG = "csrwlan-scenario/1"


class PairId(NamedTuple):
    ap_id: int
    sta_id: int

    def __str__(self):
        return f"AP{self.ap_id}-STA{self.sta_id}"


class AccessPoint(NamedTuple):
    id: int
    x: float
    y: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


class Station(NamedTuple):
    id: int
    x: float
    y: float
    ap_id: int

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, eq=True)
class Deployment:
    aps: tuple[AccessPoint, ...]
    stas: tuple[Station, ...]
    radio: RadioConfig = field(default_factory=default_radio)
    seed: int = 0

    def __post_init__(self):
        ap_ids = [a.id for a in self.aps]
        if not ap_ids:
            raise ConfigError("deployment has no APs")
        if len(set(ap_ids)) != len(ap_ids):
            raise ConfigError(f"duplicate AP ids in {ap_ids}")
        sta_ids = [s.id for s in self.stas]
        if len(set(sta_ids)) != len(sta_ids):
            raise ConfigError("duplicate STA ids")
        known = set(ap_ids)
        for s in self.stas:
            if s.ap_id not in known:
                raise ConfigError(f"STA {s.id}: owner AP {s.ap_id} does not exist")
        for a in ap_ids:
            if not any(s.ap_id == a for s in self.stas):
                raise ConfigError(f"AP {a} has no associated STA")

    @property
    def k(self) -> int:
        return len(self.aps)

    def sta(self, sta_id: int) -> Station:
        for s in self.stas:
            if s.id == sta_id:
                return s
        raise KeyError(sta_id)

    def stas_of(self, ap_id: int) -> list[Station]:
        return [s for s in self.stas if s.ap_id == ap_id]

    @cached_property
    def pairs(self) -> list[PairId]:
        """All AP-STA pairs, ordered by AP then by STA id."""
        return [PairId(a.id, s.id) for a in self.aps for s in sorted(self.stas_of(a.id))]

    @property
    def stas_per_ap(self) -> dict[int, int]:
        return {a.id: len(self.stas_of(a.id)) for a in self.aps}

    def ap_distances(self) -> np.ndarray:
        pos = np.array([a.position for a in self.aps])
        return np.hypot(*(pos[:, None, :] - pos[None, :, :]).transpose(2, 0, 1))

    def rx_power_mw(self) -> np.ndarray:
        """Received power (mW) at every pair's STA from every AP; shape (K, n_pairs)."""
        ap_pos = np.array([a.position for a in self.aps])
        sta_pos = np.array([self.sta(p.sta_id).position for p in self.pairs])
        d = np.hypot(ap_pos[:, None, 0] - sta_pos[None, :, 0], ap_pos[:, None, 1] - sta_pos[None, :, 1])
        return db_to_linear(self.radio.eirp_dbm - path_loss(d, self.radio))

    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FORMAT_TAG,
            "seed": int(self.seed),
            "radio": self.radio.to_dict(),
            "aps": [{"id": a.id, "x": a.x, "y": a.y} for a in self.aps],
            "stas": [{"id": s.id, "x": s.x, "y": s.y, "ap": s.ap_id} for s in self.stas],
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any], radio: Optional[RadioConfig] = None) -> "Deployment":
        if not isinstance(raw, dict):
            raise ConfigError("scenario: expected a JSON object")
        aps = tuple(_parse_entry(e, i, "aps", ("id", "x", "y"), AccessPoint)
                    for i, e in enumerate(_list(raw, "aps")))
        stas = tuple(_parse_entry(e, i, "stas", ("id", "x", "y", "ap"), Station)
                     for i, e in enumerate(_list(raw, "stas")))
        if radio is None:
            radio = RadioConfig.from_dict(raw["radio"]) if "radio" in raw else default_radio()
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed: expected a non-negative integer")
        return cls(aps=aps, stas=stas, radio=radio, seed=seed)


def _list(raw: dict, key: str) -> list:
    if key not in raw:
        raise ConfigError(f"scenario: missing field '{key}'")
    val = raw[key]
    if not isinstance(val, list):
        raise ConfigError(f"scenario.{key}: expected a list")
    return val


def _parse_entry(e, i: int, section: str, keys: Sequence[str], ctor):
    label = f"{section}[{i}]" + (f" (id {e['id']})" if isinstance(e, dict) and "id" in e else "")
    if not isinstance(e, dict):
        raise ConfigError(f"{label}: expected an object")
    for key in keys:
        if key not in e:
            raise ConfigError(f"{label}: missing field '{key}'")
    try:
        vals = [int(e[k]) if k in ("id", "ap") else float(e[k]) for k in keys]
    except (TypeError, ValueError):
        raise ConfigError(f"{label}: non-numeric field") from None
    return ctor(*vals)


def square_positions(d_ap_ap: float) -> list[tuple[float, float]]:
    return [(0.0, 0.0), (d_ap_ap, 0.0), (d_ap_ap, d_ap_ap), (0.0, d_ap_ap)]


def generate(seed: int, k_aps: int = 4, stas_per_ap: int = 1, d_ap_ap: float = 10.0,
             d_sta_min: float = 1.0, d_sta_max: float = 5.0,
             radio: Optional[RadioConfig] = None,
             ap_positions: Optional[Sequence[tuple[float, float]]] = None) -> Deployment:
    """Random scenario: APs on square corners, STAs on an annulus around each AP."""
    if stas_per_ap < 1:
        raise ValueError("stas_per_ap must be >= 1")
    if not 0 < d_sta_min <= d_sta_max:
        raise ValueError("need 0 < d_sta_min <= d_sta_max")
    if ap_positions is None:
        if k_aps != 4:
            raise ValueError("only k_aps=4 has a built-in layout; pass ap_positions")
        if d_ap_ap <= 0:
            raise ValueError("d_ap_ap must be positive")
        ap_positions = square_positions(d_ap_ap)
    elif len(ap_positions) != k_aps:
        raise ValueError("len(ap_positions) must equal k_aps")

    rng = np.random.default_rng(seed)
    r = rng.uniform(d_sta_min, d_sta_max, size=(k_aps, stas_per_ap))
    theta = rng.uniform(0.0, 2.0 * math.pi, size=(k_aps, stas_per_ap))
    aps = tuple(AccessPoint(i + 1, float(x), float(y)) for i, (x, y) in enumerate(ap_positions))
    stas = []
    for k, ap in enumerate(aps):
        for s in range(stas_per_ap):
            stas.append(Station(
                id=k * stas_per_ap + s + 1,
                x=float(ap.x + r[k, s] * math.cos(theta[k, s])),
                y=float(ap.y + r[k, s] * math.sin(theta[k, s])),
                ap_id=ap.id,
            ))
    return Deployment(aps, tuple(stas), radio or default_radio(), int(seed))


def deployment_seed(base_seed: int, index: int) -> int:
    """Seed of the ``index``-th deployment of a sweep rooted at ``base_seed``."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def save(deployment: Deployment, path: str | Path) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(deployment.to_dict(), indent=2) + "\n")


def load(path: str | Path, radio: Optional[RadioConfig] = None) -> Deployment:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return Deployment.from_dict(raw, radio=radio)


def preset(name: str, radio: Optional[RadioConfig] = None) -> Deployment:
    """Bundled approximate look-alikes of the two illustrative deployments."""
    from importlib import resources

    fname = f"{name}.json"
    node = resources.files("csrwlan.data").joinpath("presets", fname)
    if not node.is_file():
        raise ValueError(f"unknown preset {name!r}; choose from {preset_names()}")
    return Deployment.from_dict(json.loads(node.read_text()), radio=radio)


def preset_names() -> list[str]:
    from importlib import resources

    root = resources.files("csrwlan.data").joinpath("presets")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
