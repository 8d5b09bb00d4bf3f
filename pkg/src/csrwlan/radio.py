"""Propagation, link budget, MCS selection and A-MPDU sizing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .config import MacTiming, McsEntry, RadioConfig

__all__ = [
    "LinkBudget",
    "McsEntry",
    "RadioConfig",
    "ampdu_packets",
    "db_to_linear",
    "link_budget",
    "linear_to_db",
    "packets_per_mcs",
    "path_loss",
    "rssi",
    "select_mcs",
    "sinr",
]


@dataclass(frozen=True)
class LinkBudget:
    rssi_dbm: float
    sinr_db: float
    mcs: Optional[int]
    rate_bps: float


def db_to_linear(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(np.asarray(x, dtype=float))


def path_loss(d, cfg: RadioConfig):
    """TGax enterprise path loss in dB. Distances below 1 m are clamped to 1 m.

    Accepts a scalar or an array of distances.
    """
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    bp = cfg.breakpoint_dist_m
    pl = 40.05 + 20.0 * np.log10(np.minimum(d, bp) * cfg.carrier_freq_ghz / 2.4)
    pl = pl + np.where(d > bp, 35.0 * np.log10(np.maximum(d, bp) / bp), 0.0)
    pl = pl + 7.0 * cfg.wall_count
    return float(pl) if pl.ndim == 0 else pl


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rssi(tx_pos: Sequence[float], rx_pos: Sequence[float], cfg: RadioConfig) -> float:
    return cfg.eirp_dbm - path_loss(distance(tx_pos, rx_pos), cfg)


def sinr(target_pair, active_aps: Iterable, deployment, cfg: Optional[RadioConfig] = None) -> float:
    """SINR in dB at the STA of ``target_pair`` with every AP in ``active_aps`` on air."""
    cfg = cfg or deployment.radio
    ap_id, sta_id = target_pair
    active = set(active_aps)
    if ap_id not in active:
        raise ValueError(f"target AP {ap_id} is not in the active set")
    sta_pos = deployment.sta(sta_id).position
    signal = 0.0
    interference = 0.0
    for ap in deployment.aps:
        if ap.id not in active:
            continue
        p = float(db_to_linear(rssi(ap.position, sta_pos, cfg)))
        if ap.id == ap_id:
            signal = p
        else:
            interference += p
    noise = float(db_to_linear(cfg.noise_floor_dbm))
    return float(linear_to_db(signal / (noise + interference)))


def select_mcs(sinr_db: float, cfg: RadioConfig) -> Optional[int]:
    """Highest MCS whose threshold is <= ``sinr_db``; ``None`` below the table."""
    best = None
    for entry in cfg.mcs_table:
        if entry.min_sinr_db <= sinr_db:
            best = entry.index
        else:
            break
    return best


def mcs_rate(mcs: int, cfg: RadioConfig) -> float:
    for entry in cfg.mcs_table:
        if entry.index == mcs:
            return entry.data_rate_bps
    raise ValueError(f"MCS {mcs} not in table")


def ampdu_packets(mcs: int, mac: MacTiming, payload_bytes: Optional[int] = None,
                  cfg: Optional[RadioConfig] = None, *, rate_bps: Optional[float] = None,
                  with_mapc: bool = True) -> int:
    """Number of ``payload_bytes`` frames that fit in the data part of the TXOP.

    The data airtime is what remains of ``t_share`` after the coordination
    phase, two SIFS, the block ACK, DIFS and the trailing empty slot.
    ``with_mapc=False`` drops the coordination phase (legacy DCF exchange).
    Pass either ``cfg`` (rate looked up from the MCS table) or ``rate_bps``.
    """
    if rate_bps is None:
        if cfg is None:
            raise ValueError("either cfg or rate_bps is required")
        rate_bps = mcs_rate(mcs, cfg)
    payload_bytes = mac.payload_bytes if payload_bytes is None else payload_bytes
    t_data = mac.t_data(with_mapc)
    if t_data <= 0:
        raise ValueError(f"no data airtime left in the TXOP (T_DATA = {t_data:g} s)")
    # rate * t_data is rounded first so that exact multiples of the frame size
    # are not lost to binary representation error
    bits = round(rate_bps * t_data, 6)
    n = int(bits // (8 * payload_bytes))
    if mac.max_ampdu is not None:
        n = min(n, mac.max_ampdu)
    return max(n, 0)


def packets_per_mcs(cfg: RadioConfig, mac: MacTiming, with_mapc: bool = True) -> np.ndarray:
    """Lookup array: entry ``i`` is the A-MPDU size at the i-th table row."""
    return np.array(
        [ampdu_packets(e.index, mac, cfg=cfg, with_mapc=with_mapc) for e in cfg.mcs_table],
        dtype=np.int64,
    )


def mcs_rows(sinr_db, cfg: RadioConfig) -> np.ndarray:
    """Vectorized table lookup: row position in ``cfg.mcs_table`` or -1."""
    thresholds = np.asarray(cfg.thresholds_db)
    return np.searchsorted(thresholds, np.asarray(sinr_db, dtype=float), side="right") - 1


def link_budget(tx_pos, rx_pos, cfg: RadioConfig, interference_mw: float = 0.0) -> LinkBudget:
    r = rssi(tx_pos, rx_pos, cfg)
    noise = float(db_to_linear(cfg.noise_floor_dbm))
    s = float(linear_to_db(db_to_linear(r) / (noise + interference_mw)))
    mcs = select_mcs(s, cfg)
    rate = mcs_rate(mcs, cfg) if mcs is not None else 0.0
    return LinkBudget(r, s, mcs, rate)
