"""Saturation throughput of C-SR on top of DCF (Bianchi model with group TXOPs).

All APs share one contention process. A success slot fires one group; the
group is chosen with probability ``phi_i`` and every member delivers its
A-MPDU in the same slot, so the throughput is driven by the mean number of
packets carried per success. With one pair per group the model reduces to
plain DCF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .config import ContentionParams, MacTiming
from .deployment import Deployment, PairId
from .groups import GroupSet, form_groups, singleton_groups

__all__ = [
    "ContentionParams",
    "FixedPoint",
    "FixedPointError",
    "MacTiming",
    "SlotStats",
    "ThroughputReport",
    "aggregate_throughput",
    "analyze",
    "classic_dcf_throughput",
    "collision_probability",
    "dcf_baseline",
    "evaluate",
    "expected_backoff",
    "per_pair_throughput",
    "slot_stats",
    "solve_fixed_point",
]

# below this distance from p = 1/2 the closed form is replaced by its polynomial
_SINGULAR_BAND = 1e-6


class FixedPointError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class FixedPoint:
    tau: float
    p: float
    expected_backoff: float
    residual: float
    iterations: int = 0


@dataclass(frozen=True)
class SlotStats:
    p_empty: float
    p_success: float
    p_collision: float
    expected_slot: float


@dataclass
class ThroughputReport:
    aggregate_bps: float
    per_pair_bps: dict[PairId, float]
    baseline_bps: float
    gain: float
    baseline_per_pair_bps: dict[PairId, float] = field(default_factory=dict)
    fixed_point: Optional[FixedPoint] = None
    slots: Optional[SlotStats] = None

    def to_dict(self) -> dict:
        out = {
            "aggregate_bps": self.aggregate_bps,
            "baseline_bps": self.baseline_bps,
            "gain": self.gain,
            "per_pair_bps": [
                {"ap": p.ap_id, "sta": p.sta_id, "bps": v,
                 "baseline_bps": self.baseline_per_pair_bps.get(p)}
                for p, v in sorted(self.per_pair_bps.items())
            ],
        }
        if self.fixed_point is not None:
            fp = self.fixed_point
            out["fixed_point"] = {"tau": fp.tau, "p": fp.p, "expected_backoff": fp.expected_backoff,
                                  "residual": fp.residual}
        if self.slots is not None:
            s = self.slots
            out["slots"] = {"p_empty": s.p_empty, "p_success": s.p_success,
                            "p_collision": s.p_collision, "expected_slot_s": s.expected_slot}
        return out


def expected_backoff(p: float, cw_min: int, stages: int) -> float:
    """Mean backoff (slots) per attempt under BEB with infinite retries."""
    if abs(1.0 - 2.0 * p) < _SINGULAR_BAND:
        # (1 - p - p(2p)^m)/(1 - 2p) == (1 - p) * sum_{s<m} (2p)^s + (2p)^m
        x = 2.0 * p
        ratio = (1.0 - p) * sum(x**s for s in range(stages)) + x**stages
    else:
        ratio = (1.0 - p - p * (2.0 * p) ** stages) / (1.0 - 2.0 * p)
    return (cw_min + 1) / 2.0 * ratio - 0.5


def collision_probability(tau: float, k: int) -> float:
    return 1.0 - (1.0 - tau) ** (k - 1)


def _tau_of(p: float, params: ContentionParams) -> float:
    return 1.0 / (expected_backoff(p, params.cw_min, params.stages) + 1.0)


def solve_fixed_point(params: ContentionParams, tol: float = 1e-12, max_iter: int = 10_000,
                      tau0: Optional[float] = None, damping: float = 0.5) -> FixedPoint:
    """Solve tau = 1/(E[B](p) + 1), p = 1 - (1 - tau)^(K-1).

    Damped iteration on p, falling back to bisection on the scalar
    residual if the iteration has not settled within ``max_iter`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    k = params.k
    if k == 1:
        eb = expected_backoff(0.0, params.cw_min, params.stages)
        return FixedPoint(1.0 / (eb + 1.0), 0.0, eb, 0.0, 0)

    def gap(p):
        return p - collision_probability(_tau_of(p, params), k)

    if tau0 is None:
        tau0 = 2.0 / (params.cw_min + 2.0)
    p = collision_probability(tau0, k)
    res = abs(gap(p))
    it = 0
    while not res < tol and it < max_iter:
        p = (1.0 - damping) * p + damping * collision_probability(_tau_of(p, params), k)
        res = abs(gap(p))
        it += 1

    if not res < tol:  # also catches NaN
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if gap(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 2e-16:
                break
            it += 1
        p = lo if abs(gap(lo)) <= abs(gap(hi)) else hi
        res = abs(gap(p))
        if not res < tol:
            raise FixedPointError("fixed point did not converge", res)

    tau = _tau_of(p, params)
    eb = expected_backoff(p, params.cw_min, params.stages)
    return FixedPoint(tau, p, eb, res, it)


def _mean_share_time(group_set: GroupSet, timing: MacTiming,
                     durations: Optional[list[float]] = None) -> float:
    if durations is None:
        durations = [timing.t_share] * len(group_set)
    return float(sum((phi * Fraction(t) for phi, t in zip(group_set.phi, durations)), Fraction(0)))


def slot_stats(fp: FixedPoint, params: ContentionParams, timing: MacTiming,
               group_set: GroupSet, durations: Optional[list[float]] = None) -> SlotStats:
    """Slot class probabilities and the mean slot length.

    ``durations`` gives one success duration per group; by default every
    group holds the channel for ``timing.t_share``.
    """
    k, tau = params.k, fp.tau
    p_e = (1.0 - tau) ** k
    p_s = k * tau * (1.0 - tau) ** (k - 1)
    p_c = 0.0 if k == 1 else max(0.0, 1.0 - p_e - p_s)
    e_t = p_e * timing.t_empty + p_s * _mean_share_time(group_set, timing, durations) \
        + p_c * timing.t_collision
    return SlotStats(p_e, p_s, p_c, e_t)


def _mean_packets(group_set: GroupSet, pair: Optional[PairId] = None) -> Fraction:
    total = Fraction(0)
    for g, phi in group_set:
        if pair is None:
            n = sum(g.per_member[m].n_packets for m in g.members)
        elif pair in g.members:
            n = g.per_member[pair].n_packets
        else:
            continue
        total += phi * n
    return total


def _throughput(p_s: float, payload_bits: int, packets: float, e_t: float) -> float:
    # shared by the C-SR and classic DCF paths so both round identically
    return p_s * payload_bits * packets / e_t


def aggregate_throughput(fp: FixedPoint, stats: SlotStats, group_set: GroupSet,
                         timing: MacTiming) -> float:
    return _throughput(stats.p_success, 8 * timing.payload_bytes,
                       float(_mean_packets(group_set)), stats.expected_slot)


def per_pair_throughput(fp: FixedPoint, stats: SlotStats, group_set: GroupSet,
                        timing: MacTiming) -> dict[PairId, float]:
    return {
        p: _throughput(stats.p_success, 8 * timing.payload_bytes,
                       float(_mean_packets(group_set, p)), stats.expected_slot)
        for p in group_set.pairs
    }


def evaluate(group_set: GroupSet, timing: MacTiming, params: ContentionParams,
             fp: Optional[FixedPoint] = None) -> tuple[float, dict[PairId, float], FixedPoint, SlotStats]:
    fp = fp or solve_fixed_point(params)
    stats = slot_stats(fp, params, timing, group_set)
    return (aggregate_throughput(fp, stats, group_set, timing),
            per_pair_throughput(fp, stats, group_set, timing), fp, stats)


def classic_dcf_throughput(tau: float, k: int, timing: MacTiming,
                           packets_by_ap: list[list[int]]) -> float:
    """Plain Bianchi saturation throughput, one station per AP.

    Each AP serves its STAs round-robin-at-random, so its mean payload per
    success is the average A-MPDU over its STAs; the channel-wide payload
    is the average over APs.
    """
    p_e = (1.0 - tau) ** k
    p_s = k * tau * (1.0 - tau) ** (k - 1)
    p_c = 0.0 if k == 1 else max(0.0, 1.0 - p_e - p_s)
    mean = sum((Fraction(sum(ns), len(ns)) for ns in packets_by_ap), Fraction(0)) / k
    e_t = p_e * timing.t_empty + p_s * timing.t_share + p_c * timing.t_collision
    return _throughput(p_s, 8 * timing.payload_bytes, float(mean), e_t)


def _params_for(deployment: Deployment, params: ContentionParams) -> ContentionParams:
    return params if params.k == deployment.k else replace(params, k=deployment.k)


def dcf_baseline(deployment: Deployment, timing: MacTiming, params: ContentionParams,
                 includes_mapc: bool = True) -> ThroughputReport:
    """DCF reference: every pair alone in its group, interference-free MCS.

    By default the baseline exchange has the same airtime budget as a C-SR
    member, coordination phase included; ``includes_mapc=False`` gives the
    coordination time back to DCF data.
    """
    params = _params_for(deployment, params)
    singles = singleton_groups(deployment, timing, with_mapc=includes_mapc)
    agg, per, fp, stats = evaluate(singles, timing, params)
    return ThroughputReport(agg, per, agg, 0.0, dict(per), fp, stats)


def analyze(deployment: Deployment, timing: MacTiming, params: ContentionParams,
            group_set: Optional[GroupSet] = None, includes_mapc: bool = True) -> ThroughputReport:
    """C-SR throughput with its DCF baseline and relative gain."""
    params = _params_for(deployment, params)
    if group_set is None:
        group_set = form_groups(deployment, timing)
    fp = solve_fixed_point(params)
    agg, per, _, stats = evaluate(group_set, timing, params, fp)
    base = dcf_baseline(deployment, timing, params, includes_mapc)
    return ThroughputReport(agg, per, base.aggregate_bps, agg / base.aggregate_bps - 1.0,
                            base.per_pair_bps, fp, stats)
