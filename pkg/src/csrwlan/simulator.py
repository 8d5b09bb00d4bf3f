"""Slot-level Monte Carlo of CSMA/CA contention with group TXOPs.

The simulator is independent of the analytical model: it plays out the
backoff process AP by AP and never uses the fixed point. Time is counted
in contention slots (empty, success, collision), each with its own
duration, which is the same slot notion the analysis uses.

Seeding: replication ``i`` of a run with seed ``s`` draws from
``numpy.random.default_rng(SeedSequence(s, spawn_key=(i,)))``; a plain
:func:`run` is replication 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .config import ContentionParams, MacTiming
from .deployment import Deployment, PairId
from .groups import GroupSet

Z95 = 1.959963984540054
_CHUNK = 1 << 18


@dataclass(frozen=True)
class SimConfig:
    horizon_slots: int = 10**6
    seed: int = 0
    params: ContentionParams = field(default_factory=ContentionParams)
    timing: MacTiming = field(default_factory=MacTiming)
    warmup_slots: int = 10_000
    batches: int = 10

    def __post_init__(self):
        if not self.horizon_slots > self.warmup_slots >= 0:
            raise ValueError("need horizon_slots > warmup_slots >= 0")
        if self.batches < 2:
            raise ValueError("batches must be >= 2")


@dataclass
class SimResult:
    per_pair_packets: dict[PairId, int]
    slots_observed: dict[str, int]
    elapsed_model_time: float
    per_pair_bps: dict[PairId, float]
    ci95_bps: dict[PairId, float]
    group_fires: np.ndarray
    attempts: np.ndarray
    collided: np.ndarray
    n_reps: int = 1

    @property
    def total_slots(self) -> int:
        return sum(self.slots_observed.values())

    @property
    def aggregate_bps(self) -> float:
        return math.fsum(self.per_pair_bps.values())

    def group_frequencies(self) -> np.ndarray:
        return self.group_fires / max(1, int(self.group_fires.sum()))

    def to_dict(self) -> dict:
        return {
            "n_reps": self.n_reps,
            "slots_observed": dict(self.slots_observed),
            "elapsed_model_time_s": self.elapsed_model_time,
            "aggregate_bps": self.aggregate_bps,
            "group_fires": [int(x) for x in self.group_fires],
            "per_pair": [
                {"ap": p.ap_id, "sta": p.sta_id, "packets": int(self.per_pair_packets[p]),
                 "bps": self.per_pair_bps[p], "ci95_bps": self.ci95_bps[p]}
                for p in sorted(self.per_pair_bps)
            ],
        }


@dataclass(frozen=True)
class EmpiricalStats:
    tau_hat: float
    p_hat: float
    p_empty: float
    p_success: float
    p_collision: float
    ci95: dict[str, float]


class _Layout:
    """Integer arrays the kernel works on."""

    def __init__(self, deployment: Deployment, group_set: GroupSet):
        pairs = deployment.pairs
        self.pairs = pairs
        self.n_stas = np.array([len(deployment.stas_of(a.id)) for a in deployment.aps], dtype=np.int64)
        self.sta_offset = np.concatenate([[0], np.cumsum(self.n_stas)[:-1]]).astype(np.int64)
        seen: dict[PairId, int] = {}
        for gi, g in enumerate(group_set.groups):
            for p in g.members:
                if p in seen:
                    raise ValueError(f"pair {p} is in more than one group")
                seen[p] = gi
        missing = [str(p) for p in pairs if p not in seen]
        if missing:
            raise ValueError(f"groups do not cover pairs: {', '.join(missing)}")
        self.pair_group = np.array([seen[p] for p in pairs], dtype=np.int64)
        # packets[g, j] is what pair j receives when group g fires
        self.packets = np.zeros((len(group_set.groups), len(pairs)), dtype=np.int64)
        index = {p: j for j, p in enumerate(pairs)}
        for gi, g in enumerate(group_set.groups):
            for p in g.members:
                self.packets[gi, index[p]] = g.per_member[p].n_packets


def _stream(seed: int, replica: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replica,)))


def _elapsed(counts, timing: MacTiming) -> float:
    return counts[0] * timing.t_empty + counts[1] * timing.t_share + counts[2] * timing.t_collision


def run(deployment: Deployment, group_set: GroupSet, sim_config: SimConfig,
        replica: int = 0) -> SimResult:
    """Simulate ``sim_config.horizon_slots`` contention slots.

    The per-pair confidence half-widths come from batch means over
    ``sim_config.batches`` equal slices of the measured horizon.
    """
    lay = _Layout(deployment, group_set)
    k = deployment.k
    params = sim_config.params
    timing = sim_config.timing
    rng = _stream(sim_config.seed, replica)

    n_groups = len(group_set.groups)
    uniforms = rng.random(_CHUNK)
    stage = np.zeros(k, dtype=np.int64)
    counters = (uniforms[:k] * (params.cw_min + 1)).astype(np.int64)
    pos = k
    slot = 0
    warmup = sim_config.warmup_slots
    measured = sim_config.horizon_slots - warmup

    slot_counts = np.zeros(3, dtype=np.int64)
    fires = np.zeros(n_groups, dtype=np.int64)
    attempts = np.zeros(k, dtype=np.int64)
    collided = np.zeros(k, dtype=np.int64)
    snaps_counts, snaps_fires = [], []

    for b in range(sim_config.batches):
        target = warmup + (measured * (b + 1)) // sim_config.batches
        while slot < target:
            if uniforms.shape[0] - pos < k + 1:
                uniforms = np.concatenate([uniforms[pos:], rng.random(_CHUNK)])
                pos = 0
            pos, slot = _kernels.contend(
                counters, stage, params.cw_min, params.stages, lay.n_stas, lay.sta_offset,
                lay.pair_group, uniforms, pos, slot, target, warmup,
                slot_counts, fires, attempts, collided,
            )
        snaps_counts.append(slot_counts.copy())
        snaps_fires.append(fires.copy())

    bits = 8 * timing.payload_bytes
    batch_bps = []
    prev_c, prev_f = np.zeros(3, dtype=np.int64), np.zeros(n_groups, dtype=np.int64)
    for c, f in zip(snaps_counts, snaps_fires):
        dc, df = c - prev_c, f - prev_f
        batch_bps.append((df @ lay.packets) * bits / _elapsed(dc, timing))
        prev_c, prev_f = c, f
    batch_bps = np.array(batch_bps)

    packets = fires @ lay.packets
    elapsed = _elapsed(slot_counts, timing)
    half = Z95 * batch_bps.std(axis=0, ddof=1) / math.sqrt(len(batch_bps))
    return SimResult(
        per_pair_packets={p: int(packets[j]) for j, p in enumerate(lay.pairs)},
        slots_observed={"empty": int(slot_counts[0]), "success": int(slot_counts[1]),
                        "collision": int(slot_counts[2])},
        elapsed_model_time=elapsed,
        per_pair_bps={p: float(packets[j] * bits / elapsed) for j, p in enumerate(lay.pairs)},
        ci95_bps={p: float(half[j]) for j, p in enumerate(lay.pairs)},
        group_fires=fires,
        attempts=attempts,
        collided=collided,
    )


def empirical_stats(result: SimResult) -> EmpiricalStats:
    """Frequency estimates of the quantities the analytical model predicts."""
    n = result.total_slots
    k = len(result.attempts)
    att = int(result.attempts.sum())
    tau = att / (k * n)
    p = int(result.collided.sum()) / att if att else 0.0
    fr = {c: result.slots_observed[c] / n for c in ("empty", "success", "collision")}

    def half(q, m):
        return Z95 * math.sqrt(q * (1.0 - q) / m) if m else 0.0

    ci = {"tau": half(tau, k * n), "p": half(p, att),
          "p_empty": half(fr["empty"], n), "p_success": half(fr["success"], n),
          "p_collision": half(fr["collision"], n)}
    return EmpiricalStats(tau, p, fr["empty"], fr["success"], fr["collision"], ci)


def replicate(deployment: Deployment, group_set: GroupSet, sim_config: SimConfig,
              n_reps: int, workers: Optional[int] = None) -> SimResult:
    """Independent replications; per-pair means with across-replication 95% CIs."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    if n_reps == 1:
        return run(deployment, group_set, sim_config, 0)
    workers = workers or 1
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reps = list(pool.map(lambda i: run(deployment, group_set, sim_config, i), range(n_reps)))
    else:
        reps = [run(deployment, group_set, sim_config, i) for i in range(n_reps)]
    return aggregate(reps)


def aggregate(reps: list[SimResult]) -> SimResult:
    """Combine replications; the result does not depend on their order."""
    n = len(reps)
    pairs = sorted(reps[0].per_pair_bps)
    mean, half = {}, {}
    for p in pairs:
        xs = [r.per_pair_bps[p] for r in reps]
        m = math.fsum(xs) / n
        var = math.fsum((x - m) ** 2 for x in xs) / (n - 1) if n > 1 else 0.0
        mean[p] = m
        half[p] = Z95 * math.sqrt(var / n)
    slots = {c: sum(r.slots_observed[c] for r in reps) for c in reps[0].slots_observed}
    return SimResult(
        per_pair_packets={p: sum(r.per_pair_packets[p] for r in reps) for p in pairs},
        slots_observed=slots,
        elapsed_model_time=math.fsum(r.elapsed_model_time for r in reps),
        per_pair_bps=mean,
        ci95_bps=half,
        group_fires=sum(r.group_fires for r in reps),
        attempts=sum(r.attempts for r in reps),
        collided=sum(r.collided for r in reps),
        n_reps=n,
    )


def compare(sim: SimResult, analytical: dict[PairId, float]) -> list[dict]:
    """Relative error of simulated per-pair throughput against the model."""
    rows = []
    for p in sorted(analytical):
        a, s = analytical[p], sim.per_pair_bps[p]
        rows.append({"ap": p.ap_id, "sta": p.sta_id, "analysis_bps": a, "simulation_bps": s,
                     "ci95_bps": sim.ci95_bps[p], "rel_error": (s - a) / a if a else float("nan")})
    return rows
