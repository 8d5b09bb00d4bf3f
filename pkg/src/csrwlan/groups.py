"""Spatial-reuse group formation.

Every way of switching on a subset of APs, each serving one of its STAs,
is a candidate combination. Each member's MCS comes from its
interference-free RSSI (or, with ``group_mcs_rule="sinr"``, from the SINR
with the whole group on air). A candidate is feasible when each member has
an MCS and, for concurrent transmissions, its SINR clears the capture
threshold. Feasible candidates are scored by ``M * sum(packets)`` and
picked greedily so that each pair ends up in exactly ``r`` groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from . import _kernels
from .config import MacTiming
from .deployment import Deployment, PairId
from .radio import db_to_linear, linear_to_db, mcs_rows, packets_per_mcs

DEFAULT_CAP = 10**6
_BLOCK = 1 << 16


class GroupError(RuntimeError):
    pass


@dataclass(frozen=True)
class MemberLink:
    sinr_db: float
    mcs: Optional[int]
    n_packets: int


@dataclass(frozen=True)
class Combination:
    members: tuple[PairId, ...]
    per_member: Mapping[PairId, MemberLink] = field(hash=False, compare=False)
    score: Optional[int]
    feasible: bool

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def packets(self) -> dict[PairId, int]:
        return {p: self.per_member[p].n_packets for p in self.members}

    def __contains__(self, pair) -> bool:
        return pair in self.members


def score(combination: Combination) -> Optional[int]:
    """``M * sum of member packets`` for feasible combinations, else ``None``."""
    if not combination.feasible:
        return None
    return combination.size * sum(m.n_packets for m in combination.per_member.values())


class CandidateTable(Sequence[Combination]):
    """All candidate combinations of a deployment, stored column-wise.

    Column ``k`` of ``choice`` holds the pair index served by the k-th AP
    (into ``deployment.pairs``) or -1 when that AP stays silent.
    """

    def __init__(self, deployment: Deployment, choice, sinr_db, mcs, n_packets, feasible):
        self.deployment = deployment
        self.pairs = deployment.pairs
        self.choice = choice
        self.sinr_db = sinr_db
        self.mcs = mcs
        self.n_packets = n_packets
        self.feasible = feasible
        self.size = (choice >= 0).sum(axis=1)
        self.score = np.where(feasible, self.size * n_packets.sum(axis=1), 0)

    def __len__(self) -> int:
        return self.choice.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        members = []
        links = {}
        for k, j in enumerate(self.choice[i]):
            if j < 0:
                continue
            p = self.pairs[j]
            members.append(p)
            m = int(self.mcs[i, k])
            links[p] = MemberLink(float(self.sinr_db[i, k]), m if m >= 0 else None,
                                  int(self.n_packets[i, k]))
        feasible = bool(self.feasible[i])
        return Combination(tuple(members), links, int(self.score[i]) if feasible else None, feasible)

    def __iter__(self) -> Iterator[Combination]:
        for i in range(len(self)):
            yield self[i]

    def member_matrix(self) -> np.ndarray:
        """Pair indices of each candidate packed to the left, padded with -1."""
        m = np.sort(np.where(self.choice >= 0, self.choice, np.iinfo(np.int64).max), axis=1)
        return np.where(m == np.iinfo(np.int64).max, -1, m).astype(np.int64)

    def ranking(self) -> np.ndarray:
        """Feasible candidate indices, best first.

        Ties on score go to the larger group, then to the lexicographically
        smaller member list.
        """
        idx = np.flatnonzero(self.feasible)
        mem = self.member_matrix()[idx]
        keys = [mem[:, c] for c in range(mem.shape[1] - 1, -1, -1)]
        keys += [-self.size[idx], -self.score[idx]]
        return idx[np.lexsort(keys)]


def _choice_grid(deployment: Deployment, cap: int) -> np.ndarray:
    options = []
    for ap in deployment.aps:
        js = [j for j, p in enumerate(deployment.pairs) if p.ap_id == ap.id]
        options.append(np.array([-1] + js, dtype=np.int64))
    total = int(np.prod([len(o) for o in options], dtype=object)) - 1
    if total > cap:
        raise GroupError(
            f"{total} candidate combinations exceed the cap of {cap}; "
            "pre-filter STAs per AP or raise the cap"
        )
    grids = np.meshgrid(*options, indexing="ij")
    choice = np.stack([g.ravel() for g in grids], axis=1)
    return choice[1:]  # row 0 is the all-silent choice


def enumerate_combinations(deployment: Deployment, timing: MacTiming, cap: int = DEFAULT_CAP,
                           ) -> CandidateTable:
    """Exhaustive candidate list, annotated with SINR, MCS, packets and feasibility."""
    radio = deployment.radio
    choice = _choice_grid(deployment, cap)
    power = deployment.rx_power_mw()  # (K, n_pairs)
    noise = float(db_to_linear(radio.noise_floor_dbm))
    table = packets_per_mcs(radio, timing, with_mapc=True)
    n, k = choice.shape
    not_self = ~np.eye(k, dtype=bool)

    sinr = np.full((n, k), np.nan)
    rows = np.full((n, k), -1, dtype=np.int64)
    for lo in range(0, n, _BLOCK):
        ch = choice[lo:lo + _BLOCK]
        active = ch >= 0
        cc = np.where(active, ch, 0)
        rx = power[:, cc]  # rx[q, n, c]: power from AP q at the STA of column c
        signal = power[np.arange(k)[None, :], cc]
        mask = active[:, :, None] & not_self[None, :, :]  # (n, q, c)
        interf = np.einsum("nqc,qnc->nc", mask, rx)
        s = np.where(active, linear_to_db(signal / (noise + interf)), np.nan)
        sinr[lo:lo + _BLOCK] = s
        rate_db = linear_to_db(signal / noise) if radio.group_mcs_rule == "rssi" else s
        rows[lo:lo + _BLOCK] = np.where(active, mcs_rows(np.nan_to_num(rate_db, nan=-np.inf), radio), -1)

    active = choice >= 0
    size = active.sum(axis=1)
    decodable = np.all(~active | (rows >= 0), axis=1)
    captured = np.all(~active | (sinr >= radio.capture_threshold_db), axis=1)
    feasible = decodable & ((size == 1) | captured)
    n_packets = np.where(active & (rows >= 0), table[np.maximum(rows, 0)], 0)
    mcs_index = np.array([e.index for e in radio.mcs_table], dtype=np.int64)
    mcs = np.where(rows >= 0, mcs_index[np.maximum(rows, 0)], -1)
    return CandidateTable(deployment, choice, sinr, mcs, n_packets, feasible)


@dataclass(frozen=True)
class GroupSet:
    groups: tuple[Combination, ...]
    phi: tuple[Fraction, ...]
    coverage_r: int = 1

    def __iter__(self):
        return iter(zip(self.groups, self.phi))

    def __len__(self):
        return len(self.groups)

    @property
    def pairs(self) -> list[PairId]:
        return sorted({p for g in self.groups for p in g.members})

    def group_of(self, pair: PairId) -> int:
        for i, g in enumerate(self.groups):
            if pair in g.members:
                return i
        raise KeyError(pair)

    def to_dict(self) -> dict:
        return {
            "coverage_r": self.coverage_r,
            "groups": [
                {
                    "members": [
                        {"ap": p.ap_id, "sta": p.sta_id, "sinr_db": g.per_member[p].sinr_db,
                         "mcs": g.per_member[p].mcs, "n_packets": g.per_member[p].n_packets}
                        for p in g.members
                    ],
                    "score": g.score,
                    "phi": str(phi),
                    "phi_float": float(phi),
                }
                for g, phi in self
            ],
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "GroupSet":
        groups, phis = [], []
        try:
            for entry in raw["groups"]:
                links = {}
                for m in entry["members"]:
                    p = PairId(int(m["ap"]), int(m["sta"]))
                    links[p] = MemberLink(float(m.get("sinr_db", float("nan"))), m.get("mcs"),
                                          int(m["n_packets"]))
                members = tuple(links)
                groups.append(Combination(members, links, entry.get("score"), True))
                phis.append(Fraction(entry["phi"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GroupError(f"malformed groups file: {exc!r}") from None
        return cls(tuple(groups), tuple(phis), int(raw.get("coverage_r", 1)))


def transmission_probabilities(groups: Sequence[Combination], k: int,
                               stas_per_ap: Mapping[int, int]) -> tuple[Fraction, ...]:
    """phi_i = sum over members j of 1 / (K * S_j), as exact fractions."""
    return tuple(
        sum((Fraction(1, k * stas_per_ap[p.ap_id]) for p in g.members), Fraction(0))
        for g in groups
    )


def select_groups(candidates: CandidateTable, r: int = 1) -> GroupSet:
    """Greedy pick in descending score until every pair is covered ``r`` times."""
    if r < 1:
        raise ValueError("r must be >= 1")
    n_pairs = len(candidates.pairs)
    singles = candidates.size == 1
    covered = np.zeros(n_pairs, dtype=bool)
    for row in np.flatnonzero(singles & candidates.feasible):
        covered[candidates.choice[row][candidates.choice[row] >= 0][0]] = True
    if not covered.all():
        bad = [str(candidates.pairs[j]) for j in np.flatnonzero(~covered)]
        raise GroupError(f"pairs cannot transmit even alone: {', '.join(bad)}")

    order = candidates.ranking()
    accepted = _kernels.greedy_scan(candidates.member_matrix(), order, n_pairs, r)
    picked = [i for i in order if accepted[i]]
    groups = tuple(candidates[int(i)] for i in picked)

    counts = {p: 0 for p in candidates.pairs}
    for g in groups:
        for p in g.members:
            counts[p] += 1
    short = [str(p) for p, c in counts.items() if c != r]
    if short:
        raise GroupError(f"could not cover pairs exactly {r} times: {', '.join(short)}")

    dep = candidates.deployment
    if r == 1:
        phi = transmission_probabilities(groups, dep.k, dep.stas_per_ap)
    else:
        phi = ()
    return GroupSet(groups, phi, r)


def form_groups(deployment: Deployment, timing: MacTiming, r: int = 1,
                cap: int = DEFAULT_CAP) -> GroupSet:
    return select_groups(enumerate_combinations(deployment, timing, cap), r)


def singleton_groups(deployment: Deployment, timing: MacTiming,
                     with_mapc: bool = False) -> GroupSet:
    """One group per pair with interference-free links (the DCF case)."""
    radio = deployment.radio
    power = deployment.rx_power_mw()
    noise = float(db_to_linear(radio.noise_floor_dbm))
    table = packets_per_mcs(radio, timing, with_mapc=with_mapc)
    ap_col = {a.id: c for c, a in enumerate(deployment.aps)}
    groups = []
    for j, p in enumerate(deployment.pairs):
        s = float(linear_to_db(power[ap_col[p.ap_id], j] / noise))
        row = int(mcs_rows(s, radio))
        if row < 0:
            raise GroupError(f"pair {p} cannot transmit even alone")
        n = int(table[row])
        link = MemberLink(s, radio.mcs_table[row].index, n)
        groups.append(Combination((p,), {p: link}, n, True))
    groups = tuple(groups)
    return GroupSet(groups, transmission_probabilities(groups, deployment.k, deployment.stas_per_ap))
