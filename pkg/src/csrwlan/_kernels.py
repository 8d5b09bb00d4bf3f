"""Hot loops, compiled with numba when available.

Each kernel is written once as plain Python over numpy arrays (the
``*_py`` functions) and compiled with ``numba.njit`` at import. Setting
``CSRWLAN_DISABLE_NUMBA=1`` (or running without numba installed) keeps
the plain versions. Both paths consume the same pre-drawn uniforms, so
they produce identical results for a given seed.
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("CSRWLAN_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_ENABLED = False

# slot classes
EMPTY, SUCCESS, COLLISION = 0, 1, 2


def contend_py(counters, stage, cw_min, max_stage, n_stas, sta_offset, pair_group,
               uniforms, pos, slot, horizon, warmup,
               slot_counts, group_fires, attempts, collided):
    """Advance the contention process until ``horizon`` slots or the uniforms run out.

    Runs of empty slots are skipped in one step (all counters drop by the
    run length). In a busy slot every AP whose counter is zero transmits;
    the others freeze during the transmission and take one decrement in
    the empty slot that closes it. A lone transmitter picks one of its
    STAs and fires that pair's group, then restarts at stage 0; colliding
    APs move one stage up (capped at ``max_stage``). Backoff at stage s is
    drawn uniformly from {0, ..., (cw_min+1)*2**s - 1}.

    Statistics are only recorded for slots with index >= ``warmup``.
    Returns the updated ``(pos, slot)``.
    """
    k = counters.shape[0]
    n_u = uniforms.shape[0]
    while slot < horizon and pos + k + 1 <= n_u:
        mn = counters[0]
        for a in range(1, k):
            if counters[a] < mn:
                mn = counters[a]
        if mn > 0:
            run = mn
            if horizon - slot < run:
                run = horizon - slot
            for a in range(k):
                counters[a] -= run
            lo = slot if slot > warmup else warmup
            hi = slot + run
            if hi > lo:
                slot_counts[EMPTY] += hi - lo
            slot += run
            continue

        record = slot >= warmup
        n_tx = 0
        winner = -1
        for a in range(k):
            if counters[a] == 0:
                n_tx += 1
                winner = a
        if n_tx == 1:
            sta = int(uniforms[pos] * n_stas[winner])
            pos += 1
            if record:
                group_fires[pair_group[sta_offset[winner] + sta]] += 1
                slot_counts[SUCCESS] += 1
                attempts[winner] += 1
            stage[winner] = 0
            counters[winner] = int(uniforms[pos] * (cw_min + 1))
            pos += 1
            for a in range(k):
                if a != winner:
                    counters[a] -= 1
        else:
            if record:
                slot_counts[COLLISION] += 1
            for a in range(k):
                if counters[a] == 0:
                    if record:
                        attempts[a] += 1
                        collided[a] += 1
                    if stage[a] < max_stage:
                        stage[a] += 1
                    counters[a] = int(uniforms[pos] * ((cw_min + 1) << stage[a]))
                    pos += 1
                else:
                    counters[a] -= 1
        slot += 1
    return pos, slot


def greedy_scan_py(members, order, n_pairs, r):
    """Scan candidates in ``order``; keep one if no member would exceed ``r`` uses.

    ``members`` is (n_candidates, K) with pair indices, padded with -1.
    Returns a boolean mask of accepted candidates. Stops as soon as every
    pair is used exactly ``r`` times.
    """
    counts = np.zeros(n_pairs, dtype=np.int64)
    accepted = np.zeros(members.shape[0], dtype=np.bool_)
    width = members.shape[1]
    remaining = n_pairs * r
    for idx in order:
        ok = True
        for c in range(width):
            j = members[idx, c]
            if j < 0:
                break
            if counts[j] >= r:
                ok = False
                break
        if not ok:
            continue
        accepted[idx] = True
        for c in range(width):
            j = members[idx, c]
            if j < 0:
                break
            counts[j] += 1
            remaining -= 1
        if remaining == 0:
            break
    return accepted


if NUMBA_ENABLED:
    contend = njit(cache=True, nogil=True)(contend_py)
    greedy_scan = njit(cache=True, nogil=True)(greedy_scan_py)
else:  # pragma: no cover
    contend = contend_py
    greedy_scan = greedy_scan_py
