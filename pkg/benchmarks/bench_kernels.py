"""Compiled vs plain-Python kernels: wall time and agreement.

    python3 benchmarks/bench_kernels.py [--slots N] [--repeat R]

The compiled column is empty when numba is missing or CSRWLAN_DISABLE_NUMBA=1.
"""

import argparse
import time

import numpy as np

from csrwlan import _kernels
from csrwlan.config import load_config
from csrwlan.deployment import generate
from csrwlan.groups import enumerate_combinations, form_groups
from csrwlan.simulator import _Layout


def _contend_state(lay, k, n_slots, seed):
    u = np.random.default_rng(seed).random(4 * n_slots + 64)
    return dict(counters=(u[:k] * 16).astype(np.int64), stage=np.zeros(k, np.int64),
                uniforms=u, slot_counts=np.zeros(3, np.int64),
                fires=np.zeros(int(lay.pair_group.max()) + 1, np.int64),
                attempts=np.zeros(k, np.int64), collided=np.zeros(k, np.int64))


def bench_contend(fn, lay, k, n_slots, seed=0):
    s = _contend_state(lay, k, n_slots, seed)
    t0 = time.perf_counter()
    fn(s["counters"], s["stage"], 15, 6, lay.n_stas, lay.sta_offset, lay.pair_group,
       s["uniforms"], k, 0, n_slots, 0, s["slot_counts"], s["fires"], s["attempts"], s["collided"])
    return time.perf_counter() - t0, s["slot_counts"].copy(), s["fires"].copy()


def bench_greedy(fn, members, order, n_pairs):
    t0 = time.perf_counter()
    mask = fn(members, order, n_pairs, 1)
    return time.perf_counter() - t0, mask


def best(f, repeat):
    runs = [f() for _ in range(repeat)]
    return min(r[0] for r in runs), runs[0][1:]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--slots", type=int, default=2_000_000, help="contention slots per timing run")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    cfg = load_config()
    dep = generate(1, stas_per_ap=10, d_ap_ap=20.0)
    gs = form_groups(dep, cfg.timing)
    lay = _Layout(dep, gs)
    cands = enumerate_combinations(dep, cfg.timing)
    members, order = cands.member_matrix(), cands.ranking()

    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    rows = []
    t_py, out_py = best(lambda: bench_contend(_kernels.contend_py, lay, dep.k, args.slots), args.repeat)
    t_gp, out_gp = best(lambda: bench_greedy(_kernels.greedy_scan_py, members, order, len(dep.pairs)),
                        args.repeat)
    if _kernels.NUMBA_ENABLED:
        bench_contend(_kernels.contend, lay, dep.k, 1000)  # compile / load cache
        bench_greedy(_kernels.greedy_scan, members, order, len(dep.pairs))
        t_nb, out_nb = best(lambda: bench_contend(_kernels.contend, lay, dep.k, args.slots), args.repeat)
        t_gn, out_gn = best(lambda: bench_greedy(_kernels.greedy_scan, members, order, len(dep.pairs)),
                            args.repeat)
        same_c = all(np.array_equal(a, b) for a, b in zip(out_py, out_nb))
        same_g = np.array_equal(out_gp[0], out_gn[0])
        rows.append(("contend", f"{args.slots} slots", t_py, t_nb, same_c))
        rows.append(("greedy_scan", f"{len(cands)} candidates", t_gp, t_gn, same_g))
    else:
        rows.append(("contend", f"{args.slots} slots", t_py, None, None))
        rows.append(("greedy_scan", f"{len(cands)} candidates", t_gp, None, None))

    print(f"{'kernel':<12} {'workload':>20} {'python [s]':>11} {'numba [s]':>10} {'speedup':>8} {'identical':>9}")
    for name, work, tp, tn, same in rows:
        if tn is None:
            print(f"{name:<12} {work:>20} {tp:>11.4f} {'-':>10} {'-':>8} {'-':>9}")
        else:
            print(f"{name:<12} {work:>20} {tp:>11.4f} {tn:>10.5f} {tp / tn:>7.0f}x {str(same):>9}")


if __name__ == "__main__":
    main()
