"""Random-deployment sweeps: per-STA throughput of C-SR and DCF versus AP spacing."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import analyze
from .config import Config, load_config
from .deployment import deployment_seed, generate
from .groups import GroupError, form_groups

log = logging.getLogger(__name__)

SAMPLE_FIELDS = ["d_ap_ap", "deployment", "seed", "ap_id", "sta_id", "scheme", "bps"]
SCHEMES = ("dcf", "csr")


@dataclass(frozen=True)
class SweepSpec:
    d_ap_ap_list: tuple[float, ...] = (5.0, 10.0, 20.0)
    n_deployments: int = 200
    stas_per_ap: int = 10
    base_seed: int = 0
    output_dir: Optional[Path] = None
    d_sta_min: float = 1.0
    d_sta_max: float = 5.0
    k_aps: int = 4
    baseline_includes_mapc: bool = True

    def __post_init__(self):
        if self.n_deployments < 1:
            raise ValueError("n_deployments must be >= 1")
        if not self.d_ap_ap_list or any(d <= 0 for d in self.d_ap_ap_list):
            raise ValueError("distances must be positive")


@dataclass
class SweepResult:
    spec: SweepSpec
    # (distance, scheme) -> per-STA samples in (deployment, pair) order
    samples: dict[tuple[float, str], list[float]]
    rows: list[dict]
    full_group_fraction: dict[float, float]
    failures: dict[float, int] = field(default_factory=dict)

    def median_gain(self, d: float) -> float:
        return float(np.median(self.samples[(d, "csr")]) / np.median(self.samples[(d, "dcf")]) - 1.0)

    def summary(self) -> dict:
        out = {
            "base_seed": self.spec.base_seed,
            "n_deployments": self.spec.n_deployments,
            "stas_per_ap": self.spec.stas_per_ap,
            "distances": {},
        }
        for d in self.spec.d_ap_ap_list:
            dcf, csr = self.samples[(d, "dcf")], self.samples[(d, "csr")]
            out["distances"][_key(d)] = {
                "n_samples": len(csr),
                "failures": self.failures.get(d, 0),
                "median_dcf_bps": float(np.median(dcf)) if dcf else None,
                "median_csr_bps": float(np.median(csr)) if csr else None,
                "median_gain": self.median_gain(d) if csr else None,
                "fraction_all_full_groups": self.full_group_fraction.get(d, 0.0),
            }
        return out


def _key(d: float) -> str:
    return f"{d:g}"


def _one(task):
    """Evaluate one (distance, deployment index); returns rows or an error string."""
    spec, cfg, d, i = task
    seed = deployment_seed(spec.base_seed, i)
    try:
        dep = generate(seed, spec.k_aps, spec.stas_per_ap, d, spec.d_sta_min, spec.d_sta_max,
                       radio=cfg.radio)
        gs = form_groups(dep, cfg.timing)
        rep = analyze(dep, cfg.timing, cfg.contention, gs, spec.baseline_includes_mapc)
    except (GroupError, RuntimeError, ValueError) as exc:
        return d, i, seed, None, f"{type(exc).__name__}: {exc}"
    full = all(g.size == dep.k for g in gs.groups)
    rows = []
    for scheme, values in (("dcf", rep.baseline_per_pair_bps), ("csr", rep.per_pair_bps)):
        for p in dep.pairs:
            rows.append({"d_ap_ap": d, "deployment": i, "seed": seed, "ap_id": p.ap_id,
                         "sta_id": p.sta_id, "scheme": scheme, "bps": values[p]})
    return d, i, seed, (rows, full), None


def run_sweep(spec: SweepSpec, cfg: Optional[Config] = None, workers: int = 1) -> SweepResult:
    """Generate, group and analyze every (distance, deployment) pair.

    Deployment ``i`` uses the same seed at every distance, so layouts are
    paired across distances. Results are merged in (distance, index) order
    whatever the number of workers.
    """
    cfg = cfg or load_config()
    tasks = [(spec, cfg, d, i) for d in spec.d_ap_ap_list for i in range(spec.n_deployments)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, tasks, chunksize=8))
    else:
        results = [_one(t) for t in tasks]
    results.sort(key=lambda r: (spec.d_ap_ap_list.index(r[0]), r[1]))

    samples = {(d, s): [] for d in spec.d_ap_ap_list for s in SCHEMES}
    rows, failures = [], {}
    full_count = {d: 0 for d in spec.d_ap_ap_list}
    ok_count = {d: 0 for d in spec.d_ap_ap_list}
    for d, i, seed, payload, err in results:
        if err is not None:
            log.warning("d_ap_ap=%g deployment %d (seed %d) skipped: %s", d, i, seed, err)
            failures[d] = failures.get(d, 0) + 1
            continue
        dep_rows, full = payload
        ok_count[d] += 1
        full_count[d] += full
        for row in dep_rows:
            samples[(d, row["scheme"])].append(row["bps"])
        rows.extend(dep_rows)
    frac = {d: full_count[d] / ok_count[d] if ok_count[d] else 0.0 for d in spec.d_ap_ap_list}
    result = SweepResult(spec, samples, rows, frac, failures)
    if spec.output_dir is not None:
        write_outputs(result, Path(spec.output_dir))
    return result


def write_outputs(result: SweepResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "samples.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SAMPLE_FIELDS)
        for r in result.rows:
            w.writerow([_key(r["d_ap_ap"]), r["deployment"], r["seed"], r["ap_id"], r["sta_id"],
                        r["scheme"], repr(r["bps"])])
    with open(out / "cdf.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "d_ap_ap", "bps", "quantile"])
        for d in result.spec.d_ap_ap_list:
            for scheme in SCHEMES:
                xs = sorted(result.samples[(d, scheme)])
                n = len(xs)
                for j, x in enumerate(xs):
                    w.writerow([scheme, _key(d), repr(x), repr((j + 1) / n)])
    (out / "summary.json").write_text(json.dumps(result.summary(), indent=2) + "\n")
