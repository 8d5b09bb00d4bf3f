"""Command-line interface.

Subcommands: generate, groups, analyze, simulate, sweep, report.
Exit codes: 0 success, 1 computation error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import deployment as deployment_mod
from .analysis import FixedPointError, analyze, dcf_baseline
from .config import Config, ConfigError, load_config
from .deployment import Deployment
from .experiments import SweepSpec, run_sweep
from .groups import CandidateTable, GroupError, GroupSet, enumerate_combinations, select_groups
from .simulator import SimConfig, compare, empirical_stats, replicate

log = logging.getLogger("csrwlan")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- helpers

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="radio/MAC config file (JSON)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--out", type=Path, help="directory to write results into")
    p.add_argument("--json", action="store_true", help="print JSON instead of text")
    return p


def _scenario_args(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--scenario", type=Path, help="scenario file")
    g.add_argument("--preset", choices=deployment_mod.preset_names(), help="bundled scenario")


def _gen_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=4, help="number of APs (square layout needs 4)")
    p.add_argument("--stas-per-ap", type=int, default=1)
    p.add_argument("--d-ap-ap", type=float, default=10.0, help="square side in meters")
    p.add_argument("--d-sta-min", type=float, default=1.0)
    p.add_argument("--d-sta-max", type=float, default=5.0)


def _mapc_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--baseline-includes-mapc", dest="baseline_includes_mapc", action="store_true",
                   default=True, help="DCF baseline pays the coordination phase too (default)")
    g.add_argument("--baseline-excludes-mapc", dest="baseline_includes_mapc", action="store_false",
                   help="DCF baseline uses the coordination time for data")


def _config(args) -> Config:
    return load_config(args.config)


def _deployment(args, cfg: Config) -> Deployment:
    radio = cfg.radio if args.config else None
    if getattr(args, "preset", None):
        return deployment_mod.preset(args.preset, radio=radio or cfg.radio)
    path = args.scenario
    if not path.is_file():
        raise UsageError(f"scenario file not found: {path}")
    return deployment_mod.load(path, radio=radio)


def _group_set(args, dep: Deployment, cfg: Config) -> tuple[GroupSet, Optional[CandidateTable]]:
    if getattr(args, "groups", None):
        if not args.groups.is_file():
            raise UsageError(f"groups file not found: {args.groups}")
        return GroupSet.from_dict(json.loads(args.groups.read_text())), None
    cands = enumerate_combinations(dep, cfg.timing)
    return select_groups(cands), cands


def _write(args, name: str, payload) -> None:
    if args.out is None:
        return
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / name
    if isinstance(payload, Deployment):
        deployment_mod.save(payload, path)
    else:
        path.write_text(json.dumps(payload, indent=2) + "\n")
    log.info("wrote %s", path)


def _fmt_members(g) -> str:
    return "{" + ", ".join(str(p) for p in g.members) + "}"


def format_candidates(cands: CandidateTable, top: int) -> str:
    dep = cands.deployment
    head = ["#"] + [f"AP{a.id}" for a in dep.aps] + ["rho"]
    lines = []
    for rank, i in enumerate(cands.ranking()[:top], 1):
        row = [str(rank)]
        for j in cands.choice[i]:
            row.append("-" if j < 0 else f"STA{cands.pairs[j].sta_id}")
        row.append(str(int(cands.score[i])))
        lines.append(row)
    widths = [max(len(r[c]) for r in [head] + lines) for c in range(len(head))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    return "\n".join(fmt.format(*r) for r in [head] + lines)


def format_groups(gs: GroupSet) -> str:
    lines = [f"selected groups (R={gs.coverage_r}):"]
    for i, (g, phi) in enumerate(gs, 1):
        n = ", ".join(f"{p}:{g.per_member[p].n_packets}" for p in g.members)
        lines.append(f"  G{i}: {_fmt_members(g)}  phi={phi} ({float(phi):.4f})  packets[{n}]")
    return "\n".join(lines)


def format_report(rep, dcf_only: bool) -> str:
    lines = [f"{'pair':<14}{'C-SR [bps]':>16}{'DCF [bps]':>16}"] if not dcf_only else \
        [f"{'pair':<14}{'DCF [bps]':>16}"]
    for p in sorted(rep.per_pair_bps):
        if dcf_only:
            lines.append(f"{str(p):<14}{rep.per_pair_bps[p]:>16.6e}")
        else:
            lines.append(f"{str(p):<14}{rep.per_pair_bps[p]:>16.6e}{rep.baseline_per_pair_bps[p]:>16.6e}")
    if dcf_only:
        lines.append(f"{'aggregate':<14}{rep.aggregate_bps:>16.6e}")
    else:
        lines.append(f"{'aggregate':<14}{rep.aggregate_bps:>16.6e}{rep.baseline_bps:>16.6e}")
        lines.append(f"gain over DCF: {100 * rep.gain:+.2f}%")
    fp = rep.fixed_point
    lines.append(f"tau={fp.tau:.6f}  p={fp.p:.6f}  E[T]={rep.slots.expected_slot:.6e} s")
    return "\n".join(lines)


def _report(args, dep: Deployment, cfg: Config, gs: Optional[GroupSet]):
    if args.dcf:
        return dcf_baseline(dep, cfg.timing, cfg.contention, args.baseline_includes_mapc)
    return analyze(dep, cfg.timing, cfg.contention, gs, args.baseline_includes_mapc)


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    cfg = _config(args)
    if args.preset:
        dep = deployment_mod.preset(args.preset, radio=cfg.radio)
    else:
        try:
            dep = deployment_mod.generate(args.seed, args.k, args.stas_per_ap, args.d_ap_ap,
                                          args.d_sta_min, args.d_sta_max, radio=cfg.radio)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if args.out is not None:
        _write(args, "scenario.json", dep)
    else:
        print(json.dumps(dep.to_dict(), indent=2))
    return 0


def cmd_groups(args) -> int:
    cfg = _config(args)
    dep = _deployment(args, cfg)
    cands = enumerate_combinations(dep, cfg.timing)
    gs = select_groups(cands)
    _write(args, "groups.json", gs.to_dict())
    if args.json:
        top = [cands[int(i)] for i in cands.ranking()[:args.top]]
        print(json.dumps({
            "n_candidates": len(cands),
            "n_feasible": int(cands.feasible.sum()),
            "candidates": [{"members": [[p.ap_id, p.sta_id] for p in c.members], "rho": c.score}
                           for c in top],
            **gs.to_dict(),
        }, indent=2))
    else:
        print(f"{len(cands)} candidate combinations, {int(cands.feasible.sum())} feasible")
        print(format_candidates(cands, args.top))
        print(format_groups(gs))
    return 0


def cmd_analyze(args) -> int:
    cfg = _config(args)
    dep = _deployment(args, cfg)
    gs = None if args.dcf else _group_set(args, dep, cfg)[0]
    rep = _report(args, dep, cfg, gs)
    out = {"scheme": "dcf" if args.dcf else "csr", **rep.to_dict()}
    _write(args, "analysis.json", out)
    print(json.dumps(out, indent=2) if args.json else format_report(rep, args.dcf))
    return 0


def _sim_config(args, cfg: Config) -> SimConfig:
    try:
        return SimConfig(args.horizon, args.seed, cfg.contention, cfg.timing, args.warmup)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _simulate(args, dep, cfg, gs, analytical):
    t0 = time.perf_counter()
    params = replace(cfg.contention, k=dep.k)
    sc = replace(_sim_config(args, cfg), params=params)
    sim = replicate(dep, gs, sc, args.reps, workers=args.workers)
    emp = empirical_stats(sim)
    out = {
        "simulation": sim.to_dict(),
        "empirical": {"tau": emp.tau_hat, "p": emp.p_hat, "p_empty": emp.p_empty,
                      "p_success": emp.p_success, "p_collision": emp.p_collision, "ci95": emp.ci95},
        "group_frequencies": [
            {"group": _fmt_members(g), "phi": float(phi), "observed": float(f)}
            for (g, phi), f in zip(gs, sim.group_frequencies())
        ],
        "comparison": compare(sim, analytical),
        "wall_time_s": time.perf_counter() - t0,
    }
    return out


def format_comparison(out: dict) -> str:
    lines = [f"{'AP':>3} {'STA':>4} {'analysis [bps]':>16} {'simulation [bps]':>18} {'ci95':>12} {'rel.err':>9}"]
    for r in out["comparison"]:
        lines.append(f"{r['ap']:>3} {r['sta']:>4} {r['analysis_bps']:>16.6e} {r['simulation_bps']:>18.6e}"
                     f" {r['ci95_bps']:>12.3e} {100 * r['rel_error']:>8.3f}%")
    e = out["empirical"]
    lines.append(f"tau_hat={e['tau']:.6f}  p_hat={e['p']:.6f}  "
                 f"slots={out['simulation']['slots_observed']}")
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    dep = _deployment(args, cfg)
    gs, _ = _group_set(args, dep, cfg)
    rep = analyze(dep, cfg.timing, cfg.contention, gs, args.baseline_includes_mapc)
    out = _simulate(args, dep, cfg, gs, rep.per_pair_bps)
    _write(args, "simulation.json", out)
    print(json.dumps(out, indent=2) if args.json else format_comparison(out))
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    try:
        spec = SweepSpec(tuple(args.distances), args.n_deployments, args.stas_per_ap, args.seed,
                         args.out or Path("sweep_out"), args.d_sta_min, args.d_sta_max,
                         baseline_includes_mapc=args.baseline_includes_mapc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = run_sweep(spec, cfg, workers=args.workers)
    summary = res.summary()
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(f"{'d_AP-AP [m]':>12} {'median DCF':>14} {'median C-SR':>14} {'gain':>9} {'all-K':>7} {'failed':>7}")
        for d, s in summary["distances"].items():
            print(f"{d:>12} {s['median_dcf_bps']:>14.6e} {s['median_csr_bps']:>14.6e}"
                  f" {100 * s['median_gain']:>8.1f}% {s['fraction_all_full_groups']:>7.3f}"
                  f" {s['failures']:>7}")
        print(f"outputs in {spec.output_dir}")
    return 0


def cmd_report(args) -> int:
    """generate (or load) -> groups -> analyze -> optional simulate."""
    cfg = _config(args)
    if args.scenario or args.preset:
        dep = _deployment(args, cfg)
    else:
        try:
            dep = deployment_mod.generate(args.seed, args.k, args.stas_per_ap, args.d_ap_ap,
                                          args.d_sta_min, args.d_sta_max, radio=cfg.radio)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    _write(args, "scenario.json", dep)
    sections = []
    out: dict = {"scenario": {"k": dep.k, "pairs": len(dep.pairs), "seed": dep.seed}}
    gs = None
    if not args.dcf:
        cands = enumerate_combinations(dep, cfg.timing)
        gs = select_groups(cands)
        _write(args, "groups.json", gs.to_dict())
        out["groups"] = gs.to_dict()
        sections += [format_candidates(cands, args.top), format_groups(gs)]
    rep = _report(args, dep, cfg, gs)
    out["analysis"] = {"scheme": "dcf" if args.dcf else "csr", **rep.to_dict()}
    _write(args, "analysis.json", out["analysis"])
    sections.append(format_report(rep, args.dcf))
    if args.simulate:
        sim_gs = gs if gs is not None else _singletons(dep, cfg, args.baseline_includes_mapc)
        sim = _simulate(args, dep, cfg, sim_gs, rep.per_pair_bps)
        out["simulation"] = sim
        _write(args, "simulation.json", sim)
        sections.append(format_comparison(sim))
    print(json.dumps(out, indent=2) if args.json else "\n\n".join(sections))
    return 0


def _singletons(dep, cfg, includes_mapc):
    from .groups import singleton_groups

    return singleton_groups(dep, cfg.timing, with_mapc=includes_mapc)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="csrwlan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="create a scenario file")
    p.add_argument("--preset", choices=deployment_mod.preset_names())
    _gen_args(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("groups", parents=[common], help="enumerate and select C-SR groups")
    _scenario_args(p)
    p.add_argument("--top", type=int, default=10, help="candidate rows to print")
    p.set_defaults(func=cmd_groups)

    def analysis_flags(q):
        q.add_argument("--dcf", action="store_true", help="DCF baseline only")
        _mapc_flags(q)

    p = sub.add_parser("analyze", parents=[common], help="analytical throughput")
    _scenario_args(p)
    p.add_argument("--groups", type=Path, help="precomputed groups file")
    analysis_flags(p)
    p.set_defaults(func=cmd_analyze)

    def sim_flags(q):
        q.add_argument("--horizon", type=int, default=10**6, help="contention slots per run")
        q.add_argument("--warmup", type=int, default=10_000, help="slots discarded at start")
        q.add_argument("--reps", type=int, default=1, help="independent replications")
        q.add_argument("--workers", type=int, default=1, help="replications run concurrently")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of the analysis")
    _scenario_args(p)
    p.add_argument("--groups", type=Path, help="precomputed groups file")
    _mapc_flags(p)
    sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[common], help="random-deployment CDF sweep")
    p.add_argument("--distances", type=float, nargs="+", default=[5.0, 10.0, 20.0])
    p.add_argument("--n-deployments", type=int, default=200)
    p.add_argument("--stas-per-ap", type=int, default=10)
    p.add_argument("--d-sta-min", type=float, default=1.0)
    p.add_argument("--d-sta-max", type=float, default=5.0)
    p.add_argument("--workers", type=int, default=1)
    _mapc_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", parents=[common], help="full pipeline on one scenario")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--scenario", type=Path)
    src.add_argument("--preset", choices=deployment_mod.preset_names())
    _gen_args(p)
    p.add_argument("--top", type=int, default=10)
    analysis_flags(p)
    p.add_argument("--simulate", action="store_true", help="also run the simulator")
    sim_flags(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        parser.print_usage(sys.stderr)
        print(f"csrwlan: error: {exc}", file=sys.stderr)
        return 2
    except (GroupError, FixedPointError, RuntimeError, ValueError) as exc:
        print(f"csrwlan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
