import csv
import json
import statistics
import subprocess
import sys

import pytest

from csrwlan.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_report_on_preset(capsys):
    code, out, _ = _run(capsys, "report", "--preset", "deployment1-like")
    assert code == 0
    assert "G1: {AP1-STA1, AP4-STA4}  phi=1/2" in out
    assert "G2: {AP2-STA2}  phi=1/4" in out
    assert "G3: {AP3-STA3}  phi=1/4" in out
    assert "gain over DCF" in out


def test_report_json(capsys):
    code, out, _ = _run(capsys, "report", "--preset", "deployment1-like", "--json")
    assert code == 0
    doc = json.loads(out)
    members = [[(m["ap"], m["sta"]) for m in g["members"]] for g in doc["groups"]["groups"]]
    assert members == [[(1, 1), (4, 4)], [(2, 2)], [(3, 3)]]
    assert [g["phi"] for g in doc["groups"]["groups"]] == ["1/2", "1/4", "1/4"]


def test_dcf_only(capsys):
    code, out, _ = _run(capsys, "analyze", "--preset", "deployment1-like", "--dcf", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["scheme"] == "dcf"
    assert doc["gain"] == 0.0
    code, text, _ = _run(capsys, "analyze", "--preset", "deployment1-like", "--dcf")
    assert "C-SR" not in text and "DCF [bps]" in text


def test_missing_scenario_exits_2(capsys, tmp_path):
    code, _, err = _run(capsys, "analyze", "--scenario", str(tmp_path / "nope.json"))
    assert code == 2
    assert "not found" in err


def test_bad_scenario_exits_2(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"aps": [{"id": 1, "x": 0, "y": 0}],
                                "stas": [{"id": 5, "x": 1, "y": 0, "ap": 2}]}))
    code, _, err = _run(capsys, "groups", "--scenario", str(path))
    assert code == 2
    assert "STA 5" in err


def test_generate_groups_analyze_chain(capsys, tmp_path):
    assert _run(capsys, "generate", "--seed", "4", "--stas-per-ap", "2", "--out", str(tmp_path))[0] == 0
    scen = tmp_path / "scenario.json"
    assert scen.is_file()
    code, out, _ = _run(capsys, "groups", "--scenario", str(scen), "--out", str(tmp_path), "--json")
    assert code == 0
    assert json.loads(out)["n_candidates"] == 3**4 - 1
    code, direct, _ = _run(capsys, "analyze", "--scenario", str(scen), "--json")
    code2, via_file, _ = _run(capsys, "analyze", "--scenario", str(scen), "--groups",
                              str(tmp_path / "groups.json"), "--json")
    assert code == code2 == 0
    assert json.loads(direct)["per_pair_bps"] == json.loads(via_file)["per_pair_bps"]


def test_config_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"radio": {"capture_threshold_db": 60.0}}))
    code, out, _ = _run(capsys, "groups", "--preset", "deployment1-like", "--config", str(cfg), "--json")
    assert code == 0
    assert all(len(g["members"]) == 1 for g in json.loads(out)["groups"])


def test_simulate(capsys):
    code, out, _ = _run(capsys, "simulate", "--preset", "deployment2-like", "--horizon", "300000",
                        "--reps", "2", "--json")
    assert code == 0
    doc = json.loads(out)
    assert doc["simulation"]["n_reps"] == 2
    assert len(doc["comparison"]) == 4
    assert all(abs(r["rel_error"]) < 0.1 for r in doc["comparison"])


def test_report_with_simulation(capsys):
    code, out, _ = _run(capsys, "report", "--seed", "1", "--simulate", "--horizon", "100000")
    assert code == 0
    assert "rel.err" in out


@pytest.fixture(scope="module")
def sweep_dirs(tmp_path_factory):
    a, b = tmp_path_factory.mktemp("a"), tmp_path_factory.mktemp("b")
    for d in (a, b):
        assert main(["sweep", "--n-deployments", "3", "--seed", "7", "--out", str(d)]) == 0
    return a, b


def test_sweep_is_byte_identical(sweep_dirs):
    a, b = sweep_dirs
    for name in ("samples.csv", "cdf.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_counts_and_cdf(sweep_dirs):
    a, _ = sweep_dirs
    rows = list(csv.DictReader(open(a / "samples.csv")))
    for d in ("5", "10", "20"):
        for scheme in ("dcf", "csr"):
            sel = [r for r in rows if r["d_ap_ap"] == d and r["scheme"] == scheme]
            assert len(sel) == 3 * 40
    cdf = list(csv.DictReader(open(a / "cdf.csv")))
    for d in ("5", "10", "20"):
        for scheme in ("dcf", "csr"):
            xs = [float(r["bps"]) for r in cdf if r["d_ap_ap"] == d and r["scheme"] == scheme]
            qs = [float(r["quantile"]) for r in cdf if r["d_ap_ap"] == d and r["scheme"] == scheme]
            assert xs == sorted(xs) and qs == sorted(qs) and qs[-1] == 1.0


def test_sweep_summary_recomputes_from_samples(sweep_dirs):
    a, _ = sweep_dirs
    rows = list(csv.DictReader(open(a / "samples.csv")))
    summary = json.loads((a / "summary.json").read_text())
    for d, s in summary["distances"].items():
        med = {sch: statistics.median(float(r["bps"]) for r in rows
                                      if r["d_ap_ap"] == d and r["scheme"] == sch)
               for sch in ("dcf", "csr")}
        assert s["median_dcf_bps"] == med["dcf"]
        assert s["median_csr_bps"] == med["csr"]
        assert s["median_gain"] == pytest.approx(med["csr"] / med["dcf"] - 1, rel=1e-12)


def test_sweep_single_deployment(capsys, tmp_path):
    code, _, _ = _run(capsys, "sweep", "--n-deployments", "1", "--out", str(tmp_path))
    assert code == 0
    rows = list(csv.DictReader(open(tmp_path / "samples.csv")))
    assert len(rows) == 3 * 2 * 40


def test_sweep_rejects_bad_arguments(capsys, tmp_path):
    code, _, _ = _run(capsys, "sweep", "--n-deployments", "0", "--out", str(tmp_path))
    assert code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "csrwlan", "groups", "--preset", "deployment2-like"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "{AP1-STA1, AP3-STA3, AP4-STA4}" in proc.stdout
