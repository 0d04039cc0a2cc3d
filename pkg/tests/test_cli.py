import json
import math
import subprocess
import sys

import pytest

from bestquote.cli import main
from bestquote.dists import DiscreteDist, l2_distance, linf_distance

UNIT_1A = {"lambda0": 1.0, "muA": 1.0, "lambda1": 2.0, "theta1": 1.0, "lambda2": 1.0, "theta2": 1.0}
SPEC_RATES = {"lambda0": 0.2, "lambda1": 2.0, "lambda2": 1.0, "mu": 1.0, "muA": 0.1, "theta1": 0.5, "theta2": 0.5}


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_dist(path):
    return DiscreteDist.from_text(open(path).read())


def run(*argv):
    return main([str(a) for a in argv])


def err_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


# --- solve -------------------------------------------------------------------------------

def test_solve_normalised(tmp_path):
    p = write_json(tmp_path / "p.json", UNIT_1A)
    out = tmp_path / "pi.txt"
    assert run("solve", "--model", "1a", "--params", p, "--out", out) == 0
    probs = [float(line.split()[1]) for line in out.read_text().splitlines()]
    total = math.fsum(probs)
    assert 1 - 1e-6 <= total <= 1 + 1e-15
    assert all(v >= 0 for v in probs)
    side = json.loads((tmp_path / "pi.txt.json").read_text())
    assert side["model_id"] == "1a" and side["normalization_defect"] < 1e-6


def test_solve_missing_partial_rate(tmp_path, capsys):
    p = write_json(tmp_path / "p.json", UNIT_1A)
    assert run("solve", "--model", "2a", "--params", p, "--out", tmp_path / "x.txt") == 2
    assert err_json(capsys)["error"] == "parameter"
    assert not (tmp_path / "x.txt").exists()


def test_solve_near_unit_geometric(tmp_path):
    near = {"kind": "geometric", "q": 1 - 1e-8}
    pa = write_json(tmp_path / "a.json", UNIT_1A)
    pb = write_json(tmp_path / "b.json", {**UNIT_1A, "g0_spec": near, "g1_spec": near, "g2_spec": near})
    assert run("solve", "--model", "1a", "--params", pa, "--out", tmp_path / "a.txt") == 0
    assert run("solve", "--model", "1b", "--params", pb, "--out", tmp_path / "b.txt") == 0
    assert linf_distance(read_dist(tmp_path / "a.txt"), read_dist(tmp_path / "b.txt")) < 1e-5


@pytest.mark.parametrize("argv,code", [
    (["solve", "--model", "9z"], 2),
    (["solve", "--model", "1a", "--params", "missing.json"], 4),
    (["solve", "--model", "1a", "--params", "{bad}"], 2),
    (["solve", "--model", "1a", "--params", "{infeasible}"], 2),
    (["solve", "--model", "1a", "--params", "{ok}", "--truncation", "2"], 3),
    (["bogus"], 2),
])
def test_solve_exit_codes(tmp_path, capsys, argv, code):
    files = {"{bad}": tmp_path / "bad.json", "{ok}": tmp_path / "ok.json", "{infeasible}": tmp_path / "inf.json"}
    files["{bad}"].write_text("{not json")
    files["{ok}"].write_text(json.dumps(UNIT_1A))
    files["{infeasible}"].write_text(json.dumps({**UNIT_1A, "muA": -1.0}))
    argv = [str(files.get(a, a)) for a in argv]
    if argv[0] == "solve" and "--params" not in argv:
        argv += ["--params", str(files["{ok}"])]
    argv += ["--out", str(tmp_path / "o.txt")]
    assert run(*argv) == code
    assert "error" in err_json(capsys)


# --- simulate ------------------------------------------------------------------------------

def test_simulate_byte_identical(tmp_path):
    p = write_json(tmp_path / "p.json", SPEC_RATES)
    for tag in ("a", "b"):
        assert run("simulate", "--params", p, "--events", 50_000, "--seed", 42, "--weighting", "both",
                   "--log", "--out", tmp_path / tag / "run") == 0
    for suffix in ("_time.txt", "_event.txt", "_events.csv", ".json"):
        assert (tmp_path / "a" / f"run{suffix}").read_bytes() == (tmp_path / "b" / f"run{suffix}").read_bytes()
    meta = json.loads((tmp_path / "a" / "run.json").read_text())
    assert meta["rng"] == "numpy.random.PCG64" and meta["seed"] == 42


def test_simulate_backends_identical(tmp_path):
    p = write_json(tmp_path / "p.json", SPEC_RATES)
    from bestquote.simulator import available_backends
    for b in available_backends():
        assert run("simulate", "--params", p, "--events", 20_000, "--seed", 7, "--backend", b,
                   "--out", tmp_path / b) == 0
    texts = {(tmp_path / f"{b}_time.txt").read_bytes() for b in available_backends()}
    assert len(texts) == 1


def test_simulate_horizon_zero(tmp_path, capsys):
    p = write_json(tmp_path / "p.json", SPEC_RATES)
    assert run("simulate", "--params", p, "--horizon", 0, "--seed", 1, "--out", tmp_path / "z") != 0
    assert err_json(capsys)["error"] == "parameter"


def test_simulate_needs_budget(tmp_path):
    p = write_json(tmp_path / "p.json", SPEC_RATES)
    assert run("simulate", "--params", p, "--seed", 1, "--out", tmp_path / "z") == 2
    assert run("simulate", "--params", p, "--events", 10, "--seed", -1, "--out", tmp_path / "z") == 2


# --- estimate ------------------------------------------------------------------------------

def test_estimate_round_trip(tmp_path, capsys):
    p = write_json(tmp_path / "p.json", SPEC_RATES)
    assert run("simulate", "--params", p, "--events", 1_000_000, "--seed", 7, "--log", "--out", tmp_path / "s") == 0
    out = tmp_path / "est.json"
    assert run("estimate", "--log", tmp_path / "s_events.csv", "--out", out, "--window", "all") == 0
    est = json.loads(out.read_text())
    for k in ("lambda0", "lambda1", "lambda2", "mu", "muA"):
        assert abs(est[k] - SPEC_RATES[k]) <= 0.02 * SPEC_RATES[k], k
    assert est["metadata"]["stats"]["flags"] == []
    assert (tmp_path / "est_best_time.txt").exists()
    assert json.loads(capsys.readouterr().out)["counts"]["LIMIT_BEST"] > 0


def test_estimate_empty_file(tmp_path, capsys):
    (tmp_path / "empty.csv").write_text("")
    assert run("estimate", "--log", tmp_path / "empty.csv", "--out", tmp_path / "e.json") == 4
    assert err_json(capsys)["error"] == "io"
    assert run("estimate", "--log", tmp_path / "nope.csv", "--out", tmp_path / "e.json") == 4


def test_estimate_reports_line_numbers(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("timestamp,kind,size,best_volume,second_volume\n36000,LIMIT_BEST,x,,\n")
    assert run("estimate", "--log", tmp_path / "bad.csv", "--out", tmp_path / "e.json") == 4
    assert "line 2" in err_json(capsys)["message"]


def test_estimate_type0_flag(tmp_path, capsys):
    rows = ["timestamp,kind,size,best_volume,second_volume"]
    rows += [f"{36000 + k},LIMIT_BEST,1,{1 + k % 4}," for k in range(50)]
    rows += [f"{36050 + k},MARKET_PARTIAL,1,1," for k in range(3)]
    (tmp_path / "t0.csv").write_text("\n".join(rows) + "\n")
    assert run("estimate", "--log", tmp_path / "t0.csv", "--out", tmp_path / "e.json") == 0
    est = json.loads((tmp_path / "e.json").read_text())
    assert "type0-only" in est["metadata"]["stats"]["flags"]
    assert "warning" in capsys.readouterr().err


# --- compare -------------------------------------------------------------------------------

def test_compare_files(tmp_path, capsys):
    emp = tmp_path / "emp.txt"
    emp.write_text("1 0.5\n2 0.5\n")
    (tmp_path / "same.txt").write_text("1 0.5\n2 0.5\n")
    (tmp_path / "off.txt").write_text("1 1.0\n")
    assert run("compare", "--empirical", emp, "--models", tmp_path / "off.txt", tmp_path / "same.txt",
               "--out", tmp_path / "cmp") == 0
    lines = (tmp_path / "cmp.csv").read_text().splitlines()
    assert lines[1].startswith("off,") and lines[1].endswith(",2")
    assert lines[2] == "same,0.0,0.0,1"
    assert (tmp_path / "cmp_plot_body.dat").exists() and (tmp_path / "cmp_plot_tail.dat").exists()
    assert run("compare", "--empirical", emp, "--models", tmp_path / "same.txt", "--out", tmp_path / "c") == 2
    (tmp_path / "zero.txt").write_text("0 0.5\n1 0.5\n")
    assert run("compare", "--empirical", emp, "--models", tmp_path / "zero.txt", tmp_path / "same.txt",
               "--out", tmp_path / "c") == 2
    assert err_json(capsys)["error"] == "parameter"


def test_regenerated_partial_model_beats_benchmarks(tmp_path):
    params = {"lambda0": 0.5, "muA": 0.5, "lambda1": 1.0, "mu": 0.8, "theta1": 1.0, "lambda2": 1.0, "theta2": 1.0}
    p = write_json(tmp_path / "p.json", params)
    assert run("simulate", "--params", p, "--events", 10_000_000, "--seed", 3, "--out", tmp_path / "sim") == 0
    outs = []
    for m in ("0a", "0b", "2a"):
        outs.append(tmp_path / f"{m}.txt")
        assert run("solve", "--model", m, "--params", p, "--out", outs[-1]) == 0
    assert run("compare", "--empirical", tmp_path / "sim_time.txt", "--models", *outs, "--out", tmp_path / "c") == 0
    rows = {r.split(",")[0]: r.split(",") for r in (tmp_path / "c.csv").read_text().splitlines()[1:]}
    assert rows["2a"][-1] == "1"
    assert float(rows["2a"][-2]) < min(float(rows["0a"][-2]), float(rows["0b"][-2]))
    assert l2_distance(read_dist(tmp_path / "sim_time.txt"), read_dist(outs[2])) < 5e-3


def test_console_script(tmp_path):
    p = write_json(tmp_path / "p.json", UNIT_1A)
    res = subprocess.run([sys.executable, "-m", "bestquote.cli", "solve", "--model", "1a", "--params", p,
                          "--out", str(tmp_path / "o.txt")], capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "o.txt").exists()
    res = subprocess.run([sys.executable, "-m", "bestquote.cli", "solve", "--model", "2a", "--params", p,
                          "--out", str(tmp_path / "o.txt")], capture_output=True, text=True)
    assert res.returncode == 2 and json.loads(res.stderr.strip().splitlines()[-1])["error"] == "parameter"
