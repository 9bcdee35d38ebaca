import csv
import json
import math

import pytest

from wazewski.cli import main
from wazewski.scenario import ScenarioError, build_model, load_scenario, parse_scenario

STILL = """
model = "pendulum"
name = "still"
[profile]
family = "zero"
[search]
horizons = [5.0, 10.0]
[exit]
y = 0.5
[sweep]
values = [0.0]
horizon = 5.0
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_unknown_keys_are_rejected():
    with pytest.raises(ScenarioError):
        parse_scenario({"model": "pendulum", "pendulm": {"lam": 1.0}})
    with pytest.raises(ScenarioError):
        parse_scenario({"model": "pendulum", "profile": {"family": "sinusoid", "amplitude": 1.0, "omgea": 2.0}})


def test_missing_family_parameters_are_rejected():
    with pytest.raises(ScenarioError, match="amplitude"):
        parse_scenario({"model": "pendulum", "profile": {"family": "sinusoid"}})
    with pytest.raises(ScenarioError):
        parse_scenario({"model": "rod"})
    with pytest.raises(ScenarioError):
        parse_scenario({"model": "pendulum", "search": {"horizons": [10.0, 5.0]}})


def test_echo_round_trips(tmp_path):
    sc = load_scenario(write(tmp_path, STILL))
    again = parse_scenario(sc.echo(), base_dir=tmp_path)
    assert again == sc


def test_timetable_path_is_relative_to_the_scenario(tmp_path):
    (tmp_path / "train.csv").write_text("t,w\n" + "".join(f"{t},{0.1 * t * t}\n" for t in range(11)))
    sc = load_scenario(write(tmp_path, 'model = "pendulum"\n[profile]\nfamily = "timetable"\npath = "train.csv"\n'))
    m = build_model(sc)
    assert m.profile.t_max == 10.0 and m.profile.accel(5.0) == pytest.approx(0.2, abs=1e-2)


def test_verify_pendulum(tmp_path, capsys):
    code, out, _ = run(capsys, "verify", "--scenario", write(tmp_path, STILL))
    rep = json.loads(out)
    assert code == 0
    assert rep["tool"] == "wazewski" and rep["command"] == "verify"
    assert rep["result"]["inequality"]["margin"] == pytest.approx(math.pi, abs=1e-9)
    assert "wall_seconds" in rep["timings"]


def test_verify_short_rod_is_a_config_error(tmp_path, capsys):
    p = write(tmp_path, 'model = "rod"\n[rod]\nomega = 1.0\nr_star = 0.5\n')
    code, out, err = run(capsys, "verify", "--scenario", p)
    assert code == 1 and "r* C" in err and out == ""


def test_verify_inward_field_is_a_hypothesis_failure(tmp_path, capsys):
    p = write(tmp_path, 'model = "custom-1d"\n[custom]\nrhs = "x"\nF = "x**2"\nc = 1.0\nfield = "-x"\n')
    code, out, _ = run(capsys, "verify", "--scenario", p)
    rep = json.loads(out)
    assert code == 2 and not rep["result"]["initial_field"]["passed"]
    assert rep["result"]["inequality"]["passed"]


def test_exit_with_trace(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "exit", "--scenario", write(tmp_path, STILL), "--trace", "--out", out_dir)
    rep = json.loads(out)
    assert code == 0 and rep["result"]["exit_side"] == "upper"
    assert rep["result"]["energy"]["passed"]
    with open(out_dir / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "xdot", "F"]
    last = [float(v) for v in rows[-1]]
    assert last[0] == pytest.approx(rep["result"]["tau"]) and last[1] == pytest.approx(math.pi / 2)
    assert json.loads((out_dir / "report.json").read_text()) == rep


def test_exit_at_top_survives(tmp_path, capsys):
    code, out, _ = run(capsys, "exit", "--scenario", write(tmp_path, STILL), "--y", "0", "--horizon", "10")
    res = json.loads(out)["result"]
    assert code == 0 and res["outcome"] == "survived"
    assert res["clearance"] == pytest.approx((math.pi / 2) ** 2)


def test_exit_outside_domain(tmp_path, capsys):
    code, _, err = run(capsys, "exit", "--scenario", write(tmp_path, STILL), "--y", "1.6")
    assert code == 1 and "outside" in err


def test_search_writes_certificate_and_witness(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "search", "--scenario", write(tmp_path, STILL), "--out", out_dir)
    assert code == 0
    cert = json.loads((out_dir / "certificate.json").read_text())
    assert cert["interval"][0] <= 0.0 <= cert["interval"][1]
    assert cert["hypotheses_verified"] is True
    assert (out_dir / "witness.csv").read_text().startswith("t,x,xdot,F\n")


def test_search_failure_dumps_trace(tmp_path, capsys):
    text = STILL.replace("horizons = [5.0, 10.0]", "horizons = [5.0, 10.0]\nmax_steps = 1")
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "search", "--scenario", write(tmp_path, text), "--out", out_dir)
    assert code == 3
    err = json.loads(out)["result"]["runs"][0]["error"]
    assert err["type"] == "NoSurvivorFound" and len(err["trace"]) == 3
    assert json.loads((out_dir / "search_trace.json").read_text()) == err


def test_sweep_single_point(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "sweep", "--scenario", write(tmp_path, STILL), "--out", out_dir)
    rows = json.loads(out)["result"]["rows"]
    assert code == 0 and rows == [{"y": 0.0, "outcome": "survived", "value": pytest.approx((math.pi / 2) ** 2),
                                   "exit_side": "survived"}]
    lines = (out_dir / "sweep.csv").read_text().splitlines()
    assert lines[0] == "y,outcome,tau_or_clearance,exit_side" and len(lines) == 2


def test_sweep_is_antisymmetric(tmp_path, capsys):
    text = STILL.replace("values = [0.0]", "start = -1.5\nstop = 1.5\nnum = 101")
    code, out, _ = run(capsys, "sweep", "--scenario", write(tmp_path, text), "--horizon", "20")
    rows = json.loads(out)["result"]["rows"]
    flip = {"upper": "lower", "lower": "upper", "survived": "survived"}
    for a, b in zip(rows, reversed(rows)):
        assert a["exit_side"] == flip[b["exit_side"]]
        assert a["value"] == pytest.approx(b["value"], rel=1e-9)
    assert [r["y"] for r in rows if r["outcome"] == "survived"] == [0.0]
    taus = [r["value"] for r in rows if r["y"] > 0]
    assert all(a > b for a, b in zip(taus, taus[1:]))


def test_sweep_outside_domain(tmp_path, capsys):
    text = STILL.replace("values = [0.0]", "values = [0.0, 2.0]")
    code, _, err = run(capsys, "sweep", "--scenario", write(tmp_path, text))
    assert code == 1 and "outside" in err


def test_asymptotics_command(tmp_path, capsys):
    text = STILL + '[asymptotics]\nbranch = "quadratic"\ndistances = [0.1, 0.01, 0.001]\n'
    code, out, _ = run(capsys, "asymptotics", "--scenario", write(tmp_path, text))
    assert code == 0 and json.loads(out)["result"]["passed"]


def test_reports_are_deterministic(tmp_path, capsys):
    p = write(tmp_path, STILL)
    reports = []
    for _ in range(2):
        _, out, _ = run(capsys, "search", "--scenario", p)
        rep = json.loads(out)
        rep.pop("timings")
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_bad_toml(tmp_path, capsys):
    code, _, err = run(capsys, "verify", "--scenario", write(tmp_path, "model = \n"))
    assert code == 1 and "cannot read scenario" in err


def test_module_entry_point_help():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "wazewski", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "asymptotics" in r.stdout


def test_lambda_sweep_gives_one_certificate_per_lambda(tmp_path, capsys):
    text = STILL.replace("horizons = [5.0, 10.0]", "horizons = [5.0, 10.0]\nlambdas = [-1.0, 0.0, 1.0]")
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "search", "--scenario", write(tmp_path, text), "--out", out_dir)
    runs = json.loads(out)["result"]["runs"]
    assert code == 0 and [r["lambda"] for r in runs] == [-1.0, 0.0, 1.0]
    assert sorted(p.name for p in out_dir.glob("certificate*.json")) == [
        "certificate_lam+0.json", "certificate_lam+1.json", "certificate_lam-1.json"]
    w = [r["certificate"]["witness"] for r in runs]
    assert w[0] == pytest.approx(-w[2]) and w[0] > 0  # odd symmetry: lambda -> -lambda, psi -> -psi
