from __future__ import annotations

import hashlib
import json

import pytest

from mengerkit import __version__
from mengerkit.cli import main, run_experiment
from mengerkit.generators import cantor4
from mengerkit.transport import BilipschitzMapSpec, teocurv_experiment


def run(capsys, *argv) -> tuple[int, str, str]:
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def test_gen_and_hash(capsys, tmp_path):
    rc, out, _ = run(capsys, "gen", "segment:3")
    assert rc == 0
    path = tmp_path / "s.csv"
    path.write_text(out)
    rc, out, _ = run(capsys, "audit", str(path))
    rep = json.loads(out)
    assert rc == 0
    assert rep["input"]["sha256"] == hashlib.sha256(path.read_bytes()).hexdigest()
    assert rep["version"] == __version__ and rep["config"]["seed"] == 0
    assert rep["result"]["feasibility"]["feasible"] in (True, False)


def test_mv_check_cantor(capsys):
    rc, out, _ = run(capsys, "mv-check", "gen:cantor4:3")
    r = json.loads(out)["result"]
    assert rc == 0
    assert abs(r["residual"]) <= 1e-9 * r["lhs"]


def test_corona_segment(capsys, tmp_path):
    svg = tmp_path / "c.svg"
    rc, out, _ = run(capsys, "corona", "gen:segment:1000", "--svg", str(svg))
    assert rc == 0
    r = json.loads(out)["result"]
    assert r["decomposition"]["top"] and "ratio" in r["audit"] and r["structure"]["ok"]
    assert svg.read_text().startswith("<svg")


def test_transport_matches_library(capsys):
    rc, out, _ = run(capsys, "transport", "gen:cantor4:4", "--map", "shear:2")
    assert rc == 0
    got = json.loads(out)["result"]["transport"]
    want = teocurv_experiment(BilipschitzMapSpec.shear(2), cantor4(4)).to_json()
    assert got["ratio_teocurv"] == want["ratio_teocurv"] and got["c2_after"] == want["c2_after"]


@pytest.mark.parametrize(
    "argv",
    [
        ("curvature", "gen:random:50:3", "--norm"),
        ("curvature", "gen:random:50:3", "--mc-cutoff", "10", "--samples", "5000"),
        ("beta", "gen:graph:200", "--max-depth", "5"),
        ("capacity", "gen:random:20", "--passes", "5"),
        ("capacity", "gen:random:20", "--passes", "5", "--eta", "0.5"),
        ("transport", "gen:random:30", "--map", "compose:shear:2|split", "--norm", "--capacity"),
    ],
)
def test_verbs_are_deterministic(capsys, argv):
    rc1, out1, _ = run(capsys, *argv)
    rc2, out2, _ = run(capsys, *argv)
    assert rc1 == rc2 == 0 and out1 == out2
    rep = json.loads(out1)
    assert {"version", "config", "input", "result", "pipeline"} <= set(rep)


def test_push_and_out(capsys, tmp_path):
    dst = tmp_path / "p.csv"
    assert main(["push", "gen:segment:3", "--map", "shear:2", "--out", str(dst)]) == 0
    assert dst.read_text().count("\n") >= 3


def test_run_config(tmp_path, capsys):
    out = tmp_path / "r.json"
    cfg = {"schema": 1, "pipeline": "mv-check", "input": "gen:cantor4:2", "seed": 5, "output": str(out)}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path)]) == 0
    first = out.read_bytes()
    assert main(["run", str(path)]) == 0
    assert out.read_bytes() == first
    assert json.loads(first)["config"]["seed"] == 5
    assert run_experiment(cfg)["result"]["residual"] == json.loads(first)["result"]["residual"]


@pytest.mark.parametrize(
    "argv, stage",
    [
        (("curvature", "/nonexistent.csv"), "input"),
        (("curvature", "gen:nope:3"), "input"),
        (("transport", "gen:segment:3", "--map", "warp:1"), "map"),
    ],
)
def test_bad_input_exit_2(capsys, argv, stage):
    rc, _, err = run(capsys, *argv)
    assert rc == 2
    e = json.loads(err)
    assert e["stage"] == stage and e["exit_code"] == 2


def test_bad_csv_and_config(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y,w\n0,0,1\n1,oops,1\n")
    rc, _, err = run(capsys, "curvature", str(bad))
    assert rc == 2 and "3" in json.loads(err)["message"]
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"schema": 2, "pipeline": "curvature", "input": "gen:segment:3", "seed": 0}))
    rc, _, err = run(capsys, "run", str(cfg))
    assert rc == 2 and json.loads(err)["stage"] == "config"
    cfg.write_text(json.dumps({"schema": 1, "pipeline": "curvature", "input": "gen:segment:3"}))
    assert run(capsys, "run", str(cfg))[0] == 2


def test_precondition_exit_3(tmp_path, capsys):
    src = tmp_path / "two.csv"
    src.write_text("x,y,w\n0,1e308,1\n1,0,1\n")
    rc, _, err = run(capsys, "transport", str(src), "--map", "shear:1e308")
    assert rc == 3 and json.loads(err)["error"] == "MapUndefinedError"


def test_non_finite_values_serialize(capsys):
    rc, out, _ = run(capsys, "transport", "gen:random:10", "--map", "split")
    rep = json.loads(out)
    assert rc == 0 and rep["result"]["map"]["declared_L"] is None and rep["result"]["transport"]["not_bilipschitz"]
