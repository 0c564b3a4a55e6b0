import json

import pytest
from click.testing import CliRunner

from stochlv import cli
from stochlv.errors import NonFiniteState
from stochlv.model import EXAMPLE_1, EXAMPLE_3
from stochlv.stationary import lambda1

REGIMES = {"regimes": [{"a": [4, 2], "b": [1, 1], "c": [0.5, 1.5]},
                       {"a": [2, 3], "b": [1, 1.5], "c": [0.5, 1.2]}], "alpha": 1, "beta": 1}


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        path = tmp_path / name
        path.write_text(json.dumps(obj), encoding="utf-8")
        return str(path)

    return {
        "ex1": write("ex1.json", EXAMPLE_1.to_json()),
        "ex3": write("ex3.json", EXAMPLE_3.to_json()),
        "bad": write("bad.json", {**EXAMPLE_1.to_json(), "b": [0, 1]}),
        "crit": write("crit.json", {"a": [3, 2.5], "b": [1, 1], "c": [0.5, 1], "gamma": [2 ** 0.5, 1]}),
        "pdmp": write("pdmp.json", REGIMES),
        "dir": tmp_path,
    }


def run(*args, env=None):
    return CliRunner().invoke(cli.main, [str(a) for a in args], env=env)


def test_classify_example_1(files):
    res = run("classify", files["ex1"])
    assert res.exit_code == 0, res.output
    out = json.loads(res.output)
    assert out["stochastic"]["regime"] == "Coexist"
    assert out["stochastic"]["lambda1"] == pytest.approx(lambda1(EXAMPLE_1), abs=1e-10)
    assert out["deterministic"]["case"] == "Coexist"


def test_classify_example_3(files):
    res = run("classify", files["ex3"])
    assert json.loads(res.output)["stochastic"]["regime"] == "BistableExclusion"


def test_classify_text(files):
    res = run("classify", "--text", files["ex1"])
    assert res.exit_code == 0
    assert "stochastic: Coexist" in res.output


def test_classify_invalid_names_field(files):
    res = run("classify", files["bad"])
    assert res.exit_code == 2
    assert "b1" in res.output


def test_classify_critical(files):
    res = run("classify", files["crit"])
    assert res.exit_code == 3


def test_missing_file(files):
    assert run("classify", files["dir"] / "nope.json").exit_code == 2


def test_simulate_deterministic_bytes(files):
    d = files["dir"]
    for name in ("a.csv", "b.csv"):
        assert run("simulate", files["ex1"], "--seed", 7, "--T", 2, "--out", d / name).exit_code == 0
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()
    assert (d / "a.csv").read_text().startswith("t,x,y\n")
    manifest = json.loads((d / "a.csv.manifest.json").read_text())
    assert manifest["command"] == "simulate" and manifest["seed"] == 7
    assert manifest["config"]["model"] == EXAMPLE_1.to_json()


@pytest.mark.parametrize("flags", [["--h", "0"], ["--z0", "1"], ["--z0", "-1,2"], ["--stride", "0"], ["--seed", "-3"]])
def test_simulate_bad_flags(files, flags):
    res = run("simulate", files["ex1"], "--out", files["dir"] / "x.csv", *flags)
    assert res.exit_code == 2


def test_simulate_boundary(files):
    out = files["dir"] / "b.csv"
    assert run("simulate", files["ex1"], "--boundary", 2, "--T", 1, "--out", out).exit_code == 0
    assert out.read_text().startswith("t,x\n")


def test_simulate_pdmp(files):
    out = files["dir"] / "p.csv"
    assert run("simulate", files["pdmp"], "--pdmp", "--T", 5, "--out", out).exit_code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,x,y,regime"
    assert all(len(r.split(",")) == 4 for r in lines[1:])
    assert (files["dir"] / "p.jumps.csv").read_text().startswith("t_jump,from,to\n")


def test_simulate_nonfinite_exit(files, monkeypatch):
    def boom(*a, **k):
        raise NonFiniteState(12)

    monkeypatch.setattr(cli, "simulate_full", boom)
    res = run("simulate", files["ex1"], "--out", files["dir"] / "n.csv")
    assert res.exit_code == 4
    assert "step 12" in res.output


def test_montecarlo_bookkeeping(files):
    out = files["dir"] / "mc.json"
    res = run("montecarlo", files["ex3"], "--n", 20, "--T", 20, "--floor", 1e-4, "--out", out)
    assert res.exit_code == 0
    rep = json.loads(out.read_text())
    assert rep["p_hat"] + rep["q_hat"] + rep["neither"] == 1.0
    assert rep["n_paths"] == 20


def test_montecarlo_degraded(files, monkeypatch):
    real = cli.extinction_probabilities

    def flaky(p, z0, n, cfg, floor):
        from stochlv import analysis

        def one(i):
            raise NonFiniteState(1, i)

        return analysis.run_batch(one, n, floor, cfg.T, cfg.seed)

    monkeypatch.setattr(cli, "extinction_probabilities", flaky)
    res = run("montecarlo", files["ex3"], "--n", 5, "--T", 1)
    assert res.exit_code == 5
    assert json.loads(res.stdout)["failed"][0]["error"] == "NonFiniteState"
    monkeypatch.setattr(cli, "extinction_probabilities", real)


def test_montecarlo_pdmp(files):
    res = run("montecarlo", files["pdmp"], "--pdmp", "--n", 4, "--T", 20)
    assert res.exit_code == 0
    assert json.loads(res.output)["q_hat"] == 1.0


def test_pdmp_lambdas(files):
    res = run("pdmp-lambdas", files["pdmp"], "--T", 300)
    assert res.exit_code == 0
    out = json.loads(res.output)
    assert out["lambda1"] < 0 < out["lambda2"]


@pytest.mark.parametrize("cmd", [
    ["simulate", "{ex1}", "--T", "2", "--seed", "5"],
    ["simulate", "{pdmp}", "--pdmp", "--T", "5", "--seed", "5"],
    ["montecarlo", "{ex3}", "--n", "12", "--T", "10", "--floor", "1e-4", "--seed", "5"],
    ["pdmp-lambdas", "{pdmp}", "--T", "200"],
    ["classify", "{ex1}"],
])
def test_replay_reproduces_bytes(files, cmd):
    d = files["dir"]
    args = [a.format(**files) for a in cmd]
    first = d / "first.out"
    assert run(*args, "--out", first).exit_code == 0
    second = d / "second.out"
    res = run("replay", f"{first}.manifest.json", "--out", second, env={"LV_THREADS": "4"})
    assert res.exit_code == 0, res.output
    assert first.read_bytes() == second.read_bytes()
    if "--pdmp" in cmd and cmd[0] == "simulate":
        assert (d / "first.jumps.csv").read_bytes() == (d / "second.jumps.csv").read_bytes()


def test_replay_rejects_non_manifest(files):
    assert run("replay", files["ex1"]).exit_code == 2
