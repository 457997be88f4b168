import json
import math
import subprocess
import sys
import warnings

import numpy as np
import pytest

from newtonmr.bench import (ConfigError, ProfileTable, expand_runs, load_config, parse_config,
                            performance_profile, plot_traces, run_experiment)
from newtonmr.bench import runner as runner_mod
from newtonmr.bench.cli import main
from newtonmr.optim import Trace, read_trace


def cfg_doc(**kw):
    doc = {"experiment": "unstable", "seeds": [0, 1], "epsilons": [1e-2, 1e-5]}
    doc.update(kw)
    return doc


# config

def test_defaults_are_filled_and_resolved(tmp_path):
    cfg = parse_config({"experiment": "gmm_profile"}, output_dir=tmp_path)
    assert cfg.seeds == tuple(range(20))
    assert cfg.problem["p"] == 10 and cfg.problem["n"] == 1000 and cfg.problem["cond"] == 1e4
    assert [m.method for m in cfg.methods] == ["ssnewton_mr", "lbfgs"]
    res = cfg.resolved()
    assert res["fractions"] == [0.05] and json.dumps(res)


@pytest.mark.parametrize("doc, msg", [
    ({"experiment": "nope"}, "experiment"),
    ({"experiment": "custom", "problem": {"kind": "fraction"}}, "at least one method"),
    (cfg_doc(seeds=[]), "seeds"),
    (cfg_doc(methods=[{"method": "bfgs"}]), "unknown method"),
    (cfg_doc(methods=[{"method": "newton_mr", "options": {"bogus": 1}}]), "unknown options"),
    (cfg_doc(methods=[{"method": "newton_mr", "options": {"rho": 2.0}}]), "rho"),
    (cfg_doc(methods=[{"method": "ssnewton_mr"}], fractions=[]), "fractions"),
    (cfg_doc(problem={"kind": "softmax", "data": "missing.csv"}), "does not exist"),
    (cfg_doc(extra=1), "unknown top-level"),
])
def test_config_errors(doc, msg, tmp_path):
    with pytest.raises(ConfigError, match=msg):
        parse_config(doc, base_dir=tmp_path, output_dir=tmp_path)


def test_output_dir_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("NEWTONMR_OUTPUT_DIR", str(tmp_path))
    assert parse_config(cfg_doc()).output_dir == tmp_path / "unstable"
    monkeypatch.delenv("NEWTONMR_OUTPUT_DIR")
    assert str(parse_config(cfg_doc()).output_dir).endswith("results/unstable")


def test_load_config_toml(tmp_path):
    (tmp_path / "data.csv").write_text("0.1,0.2,0\n0.3,0.1,1\n0.5,0.9,2\n0.2,0.2,1\n")
    (tmp_path / "c.toml").write_text(
        'experiment = "custom"\noutput_dir = "out"\nseeds = [3]\nfractions = [0.5]\n'
        '[problem]\nkind = "softmax"\ndata = "data.csv"\n'
        '[[methods]]\nmethod = "ssnewton_cg"\noptions = { max_outer = 4 }\n')
    cfg = load_config(tmp_path / "c.toml")
    assert cfg.output_dir == tmp_path / "out"
    assert cfg.problem["data"] == str(tmp_path / "data.csv")
    (tmp_path / "bad.toml").write_text("experiment = \n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")


def test_expand_runs_unstable():
    cfg = parse_config(cfg_doc(), output_dir="x")
    labels = [(r.label, r.seed) for r in expand_runs(cfg)]
    assert labels == [("newton_mr_eps1e-02", 0), ("newton_mr_eps1e-02", 1),
                      ("newton_mr_eps1e-05", 0), ("newton_mr_eps1e-05", 1),
                      ("newton_mr_unperturbed", 0), ("newton_mr_unperturbed", 1)]


# performance profiles

def test_profile_two_methods_one_run():
    prof = performance_profile({(0, "A"): 1.0, (0, "B"): 3.0}, "f")
    assert prof.curve("A", 1.0) == 1.0
    assert prof.curve("B", 1.0) == 0.0 and prof.curve("B", 2.999) == 0.0 and prof.curve("B", 3.0) == 1.0


def test_profile_ties():
    prof = performance_profile({(0, "A"): 2.0, (0, "B"): 2.0}, "f")
    assert prof.curve("A", 1.0) == prof.curve("B", 1.0) == 1.0


def test_profile_matches_recomputation():
    rng = np.random.default_rng(5)
    vals = rng.uniform(0.1, 10.0, (10, 3))
    vals[2, 1] = np.nan  # one failure
    table = {(i, m): vals[i, j] for i in range(10) for j, m in enumerate("XYZ")}
    prof = performance_profile(table, "grad_norm")
    best = np.nanmin(vals, axis=1)
    ratios = np.where(np.isnan(vals), np.inf, vals / best[:, None])
    np.testing.assert_allclose(prof.ratios, ratios, rtol=1e-15)
    for lam in [1.0, 1.5, 2.0, 5.0, 100.0]:
        for j, m in enumerate("XYZ"):
            assert prof.curve(m, lam) == pytest.approx(np.mean(ratios[:, j] <= lam))
    assert np.all(np.diff(prof.curves, axis=0) >= 0)
    assert np.all((prof.curves >= 0) & (prof.curves <= 1))
    # the best method on any run has a positive value at lambda = 1
    assert prof.curves[0].sum() > 0


def test_profile_shift_and_exclusion():
    table = {(0, "A"): -5.0, (0, "B"): -4.0, (1, "A"): math.nan, (1, "B"): math.inf}
    prof = performance_profile(table, "f")
    assert prof.shift == 6.0 and prof.runs == (0,)
    assert prof.excluded == ((1, "all methods failed"),)
    assert prof.curve("A", 1.0) == 1.0 and prof.curve("B", 2.0) == 1.0
    with pytest.raises(ValueError):
        performance_profile({(0, "A"): 1.0}, "f")


def test_profile_from_traces():
    mk = lambda name, v: Trace(name, {"f": np.array([9.0, v])})
    prof = performance_profile([mk("a__seed0", 1.0), mk("b__seed0", 2.0),
                                mk("a__seed1", 4.0), mk("b__seed1", 2.0)], "f")
    assert prof.methods == ("a", "b") and prof.runs == (0, 1)
    assert prof.to_csv().splitlines()[0] == "lambda,a,b"
    with pytest.raises(ValueError):
        performance_profile([mk("nameless", 1.0), mk("b__seed0", 1.0)], "f")


# plots

def test_plot_single_trace(tmp_path):
    tr = Trace("run", {"k": np.array([0.0, 1.0, 2.0]), "grad_norm": np.array([1.0, 0.1, 0.01])})
    svg = plot_traces([tr], "iteration", "grad_norm", path=tmp_path / "p.svg")
    assert svg.count("<polyline") == 1
    pts = svg.split('points="')[1].split('"')[0].split()
    assert len(pts) == 3
    assert (tmp_path / "p.svg").read_text() == svg
    assert svg == plot_traces([tr], "iteration", "grad_norm")


def test_plot_log_clamp_warns():
    tr = Trace("run", {"k": np.array([0.0, 1.0, 2.0]), "grad_norm": np.array([1.0, 1e-3, 0.0])})
    with pytest.warns(RuntimeWarning, match="clamped"):
        svg = plot_traces([tr], "iteration", "grad_norm", log_y=True)
    assert "1e-3" in svg


def test_plot_errors():
    with pytest.raises(ValueError):
        plot_traces([], "iteration", "f")
    tr = Trace("run", {"k": np.array([0.0]), "f": np.array([1.0])})
    with pytest.raises(ValueError):
        plot_traces([tr], "iteration", "estimation_error")
    with pytest.raises(ValueError):
        plot_traces([tr], "time", "f")


# running experiments

def small_gmm_doc(tmp_path):
    return {"experiment": "gmm_profile", "seeds": [0, 1], "output_dir": str(tmp_path / "g"),
            "problem": {"kind": "gmm", "p": 3, "n": 60, "cond": 10.0},
            "methods": [{"method": "ssnewton_mr", "options": {"max_outer": 8}},
                        {"method": "lbfgs", "options": {"max_outer": 8}},
                        {"method": "sgd", "options": {"max_iters": 10}, "steps": [1e-4, 1e-3]}],
            "fractions": [0.5]}


def test_run_experiment_outputs_and_determinism(tmp_path):
    cfg = parse_config(small_gmm_doc(tmp_path))
    manifest = json.loads(run_experiment(cfg).read_text())
    out = tmp_path / "g"
    files = manifest["files"]
    assert len([f for f in files if "__seed" in f]) == 6
    assert {"profile_f.csv", "profile_grad_norm.csv", "profile_estimation_error.csv",
            "final_metrics.csv"} <= set(files)
    from newtonmr.bench.runner import sha256_file
    for name, digest in files.items():
        assert sha256_file(out / name) == digest
    assert "estimation_error" in read_trace(out / "lbfgs__seed0.csv").columns
    assert all("tuned_step" in r for r in manifest["runs"] if r["method"] == "sgd")
    assert manifest["config"]["problem"]["p"] == 3 and manifest["seeds"] == [0, 1]
    before = {n: (out / n).read_bytes() for n in files}
    run_experiment(cfg)
    assert before == {n: (out / n).read_bytes() for n in files}


def test_run_errors_are_recorded(tmp_path, monkeypatch):
    real = runner_mod.build_problem

    def flaky(prob, seed):
        if seed == 1:
            raise RuntimeError("synthetic failure")
        return real(prob, seed)

    monkeypatch.setattr(runner_mod, "build_problem", flaky)
    cfg = parse_config(cfg_doc(output_dir=str(tmp_path / "u")))
    manifest = json.loads(run_experiment(cfg).read_text())
    assert len(manifest["errors"]) == 3
    assert all("synthetic failure" in e["error"] for e in manifest["errors"])
    assert sum(1 for f in manifest["files"] if "__seed0" in f) == 3


def test_worker_pool_matches_serial(tmp_path):
    doc = cfg_doc(output_dir=str(tmp_path / "a"))
    run_experiment(parse_config(doc))
    run_experiment(parse_config({**doc, "output_dir": str(tmp_path / "b"), "workers": 2}))
    for f in (tmp_path / "a").glob("*.csv"):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


# CLI

def test_cli_run_profile_plot(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("NEWTONMR_OUTPUT_DIR", str(tmp_path / "env"))
    cfgfile = tmp_path / "u.toml"
    cfgfile.write_text('experiment = "unstable"\nseeds = [0]\n')
    assert main(["run", str(cfgfile)]) == 0
    out = tmp_path / "env" / "unstable"
    assert (out / "manifest.json").exists()
    assert main(["profile", str(out), "--metric", "grad_norm", "--output", str(tmp_path / "p.csv")]) == 0
    assert (tmp_path / "p.csv").read_text().startswith("lambda,")
    traces = sorted(str(p) for p in out.glob("*__seed0.csv"))
    assert main(["plot", *traces, "--y", "alpha", "--log-y"]) == 0
    assert (tmp_path / "env" / "plot_alpha_vs_iteration.svg").exists()


def test_cli_errors(tmp_path):
    def run(*args):
        return subprocess.run([sys.executable, "-m", "newtonmr.bench.cli", *args],
                              capture_output=True, text=True)
    r = run("run", str(tmp_path / "missing.toml"))
    assert r.returncode == 2
    err = json.loads(r.stderr.strip().splitlines()[-1])
    assert err["error"] == "config" and "not found" in err["message"]
    r = run("profile", str(tmp_path), "--metric", "f")
    assert r.returncode == 1 and json.loads(r.stderr.strip())["error"] == "ValueError"
    r = run("frobnicate")
    assert r.returncode == 2 and json.loads(r.stderr.strip())["error"] == "usage"
