"""Run every (method, seed) pair of an experiment and write its outputs.

Outputs in the experiment directory:

* ``<label>__seed<k>.csv``: one trace per run;
* ``final_metrics.csv``: last-iterate metrics of every run;
* ``profile_<metric>.csv``: performance profiles (``gmm_profile`` only);
* ``manifest.json``: resolved config, per-run status and a sha256 of every
  file above. Timestamps appear only here, so the other files are
  byte-identical across repeated runs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np

from .. import __version__
from ..objectives import (estimation_error, gen_gmm_data, gen_softmax_data, load_csv, make_fraction,
                          make_gmm, make_softmax)
from ..optim import (first_order_run, gauss_newton_run, lbfgs_run, newton_cg_run, newton_mr_run,
                     subsampled_config, tune_step, write_trace)
from ..perturb import PerturbationSpec
from .config import ExperimentConfig
from .profile import PROFILE_METRICS, performance_profile

PERTURBABLE = ("newton_mr", "newton_cg", "gauss_newton")
SUMMARY_COLUMNS = ("label", "method", "seed", "fraction", "epsilon", "termination", "iterations",
                   "oracle_calls", "f", "grad_norm", "estimation_error", "error")


@dataclass(frozen=True)
class RunSpec:
    label: str
    method: object
    seed: int
    fraction: float | None = None
    epsilon: float | None = None

    @property
    def filename(self) -> str:
        return f"{self.label}__seed{self.seed}.csv"


def expand_runs(cfg: ExperimentConfig) -> list:
    """All runs of ``cfg`` in a fixed order: methods, then variants, then seeds."""
    runs = []
    for m in cfg.methods:
        variants = [(m.label, None, None)]
        if m.subsampled:
            variants = [(f"{m.label}_s{f:g}", f, None) for f in cfg.fractions]
        elif cfg.epsilons and m.method in PERTURBABLE:
            variants = [(f"{m.label}_eps{e:.0e}", None, e) for e in cfg.epsilons]
            if cfg.baseline:
                variants.append((f"{m.label}_unperturbed", None, None))
        for label, frac, eps in variants:
            runs.extend(RunSpec(label, m, s, frac, eps) for s in cfg.seeds)
    return runs


@lru_cache(maxsize=8)
def _dataset(kind, items, seed):
    prob = dict(items)
    if kind == "softmax":
        if prob.get("data"):
            return load_csv(prob["data"], has_labels=prob["has_labels"], header=prob["header"],
                            scale=prob["scale"]), None
        return gen_softmax_data(prob["n"], prob["p"], prob["classes"], seed), None
    return gen_gmm_data(prob["p"], prob["n"], prob["cond"], seed)


def build_problem(prob: dict, seed: int):
    """Return ``(problem, x0, ground_truth_or_None)`` for run seed ``seed``."""
    kind = prob["kind"]
    rng = np.random.default_rng(seed)
    if kind == "fraction":
        problem, truth = make_fraction(prob["a"], prob["b"]), None
    else:
        data_seed = seed if prob["data_seed"] == "run" else prob["data_seed"]
        items = tuple(sorted((k, v) for k, v in prob.items() if k != "kind"))
        data, truth = _dataset(kind, items, data_seed)
        if kind == "softmax":
            problem = make_softmax(data, data.n_classes if prob.get("data") else prob["classes"])
        else:
            problem = make_gmm(data, truth.sigma1, truth.sigma2)
    x0 = rng.standard_normal(problem.dim) if prob["x0"] == "normal" else np.zeros(problem.dim)
    return problem, x0, truth


def _dispatch(run: RunSpec, problem, x0, monitor):
    """Run one configured optimizer; returns ``(result, extra_manifest_info)``."""
    m = run.method
    info = {}
    if m.first_order:
        fcfg = m.first_order_config(run.seed)
        if m.steps:
            best, scores = tune_step(m.method, problem, x0, m.steps, fcfg)
            fcfg = replace(fcfg, step=best)
            info["tuned_step"] = best
        return first_order_run(m.method, problem, x0, fcfg, monitor), info
    cfg = m.optimizer_config()
    if run.fraction is not None:
        cfg = subsampled_config(cfg, run.fraction, run.seed)
    if run.epsilon is not None:
        pert = PerturbationSpec("goe", run.epsilon, run.seed)
        # keep the O(eps) eigenvalues of the perturbed matrix unless told otherwise
        rank_tol = 0.0 if "rank_tol" not in m.options else cfg.rank_tol
        cfg = replace(cfg, hessian_source="additive", perturbation=pert, rank_tol=rank_tol)
    base = m.method[2:] if m.subsampled else m.method
    if base == "newton_mr":
        res = newton_mr_run(problem, x0, cfg, monitor)
    elif base == "newton_cg":
        res = newton_cg_run(problem, x0, cfg, monitor)
    elif base == "gauss_newton":
        res = gauss_newton_run(problem, x0, cfg, monitor)
    else:
        res = lbfgs_run(problem, x0, cfg, monitor)
    return res, info


def _last(values):
    return float(values[-1]) if len(values) else math.nan


def execute_run(prob: dict, run: RunSpec, out_dir) -> dict:
    """Run one (method, seed) pair, write its trace and return its summary row.

    Errors are caught and reported in the row; no trace is written then.
    """
    row = {"label": run.label, "method": run.method.method, "seed": run.seed,
           "fraction": run.fraction, "epsilon": run.epsilon, "file": None, "error": None}
    try:
        problem, x0, truth = build_problem(prob, run.seed)
        monitor = None
        if truth is not None:
            def monitor(x, truth=truth):
                return {"estimation_error": estimation_error(x, truth)}
        res, info = _dispatch(run, problem, x0, monitor)
        path = write_trace(res, Path(out_dir) / run.filename)
        rec = res.records[-1]
        row.update(info)
        row.update(file=path.name, termination=res.termination, iterations=len(res.records) - 1,
                   oracle_calls=float(rec.oracle_calls), f=rec.f, grad_norm=rec.grad_norm,
                   estimation_error=rec.extra.get("estimation_error", math.nan))
    except Exception as exc:  # recorded in the manifest; the experiment goes on
        row.update(error=f"{type(exc).__name__}: {exc}", traceback=traceback.format_exc(limit=3),
                   termination="error", iterations=0, oracle_calls=math.nan, f=math.nan,
                   grad_norm=math.nan, estimation_error=math.nan)
    return row


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def summary_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in SUMMARY_COLUMNS])
    return buf.getvalue()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Execute ``cfg`` and return the path of the written manifest."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    runs = expand_runs(cfg)
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            rows = list(pool.map(execute_run, [cfg.problem] * len(runs), runs, [out] * len(runs)))
    else:
        rows = [execute_run(cfg.problem, r, out) for r in runs]

    produced = [r["file"] for r in rows if r["file"]]
    (out / "final_metrics.csv").write_text(summary_csv(rows))
    produced.append("final_metrics.csv")
    notes = []
    if cfg.experiment == "gmm_profile":
        for metric in PROFILE_METRICS:
            table = {(r["seed"], r["label"]): r[metric] for r in rows}
            try:
                prof = performance_profile(table, metric)
            except ValueError as exc:
                notes.append(f"profile {metric}: {exc}")
                continue
            notes.extend(f"profile {metric}: run {run} excluded ({why})" for run, why in prof.excluded)
            name = f"profile_{metric}.csv"
            (out / name).write_text(prof.to_csv())
            produced.append(name)

    manifest = {
        "package_version": __version__,
        "config_file": str(cfg.source) if cfg.source else None,
        "config": cfg.resolved(),
        "seeds": list(cfg.seeds),
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "runs": [{k: v for k, v in r.items()} for r in rows],
        "errors": [{"label": r["label"], "seed": r["seed"], "error": r["error"]} for r in rows if r["error"]],
        "notes": notes,
        "files": {name: sha256_file(out / name) for name in produced},
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(_json_safe(manifest), indent=2) + "\n")
    return path
