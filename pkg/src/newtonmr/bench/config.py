"""Experiment configuration files.

A config is a TOML document::

    experiment = "softmax_compare"
    seeds = [0, 1, 2]
    fractions = [0.1, 0.05, 0.01]

    [problem]
    kind = "softmax"
    n = 1000

    [[methods]]
    method = "ssnewton_mr"
    options = { max_outer = 200 }

Anything left out is filled from the experiment's defaults, and the fully
resolved document is echoed into the run manifest.
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..optim import FIRST_ORDER, METHODS, FirstOrderConfig, OptimizerConfig

EXPERIMENTS = ("unstable", "softmax_compare", "stability_sweep", "gmm_profile", "custom")
PROBLEM_KINDS = ("fraction", "softmax", "gmm")
OUTPUT_ENV = "NEWTONMR_OUTPUT_DIR"


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configs."""


_DEFAULTS = {
    "unstable": {
        "problem": {"kind": "fraction", "a": 100.0, "b": 1.0, "x0": "normal"},
        "methods": [{"method": "newton_mr", "options": {"update_mode": "exact_pinv", "max_outer": 100}}],
        "epsilons": [1e-2, 1e-5, 1e-13],
        "seeds": list(range(10)),
    },
    "softmax_compare": {
        "problem": {"kind": "softmax", "n": 1000, "p": 20, "classes": 5},
        "methods": [{"method": m, "options": {"max_outer": 100}}
                    for m in ("newton_mr", "ssnewton_mr", "newton_cg", "ssnewton_cg", "lbfgs")],
        "fractions": [0.1, 0.05, 0.01],
        "seeds": [0],
    },
    "stability_sweep": {
        "problem": {"kind": "softmax", "n": 10000, "p": 20, "classes": 5},
        "methods": [{"method": m, "options": {"max_outer": 200}} for m in ("ssnewton_mr", "ssnewton_cg")],
        "fractions": [0.1, 0.05, 0.01],
        "seeds": list(range(5)),
    },
    "gmm_profile": {
        "problem": {"kind": "gmm", "p": 10, "n": 1000, "cond": 1e4, "data_seed": "run"},
        "methods": [{"method": "ssnewton_mr", "options": {"max_outer": 200}},
                    {"method": "lbfgs", "options": {"max_outer": 200}}],
        "fractions": [0.05],
        "seeds": list(range(20)),
    },
    "custom": {"problem": {}, "methods": [], "seeds": [0]},
}

_PROBLEM_DEFAULTS = {
    "fraction": {"a": 100.0, "b": 1.0, "x0": "normal"},
    "softmax": {"n": 1000, "p": 20, "classes": 5, "data_seed": 0, "x0": "zeros", "data": None,
                "has_labels": True, "header": False, "scale": False},
    "gmm": {"p": 10, "n": 1000, "cond": 1e4, "data_seed": "run", "x0": "zeros"},
}

_OPT_FIELDS = {f.name for f in fields(OptimizerConfig)} - {"sample", "perturbation", "theory"}
_FO_FIELDS = {f.name for f in fields(FirstOrderConfig)} - {"rng_seed"}


@dataclass(frozen=True)
class MethodSpec:
    """One optimizer entry; ``options`` are overrides of its config type."""

    method: str
    label: str
    options: dict = field(default_factory=dict)
    steps: tuple = ()

    @property
    def subsampled(self) -> bool:
        return self.method.startswith("ss")

    @property
    def first_order(self) -> bool:
        return self.method in FIRST_ORDER

    def optimizer_config(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(**self.options)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"method {self.label!r}: {exc}") from None

    def first_order_config(self, seed: int = 0) -> FirstOrderConfig:
        try:
            return FirstOrderConfig(rng_seed=seed, **self.options)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"method {self.label!r}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    problem: dict
    methods: tuple
    seeds: tuple
    output_dir: Path
    fractions: tuple = ()
    epsilons: tuple = ()
    baseline: bool = True
    workers: int = 1
    source: Path | None = None

    def resolved(self) -> dict:
        """Plain-data form of the config, as stored in the manifest."""
        return {
            "experiment": self.experiment,
            "problem": dict(self.problem),
            "methods": [{"method": m.method, "label": m.label, "options": dict(m.options),
                         **({"steps": list(m.steps)} if m.steps else {})} for m in self.methods],
            "seeds": list(self.seeds),
            "fractions": list(self.fractions),
            "epsilons": list(self.epsilons),
            "baseline": self.baseline,
            "workers": self.workers,
            "output_dir": str(self.output_dir),
        }


def _method(entry, i) -> MethodSpec:
    if not isinstance(entry, dict) or "method" not in entry:
        raise ConfigError(f"methods[{i}] needs a 'method' key")
    name = entry["method"]
    if name not in METHODS:
        raise ConfigError(f"methods[{i}]: unknown method {name!r}; choose from {', '.join(METHODS)}")
    unknown = set(entry) - {"method", "label", "options", "steps"}
    if unknown:
        raise ConfigError(f"methods[{i}]: unknown keys {sorted(unknown)}")
    options = dict(entry.get("options", {}))
    allowed = _FO_FIELDS if name in FIRST_ORDER else _OPT_FIELDS
    bad = set(options) - allowed
    if bad:
        raise ConfigError(f"methods[{i}] ({name}): unknown options {sorted(bad)}")
    steps = tuple(float(s) for s in entry.get("steps", ()))
    if steps and name not in FIRST_ORDER:
        raise ConfigError(f"methods[{i}]: 'steps' only applies to first-order methods")
    spec = MethodSpec(name, entry.get("label", name), options, steps)
    # validate eagerly so errors surface before any run starts
    spec.first_order_config() if spec.first_order else spec.optimizer_config()
    return spec


def _problem(raw, base_dir: Path) -> dict:
    kind = raw.get("kind")
    if kind not in PROBLEM_KINDS:
        raise ConfigError(f"problem.kind must be one of {PROBLEM_KINDS}, got {kind!r}")
    prob = {"kind": kind, **_PROBLEM_DEFAULTS[kind]}
    unknown = set(raw) - set(prob)
    if unknown:
        raise ConfigError(f"problem ({kind}): unknown keys {sorted(unknown)}")
    prob.update(raw)
    if prob["x0"] not in ("zeros", "normal"):
        raise ConfigError("problem.x0 must be 'zeros' or 'normal'")
    if kind == "softmax" and prob["data"] is not None:
        path = Path(prob["data"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.is_file():
            raise ConfigError(f"dataset {str(path)!r} does not exist")
        prob["data"] = str(path)
    if "data_seed" in prob and not (prob["data_seed"] == "run" or isinstance(prob["data_seed"], int)):
        raise ConfigError("problem.data_seed must be an integer or 'run'")
    return prob


def parse_config(doc: dict, base_dir=".", output_dir=None, source=None) -> ExperimentConfig:
    """Validate a config mapping and fill in the experiment defaults.

    The output directory is taken from ``output_dir``, then the document,
    then the ``NEWTONMR_OUTPUT_DIR`` environment variable, then
    ``./results/<experiment>``.
    """
    base_dir = Path(base_dir)
    exp = doc.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {exp!r}")
    known = {"experiment", "problem", "methods", "seeds", "fractions", "epsilons", "baseline",
             "workers", "output_dir"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    d = copy.deepcopy(_DEFAULTS[exp])
    for key in ("methods", "seeds", "fractions", "epsilons"):
        if key in doc:
            d[key] = doc[key]
    prob_raw = dict(d["problem"])
    if "problem" in doc:
        if "kind" in doc["problem"] and doc["problem"]["kind"] != prob_raw.get("kind"):
            prob_raw = {}
        prob_raw.update(doc["problem"])
    problem = _problem(prob_raw, base_dir)

    methods = tuple(_method(m, i) for i, m in enumerate(d.get("methods", [])))
    if not methods:
        raise ConfigError("at least one method is required")
    labels = [m.label for m in methods]
    if len(set(labels)) != len(labels):
        raise ConfigError("method labels must be unique")
    seeds = tuple(d.get("seeds", ()))
    if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("seeds must be a non-empty list of non-negative integers")
    fractions = tuple(float(f) for f in d.get("fractions", ()))
    if any(not 0 < f <= 1 for f in fractions):
        raise ConfigError("fractions must lie in (0, 1]")
    if any(m.subsampled for m in methods) and not fractions:
        raise ConfigError("sub-sampled methods need a non-empty 'fractions' list")
    epsilons = tuple(float(e) for e in d.get("epsilons", ()))
    if any(e < 0 for e in epsilons):
        raise ConfigError("epsilons must be non-negative")
    workers = int(doc.get("workers", 1))
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    if output_dir is None:
        output_dir = doc.get("output_dir")
        if output_dir is not None and not Path(output_dir).is_absolute():
            output_dir = base_dir / output_dir
    if output_dir is None:
        env = os.environ.get(OUTPUT_ENV)
        output_dir = Path(env) / exp if env else Path("results") / exp
    return ExperimentConfig(exp, problem, methods, seeds, Path(output_dir), fractions, epsilons,
                            bool(doc.get("baseline", True)), workers, source)


def load_config(path, output_dir=None) -> ExperimentConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {str(path)!r} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(doc, path.parent, output_dir, source=path)
