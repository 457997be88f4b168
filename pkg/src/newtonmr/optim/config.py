"""Optimizer settings, per-iteration records and the trace CSV format."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..objectives import SampleSelector
from ..perturb import DIAGNOSTIC_COLUMNS, PerturbationSpec, SpectralDiagnostics, TheoryConstants, diagnostics_row

UPDATE_MODES = ("exact_pinv", "minres_qlp")
HESSIAN_SOURCES = ("full", "subsample", "additive")
TERMINATIONS = ("grad_tol", "max_outer", "line_search_failure", "domain_error")
TRACE_COLUMNS = ("k", "f", "grad_norm", "alpha", "inner_iters", "ls_evals", "oracle_calls", "wall_seconds")


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings shared by the second-order runners.

    ``hessian_source`` selects how the curvature operator is built each outer
    iteration: the exact Hessian (``full``), a sub-sample drawn by ``sample``
    (``subsample``) or the exact Hessian plus a fixed matrix drawn from
    ``perturbation`` (``additive``). ``rank_tol`` overrides the numerical-rank
    threshold of the exact pseudo-inverse update.
    """

    rho: float = 1e-4
    tau: float = 1e-10
    theta: float = 1e-2
    inner_max: int = 200
    ls_max_backtracks: int = 50
    ls_shrink: float = 0.5
    alpha0: float = 1.0
    max_outer: int = 100
    update_mode: str = "minres_qlp"
    hessian_source: str = "full"
    sample: SampleSelector | None = None
    perturbation: PerturbationSpec | None = None
    redraw_perturbation: bool = False
    rank_tol: float | None = None
    seed_mode: str = "auto"
    fixed_step: bool = False
    check_direct: bool = False
    diagnostics: bool = False
    theory: TheoryConstants | None = None
    dense_max: int = 2000
    lbfgs_history: int = 20
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.4

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.inner_max < 1 or self.max_outer < 0 or self.ls_max_backtracks < 0:
            raise ValueError("iteration limits must be non-negative (inner_max >= 1)")
        if not 0.0 < self.ls_shrink < 1.0:
            raise ValueError("ls_shrink must lie in (0, 1)")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if self.update_mode not in UPDATE_MODES:
            raise ValueError(f"update_mode must be one of {UPDATE_MODES}")
        if self.hessian_source not in HESSIAN_SOURCES:
            raise ValueError(f"hessian_source must be one of {HESSIAN_SOURCES}")
        if self.hessian_source == "subsample" and self.sample is None:
            raise ValueError("subsample source needs a SampleSelector")
        if self.hessian_source == "additive" and self.perturbation is None:
            raise ValueError("additive source needs a PerturbationSpec")
        if self.rank_tol is not None and self.rank_tol < 0:
            raise ValueError("rank_tol must be non-negative")
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")


@dataclass
class IterationRecord:
    """State at ``x_k`` and the step taken from it.

    ``oracle_calls`` is the cumulative cost of reaching ``x_k``; ``alpha``,
    ``inner_iters`` and ``ls_evals`` describe the step from ``x_k`` (NaN and
    zeros on the final record).
    """

    k: int
    f: float
    grad_norm: float
    alpha: float = math.nan
    inner_iters: int = 0
    ls_evals: int = 0
    oracle_calls: float = 0.0
    wall_seconds: float = 0.0
    diagnostics: SpectralDiagnostics | None = None
    delta: float = math.nan
    inner_status: str = ""
    extra: dict = field(default_factory=dict)


@dataclass
class RunResult:
    final_x: np.ndarray
    records: list
    termination: str
    method: str = "newton_mr"
    info: dict = field(default_factory=dict)

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])

    @property
    def fvals(self) -> np.ndarray:
        return np.array([r.f for r in self.records])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.records])


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_trace(result: RunResult, path, include_wall: bool = False, theory: TheoryConstants | None = None,
                update_mode: str = "exact") -> Path:
    """Write the run as CSV.

    ``wall_seconds`` is left blank unless ``include_wall`` so that traces of
    repeated runs are byte-identical.
    """
    path = Path(path)
    with_diag = any(r.diagnostics is not None for r in result.records)
    extra_cols = sorted({k for r in result.records for k in r.extra})
    cols = list(TRACE_COLUMNS) + (list(DIAGNOSTIC_COLUMNS) if with_diag else []) + extra_cols
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in result.records:
            row = [r.k, r.f, r.grad_norm, r.alpha, r.inner_iters, r.ls_evals, r.oracle_calls,
                   r.wall_seconds if include_wall else ""]
            if with_diag:
                d = diagnostics_row(r.diagnostics, theory, update_mode) if r.diagnostics else {}
                row += [d.get(c, "") for c in DIAGNOSTIC_COLUMNS]
            row += [r.extra.get(c, "") for c in extra_cols]
            w.writerow([_fmt(v) for v in row])
    return path


@dataclass
class Trace:
    """Columns of a trace CSV as float arrays (blank cells become NaN)."""

    name: str
    columns: dict

    def __getitem__(self, key) -> np.ndarray:
        if key not in self.columns:
            raise KeyError(f"trace {self.name!r} has no column {key!r}")
        return self.columns[key]

    def __len__(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0


def read_trace(path) -> Trace:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty trace file")
    header, body = rows[0], rows[1:]
    cols = {}
    for j, name in enumerate(header):
        vals = []
        for i, r in enumerate(body, start=2):
            if len(r) != len(header):
                raise ValueError(f"{path}: row {i} has {len(r)} cells, expected {len(header)}")
            cell = r[j]
            vals.append(float(cell) if cell != "" else math.nan)
        cols[name] = np.array(vals)
    return Trace(path.stem, cols)
