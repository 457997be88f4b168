"""Newton-MR with inexact Hessians, plus the Newton-CG and Gauss-Newton baselines."""

from __future__ import annotations

import math
import time
from dataclasses import replace

import numpy as np

from ..krylov import KrylovConfig, cg, minres_qlp
from ..linalg import as_vector, eigh
from ..objectives import SampleSelector
from ..perturb import measure_diagnostics
from .accounting import oracle_cost
from .config import IterationRecord, OptimizerConfig, RunResult
from .linesearch import armijo_f, armijo_gradnorm


class _Recorder:
    """Builds the record stream and keeps the cumulative oracle count."""

    def __init__(self, monitor=None):
        self.records = []
        self.total = 0
        self.t0 = time.perf_counter()
        self.monitor = monitor

    def add(self, k, f, gnorm, x) -> IterationRecord:
        rec = IterationRecord(k=k, f=float(f), grad_norm=float(gnorm), oracle_calls=self.total,
                              wall_seconds=time.perf_counter() - self.t0)
        if self.monitor is not None:
            rec.extra.update(self.monitor(x))
        self.records.append(rec)
        return rec

    def charge(self, rec, method, s_over_n=1, b_over_n=1):
        self.total = self.total + oracle_cost(method, rec.inner_iters, rec.ls_evals, s_over_n, b_over_n)


def curvature_operator(problem, x, cfg: OptimizerConfig, k: int, E=None, gauss_newton=False):
    """Curvature operator for outer iteration ``k`` and its sample ratio ``s / n``.

    The sub-sample is redrawn every outer iteration and frozen for the inner
    solve. ``E`` is the additive perturbation, if any.
    """
    idx = None
    if cfg.hessian_source == "subsample" and problem.finite_sum:
        idx = cfg.sample.sample(problem.n_components, k)
    s_over_n = 1 if idx is None else len(idx) / problem.n_components
    op = problem.operator(x, idx, gauss_newton)
    if E is not None:
        base = op.apply
        op.apply = lambda v: base(v) + E @ v
    op.sample = idx
    return op, s_over_n


def _perturbation(cfg, d, k):
    if cfg.hessian_source != "additive":
        return None
    if cfg.redraw_perturbation:
        return cfg.perturbation.draw(d, [cfg.perturbation.rng_seed, k])
    return cfg.perturbation.draw(d)


def _label(base, cfg, problem):
    if cfg.hessian_source == "subsample" and problem.finite_sum:
        if cfg.sample.size(problem.n_components) < problem.n_components:
            return "ss" + base
    return base


def _start(problem, x0):
    x = np.array(as_vector(x0), dtype=float, copy=True)
    if x.shape != (problem.dim,):
        raise ValueError(f"x0 must have length {problem.dim}")
    problem.require_domain(x)
    return x


def newton_mr_run(problem, x0, cfg: OptimizerConfig = OptimizerConfig(), monitor=None) -> RunResult:
    """Minimize ``||g||`` by Newton-MR steps with a possibly inexact Hessian.

    Each outer iteration builds the curvature operator ``H~`` per
    ``cfg.hessian_source`` and takes ``p = -H~^+ g`` (``exact_pinv``) or the
    MINRES-QLP approximation stopped at relative residual ``sqrt(theta)``.
    ``delta = <p, H~ g>`` feeds the line search on ``||g||^2``. For MINRES-QLP
    iterates the residual is orthogonal to ``H~ p``, so
    ``delta = ||H~ p + g||^2 - ||g||^2`` comes free from the solver.

    Parameters
    ----------
    problem:
        A :class:`~newtonmr.objectives.Problem`.
    x0:
        Starting point inside the domain.
    monitor:
        Optional callable ``x -> dict`` whose entries are stored on every
        record (e.g. estimation error).
    """
    x = _start(problem, x0)
    d = problem.dim
    if cfg.update_mode == "exact_pinv" and d > cfg.dense_max:
        raise ValueError(f"exact_pinv densifies the Hessian; dim {d} exceeds dense_max {cfg.dense_max}")
    kcfg = KrylovConfig(cfg.inner_max, cfg.theta, cfg.seed_mode)
    E = _perturbation(cfg, d, 0)
    method = _label("newton_mr", cfg, problem)
    rec_ = _Recorder(monitor)
    g = problem.eval_g(x)
    f = problem.eval_f(x)
    termination = "max_outer"
    for k in range(cfg.max_outer + 1):
        gnorm = float(np.linalg.norm(g))
        rec = rec_.add(k, f, gnorm, x)
        if gnorm <= cfg.tau:
            termination = "grad_tol"
            break
        if k == cfg.max_outer:
            break
        if k > 0 and cfg.redraw_perturbation:
            E = _perturbation(cfg, d, k)
        op, s_over_n = curvature_operator(problem, x, cfg, k, E)
        g2 = float(g @ g)
        Ht = None
        if cfg.update_mode == "exact_pinv":
            Ht = op.to_dense()
            dec = eigh(Ht, cfg.rank_tol)
            keep = np.abs(dec.eigenvalues) > dec.rank_tol
            U = dec.eigenvectors[:, keep]
            c = U.T @ g
            p = -(U @ (c / dec.eigenvalues[keep]))
            delta = -float(c @ c)
            rec.inner_iters = d
            rec.inner_status = "exact"
        else:
            res = minres_qlp(op, -g, kcfg)
            p = res.solution
            rnorm = res.trace.rows[-1][1] if res.trace.rows else math.sqrt(g2)
            delta = min(rnorm * rnorm - g2, 0.0)
            rec.inner_iters = res.oracle_applies
            rec.inner_status = res.trace.termination_reason
        if cfg.check_direct:
            delta = float(p @ (Ht @ g if Ht is not None else op(g)))
        rec.delta = delta
        if cfg.diagnostics:
            H = problem.hessian(x)
            Ht_d = Ht if Ht is not None else op.to_dense()
            rec.diagnostics = measure_diagnostics(H, Ht_d, g, cfg.rank_tol)

        if not np.any(p) or not delta < 0:
            # g has no component in Range(H~): no direction reduces ||g||
            rec.ls_evals = 0
            termination = "line_search_failure"
            break
        if cfg.fixed_step:
            xn = x + p
            rec.alpha, rec.ls_evals = 1.0, 1
            if not problem.domain_check(xn):
                termination = "domain_error"
                break
            gn = problem.eval_g(xn)
        else:
            ls = armijo_gradnorm(problem, x, p, delta, cfg, g)
            rec.alpha, rec.ls_evals = ls.alpha, ls.ls_evals
            if not ls.success:
                termination = "line_search_failure"
                break
            xn, gn = ls.x, ls.g
        rec_.charge(rec, method, s_over_n)
        x, g = xn, gn
        f = problem.eval_f(x)
    return RunResult(x, rec_.records, termination, method)


def newton_cg_run(problem, x0, cfg: OptimizerConfig = OptimizerConfig(), monitor=None,
                  gauss_newton: bool = False) -> RunResult:
    """Newton-CG (or Gauss-Newton) with Armijo backtracking on ``f``.

    CG stops at relative residual ``sqrt(theta)``; on negative curvature it
    returns the current iterate, or ``-g`` if that happens on the first
    direction.
    """
    x = _start(problem, x0)
    kcfg = KrylovConfig(cfg.inner_max, cfg.theta)
    E = _perturbation(cfg, problem.dim, 0)
    method = "gauss_newton" if gauss_newton else _label("newton_cg", cfg, problem)
    rec_ = _Recorder(monitor)
    f = problem.eval_f(x)
    g = problem.eval_g(x)
    termination = "max_outer"
    for k in range(cfg.max_outer + 1):
        gnorm = float(np.linalg.norm(g))
        rec = rec_.add(k, f, gnorm, x)
        if gnorm <= cfg.tau:
            termination = "grad_tol"
            break
        if k == cfg.max_outer:
            break
        if k > 0 and cfg.redraw_perturbation:
            E = _perturbation(cfg, problem.dim, k)
        op, s_over_n = curvature_operator(problem, x, cfg, k, E, gauss_newton)
        res = cg(op, -g, kcfg)
        p = res.solution
        rec.inner_iters = res.oracle_applies
        rec.inner_status = res.trace.termination_reason
        slope = float(g @ p)
        rec.delta = slope
        if not slope < 0:
            termination = "line_search_failure"
            break
        if cfg.fixed_step:
            xn = x + p
            rec.alpha, rec.ls_evals = 1.0, 1
            if not problem.domain_check(xn):
                termination = "domain_error"
                break
            fn = problem.eval_f(xn)
        else:
            ls = armijo_f(problem, x, p, f, slope, cfg)
            rec.alpha, rec.ls_evals = ls.alpha, ls.ls_evals
            if not ls.success:
                termination = "line_search_failure"
                break
            xn, fn = ls.x, ls.f
        rec_.charge(rec, method, s_over_n)
        x, f = xn, fn
        g = problem.eval_g(x)
    return RunResult(x, rec_.records, termination, method)


def gauss_newton_run(problem, x0, cfg: OptimizerConfig = OptimizerConfig(), monitor=None) -> RunResult:
    """Newton-CG on the Gauss-Newton matrix (``problem.gnvp``)."""
    return newton_cg_run(problem, x0, cfg, monitor, gauss_newton=True)


def subsampled_config(cfg: OptimizerConfig, fraction: float, seed: int) -> OptimizerConfig:
    """Copy of ``cfg`` with a sub-sampled Hessian of the given fraction."""
    return replace(cfg, hessian_source="subsample", sample=SampleSelector(fraction, seed))
