"""Constant-step first-order baselines with optional mini-batch gradients."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..objectives import SampleSelector
from .accounting import FIRST_ORDER
from .config import RunResult
from .newton import _Recorder, _start


@dataclass(frozen=True)
class FirstOrderConfig:
    """Step size, mini-batch fraction ``b / n`` and method hyper-parameters.

    Defaults for the hyper-parameters are the usual ones from each method's
    reference implementation.
    """

    step: float = 1e-3
    batch_fraction: float = 1.0
    max_iters: int = 1000
    tau: float = 1e-10
    rng_seed: int = 0
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    decay: float = 0.9
    adadelta_rho: float = 0.95
    eps: float = 1e-8

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0.0 < self.batch_fraction <= 1.0:
            raise ValueError("batch_fraction must lie in (0, 1]")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


class _State:
    def __init__(self, d):
        self.m = np.zeros(d)
        self.v = np.zeros(d)
        self.u = np.zeros(d)
        self.t = 0


def _update(method, cfg, st, g):
    """Return the displacement for gradient estimate ``g``."""
    st.t += 1
    if method == "sgd":
        return -cfg.step * g
    if method == "momentum":
        st.m = cfg.momentum * st.m + g
        return -cfg.step * st.m
    if method == "adagrad":
        st.v = st.v + g * g
        return -cfg.step * g / (np.sqrt(st.v) + cfg.eps)
    if method == "rmsprop":
        st.v = cfg.decay * st.v + (1 - cfg.decay) * g * g
        return -cfg.step * g / (np.sqrt(st.v) + cfg.eps)
    if method == "adam":
        st.m = cfg.beta1 * st.m + (1 - cfg.beta1) * g
        st.v = cfg.beta2 * st.v + (1 - cfg.beta2) * g * g
        mhat = st.m / (1 - cfg.beta1 ** st.t)
        vhat = st.v / (1 - cfg.beta2 ** st.t)
        return -cfg.step * mhat / (np.sqrt(vhat) + cfg.eps)
    if method == "adadelta":
        r = cfg.adadelta_rho
        st.v = r * st.v + (1 - r) * g * g
        dx = -np.sqrt(st.u + cfg.eps) / np.sqrt(st.v + cfg.eps) * g
        st.u = r * st.u + (1 - r) * dx * dx
        return cfg.step * dx
    raise ValueError(f"unknown first-order method {method!r}")


def first_order_run(method: str, problem, x0, cfg: FirstOrderConfig = FirstOrderConfig(),
                    monitor=None):
    """Run one of ``sgd, momentum, adagrad, adadelta, rmsprop, adam``.

    With ``batch_fraction < 1`` every step uses the unbiased mini-batch
    gradient ``(n / b) sum_{i in B}``, a fresh batch per iteration. Records
    report the full ``f`` and ``||g||`` (instrumentation, not charged).
    """
    if method not in FIRST_ORDER:
        raise ValueError(f"unknown first-order method {method!r}")
    x = _start(problem, x0)
    sel = SampleSelector(cfg.batch_fraction, cfg.rng_seed)
    n = problem.n_components
    b_over_n = sel.size(n) / n if problem.finite_sum else 1
    rec_ = _Recorder(monitor)
    st = _State(problem.dim)
    termination = "max_outer"
    for k in range(cfg.max_iters + 1):
        f = problem.eval_f(x)
        g = problem.eval_g(x)
        gnorm = float(np.linalg.norm(g))
        rec = rec_.add(k, f, gnorm, x)
        if not (math.isfinite(f) and math.isfinite(gnorm)):
            termination = "domain_error"
            break
        if gnorm <= cfg.tau:
            termination = "grad_tol"
            break
        if k == cfg.max_iters:
            break
        idx = sel.sample(n, k) if problem.finite_sum else None
        gk = g if idx is None else problem.eval_g(x, idx)
        xn = x + _update(method, cfg, st, gk)
        rec.alpha = cfg.step
        rec_.charge(rec, method, b_over_n=b_over_n)
        if not problem.domain_check(xn):
            termination = "domain_error"
            break
        x = xn
    return RunResult(x, rec_.records, termination, method)


def tune_step(method: str, problem, x0, steps, cfg: FirstOrderConfig = FirstOrderConfig()):
    """Grid search for the constant step giving the lowest final ``f``.

    Returns ``(best_step, {step: final_f})``; diverged runs score ``inf``.
    """
    scores = {}
    for s in steps:
        res = first_order_run(method, problem, x0, replace(cfg, step=float(s)))
        last = res.records[-1].f
        scores[float(s)] = last if (math.isfinite(last) and res.termination != "domain_error") else math.inf
    best = min(scores, key=lambda s: (scores[s], s))
    return best, scores
