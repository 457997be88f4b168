"""Limited-memory BFGS baseline."""

from __future__ import annotations

from collections import deque

import numpy as np

from .config import OptimizerConfig, RunResult
from .linesearch import wolfe_strong
from .newton import _Recorder, _start


def two_loop(g, pairs, gamma=None) -> np.ndarray:
    """``H_k g`` by the two-loop recursion over ``pairs = [(s, y, 1/<s,y>), ...]``."""
    q = np.array(g, dtype=float, copy=True)
    alphas = []
    for s, y, r in reversed(pairs):
        a = r * (s @ q)
        q -= a * y
        alphas.append(a)
    if gamma is not None:
        q *= gamma
    for (s, y, r), a in zip(pairs, reversed(alphas)):
        b = r * (y @ q)
        q += (a - b) * s
    return q


def push_pair(pairs, s, y) -> bool:
    """Append ``(s, y, 1/<s, y>)`` unless ``<s, y> <= 0``; returns whether it was kept."""
    sy = float(s @ y)
    if sy > 0:
        pairs.append((s, y, 1.0 / sy))
        return True
    return False


class _Counted:
    """Caches ``f`` and ``g`` per trial point and counts distinct points."""

    def __init__(self, problem, origin):
        self.problem = problem
        self.origin = origin
        self.cache = {}

    def _eval(self, x):
        key = x.tobytes()
        if key not in self.cache:
            if not self.problem.segment_check(self.origin, x):
                self.cache[key] = (np.inf, np.full(x.shape, np.nan))
            else:
                self.cache[key] = (self.problem.eval_f(x), self.problem.eval_g(x))
        return self.cache[key]

    def f(self, x):
        return self._eval(x)[0]

    def g(self, x):
        return self._eval(x)[1]


def lbfgs_run(problem, x0, cfg: OptimizerConfig = OptimizerConfig(), monitor=None) -> RunResult:
    """L-BFGS with a strong-Wolfe line search (``c1 = cfg.wolfe_c1``, ``c2 = cfg.wolfe_c2``).

    The first iteration uses ``H_0 = I``; later ones scale by
    ``<s, y> / <y, y>`` of the newest pair. Pairs with ``<s, y> <= 0`` are
    dropped and counted in ``info["skipped_pairs"]``. Each trial always starts
    at ``alpha = 1``; the zoom may shrink it by many orders of magnitude.
    """
    x = _start(problem, x0)
    rec_ = _Recorder(monitor)
    pairs = deque(maxlen=cfg.lbfgs_history)
    skipped = 0
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
        gamma = None
        if pairs:
            s, y, _ = pairs[-1]
            gamma = float(s @ y) / float(y @ y)
        p = -two_loop(g, list(pairs), gamma)
        counted = _Counted(problem, x)
        counted.cache[x.tobytes()] = (f, g)

        def phi(a, x=x, p=p, counted=counted):
            fa, ga = counted._eval(x + a * p) if a else (f, g)
            return fa, float(ga @ p) if np.isfinite(fa) else np.nan

        alpha, _ = wolfe_strong(phi, 1.0, cfg.wolfe_c1, cfg.wolfe_c2, cfg.ls_max_backtracks)
        rec.ls_evals = len(counted.cache) - 1
        rec.delta = float(g @ p)
        if alpha is None:
            rec.alpha = np.nan
            termination = "line_search_failure"
            break
        rec.alpha = float(alpha)
        xn = x + alpha * p
        fn, gn = counted._eval(xn)
        if not np.isfinite(fn):
            termination = "domain_error"
            break
        rec_.charge(rec, "lbfgs")
        if not push_pair(pairs, xn - x, gn - g):
            skipped += 1
        x, f, g = xn, fn, gn
    return RunResult(x, rec_.records, termination, "lbfgs", {"skipped_pairs": skipped})
