"""Backtracking line searches.

:func:`armijo_gradnorm` targets ``||g||^2`` (Newton-MR); :func:`armijo_f`
is the classical sufficient-decrease test on ``f`` (Newton-CG, Gauss-Newton).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..objectives import DomainError


class LineSearchResult(NamedTuple):
    alpha: float
    ls_evals: int
    success: bool
    x: np.ndarray | None = None
    g: np.ndarray | None = None
    f: float | None = None


def _trial(problem, x, p, alpha):
    xn = x + alpha * p
    if not problem.segment_check(x, xn):
        return xn, None
    try:
        return xn, problem.eval_g(xn)
    except DomainError:
        return xn, None


def armijo_gradnorm(problem, x, p, delta: float, cfg, g=None) -> LineSearchResult:
    """Largest ``alpha = alpha0 * shrink^j`` with
    ``||g(x + alpha p)||^2 <= ||g(x)||^2 + 2 rho alpha delta``.

    ``delta`` is ``<p, H g>`` for the curvature operator that produced ``p``
    and must be non-positive. Trial points outside the domain count as an
    evaluation and are shrunk past. ``ls_evals`` is the number of trials.
    """
    if delta > 0:
        raise ValueError(f"delta must be <= 0 for a descent direction, got {delta:g}")
    x = np.asarray(x, dtype=float)
    g = problem.eval_g(x) if g is None else g
    g2 = float(g @ g)
    alpha = cfg.alpha0
    for j in range(cfg.ls_max_backtracks + 1):
        xn, gn = _trial(problem, x, p, alpha)
        if gn is not None and float(gn @ gn) <= g2 + 2.0 * cfg.rho * alpha * delta:
            return LineSearchResult(alpha, j + 1, True, xn, gn)
        if j < cfg.ls_max_backtracks:
            alpha *= cfg.ls_shrink
    return LineSearchResult(alpha, cfg.ls_max_backtracks + 1, False)


def armijo_f(problem, x, p, fx: float, slope: float, cfg) -> LineSearchResult:
    """Backtracking on ``f(x + alpha p) <= f(x) + rho alpha <g, p>``; one ``f`` call per trial."""
    if slope > 0:
        raise ValueError("direction is not a descent direction for f")
    x = np.asarray(x, dtype=float)
    alpha = cfg.alpha0
    for j in range(cfg.ls_max_backtracks + 1):
        xn = x + alpha * p
        fn = None
        if problem.segment_check(x, xn):
            try:
                fn = problem.eval_f(xn)
            except DomainError:
                fn = None
        if fn is not None and np.isfinite(fn) and fn <= fx + cfg.rho * alpha * slope:
            return LineSearchResult(alpha, j + 1, True, xn, None, fn)
        if j < cfg.ls_max_backtracks:
            alpha *= cfg.ls_shrink
    return LineSearchResult(alpha, cfg.ls_max_backtracks + 1, False)


def _interp(a_lo, f_lo, d_lo, a_hi, f_hi):
    """Minimizer of the quadratic through ``(a_lo, f_lo)`` with slope ``d_lo`` and ``(a_hi, f_hi)``,
    safeguarded into the inner 80% of the bracket."""
    h = a_hi - a_lo
    denom = 2.0 * (f_hi - f_lo - d_lo * h)
    lo, hi = sorted((a_lo, a_hi))
    width = hi - lo
    if denom > 0 and np.isfinite(denom):
        a = a_lo - d_lo * h * h / denom
        if lo + 0.1 * width <= a <= hi - 0.1 * width:
            return a
    return 0.5 * (a_lo + a_hi)


def wolfe_strong(phi, alpha0: float, c1: float, c2: float, max_evals: int, alpha_max: float = 1e10):
    """Strong-Wolfe search on ``phi(alpha) -> (value, slope)``.

    Bracketing by doubling, then a zoom by safeguarded quadratic
    interpolation. ``phi`` may return ``inf`` outside the domain, which is
    treated as a failed sufficient-decrease test. Returns
    ``(alpha or None, n_evals)``.
    """
    f0, d0 = phi(0.0)
    if not d0 < 0:
        return None, 0
    evals = 0
    a_prev, f_prev, d_prev = 0.0, f0, d0
    a = alpha0
    lo = hi = None
    while evals < max_evals:
        fa, da = phi(a)
        evals += 1
        if not np.isfinite(fa) or fa > f0 + c1 * a * d0 or (a_prev > 0 and fa >= f_prev):
            lo, hi = (a_prev, f_prev, d_prev), (a, fa)
            break
        if abs(da) <= -c2 * d0:
            return a, evals
        if da >= 0:
            lo, hi = (a, fa, da), (a_prev, f_prev)
            break
        a_prev, f_prev, d_prev = a, fa, da
        a = min(2.0 * a, alpha_max)
    if lo is None:
        return None, evals
    while evals < max_evals:
        (a_lo, f_lo, d_lo), (a_hi, f_hi) = lo, hi
        a = _interp(a_lo, f_lo, d_lo, a_hi, f_hi if np.isfinite(f_hi) else f_lo + abs(d_lo) * abs(a_hi - a_lo))
        if a == a_lo or a == a_hi:
            break
        fa, da = phi(a)
        evals += 1
        if not np.isfinite(fa) or fa > f0 + c1 * a * d0 or fa >= f_lo:
            hi = (a, fa)
            continue
        if abs(da) <= -c2 * d0:
            return a, evals
        if da * (a_hi - a_lo) >= 0:
            hi = (a_lo, f_lo)
        lo = (a, fa, da)
    return None, evals
