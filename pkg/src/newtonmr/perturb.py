"""Hessian perturbations, measured spectral diagnostics and predicted constants.

The predicted quantities follow the stability analysis of Newton-MR under an
additive Hessian perturbation ``H_tilde = H + E`` with ``||E|| = eps``:

* ``teps``        bound on ``||(H H^+ - H~ H~^+) g|| / ||g||``
* ``nu_tilde``    lower bound on ``||U~^T g||^2 / ||g||^2``
* ``gamma_tilde`` such that ``||H~^+ g|| <= ||g|| / gamma_tilde``
* ``eta``         global linear rate of ``||g||^2``
* ``c1, c2``      local recursion ``||g+|| <= c1 ||g||^2 + c2 ||g||``

Each formula is only claimed inside a perturbation regime; outside of it the
``predicted_*`` helpers raise :class:`RegimeError` instead of returning NaN.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from .linalg import as_vector, eigh, numerical_rank, pinv_apply, range_project, spectral_norm, symmetrize

PERTURBATION_KINDS = ("goe", "fixed_matrix", "none")


class RegimeError(ValueError):
    """A predicted constant was requested outside the regime where it holds."""


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str = "none"
    epsilon: float = 0.0
    rng_seed: int = 0
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.kind == "fixed_matrix" and self.matrix is None:
            raise ValueError("fixed_matrix perturbation needs a matrix")

    def draw(self, d: int, seed: int | None = None) -> np.ndarray:
        """Return the ``d x d`` perturbation with spectral norm ``epsilon``."""
        if self.kind == "none" or self.epsilon == 0.0:
            return np.zeros((d, d))
        if self.kind == "goe":
            return sample_goe(d, self.epsilon, self.rng_seed if seed is None else seed)
        E = symmetrize(self.matrix)
        if E.shape != (d, d):
            raise ValueError("perturbation matrix has the wrong shape")
        nrm = spectral_norm(E)
        return E if nrm == 0 else self.epsilon * E / nrm


def sample_goe(d: int, epsilon: float, seed: int) -> np.ndarray:
    """Gaussian-orthogonal-ensemble draw rescaled to spectral norm ``epsilon``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if epsilon == 0:
        return np.zeros((d, d))
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d))
    E = (G + G.T) / np.sqrt(2.0)
    return epsilon * E / spectral_norm(E)


@dataclass(frozen=True)
class SpectralDiagnostics:
    """Measured and predicted stability constants at one point.

    ``C_const`` is the perturbation-model constant actually usable by the
    theory, ``max(1, C_measured)``; ``C_measured = eps ||H~^+||`` is kept for
    reporting. Predicted fields are NaN when the point is outside the regime
    of the corresponding bound.
    """

    gamma: float
    nu: float
    epsilon: float
    C_const: float
    r: int
    r_tilde: int
    acute: bool
    teps: float = math.nan
    nu_tilde: float = math.nan
    gamma_tilde: float = math.nan
    C_measured: float = 0.0
    gamma_defined: bool = True

    def with_predictions(self) -> "SpectralDiagnostics":
        vals = {}
        for name, fn in (("teps", predicted_teps), ("nu_tilde", predicted_nu_tilde),
                         ("gamma_tilde", predicted_gamma_tilde)):
            try:
                vals[name] = fn(self)
            except RegimeError:
                vals[name] = math.nan
        return SpectralDiagnostics(**{**asdict(self), **vals})


@dataclass(frozen=True)
class TheoryConstants:
    L_x0: float = 1.0
    L_H: float = 0.0
    rho: float = 1e-4
    theta: float = 1e-2


def measure_diagnostics(H, H_tilde, g, tol: float | None = None) -> SpectralDiagnostics:
    """Measure ``gamma, nu, eps, C`` and ranks of ``H`` and ``H_tilde`` at ``g``.

    ``tol`` is the rank threshold for both matrices; ``None`` applies the
    default ``d * eps * |lambda_1|`` to each matrix separately.
    """
    H = symmetrize(H)
    Ht = symmetrize(H_tilde)
    if H.shape != Ht.shape:
        raise ValueError("H and H_tilde must have the same shape")
    g = as_vector(g)
    dec = eigh(H)
    dec_t = eigh(Ht)
    r = numerical_rank(dec, tol)
    rt = numerical_rank(dec_t, tol)
    mags = np.abs(dec.eigenvalues[:r])
    gamma = float(mags.min()) if r else math.nan
    gnorm2 = float(g @ g)
    if gnorm2 == 0.0:
        nu = 1.0
    else:
        pg = range_project(dec, g, tol)
        nu = float(pg @ pg) / gnorm2
    eps = spectral_norm(Ht - H)
    if eps > 0 and rt:
        C_meas = eps / float(np.abs(dec_t.eigenvalues[rt - 1]))
    else:
        C_meas = 0.0
    C = max(1.0, C_meas) if eps > 0 else 0.0
    diag = SpectralDiagnostics(gamma=gamma, nu=nu, epsilon=eps, C_const=C, r=r, r_tilde=rt,
                               acute=(r == rt), C_measured=C_meas, gamma_defined=r > 0)
    return diag.with_predictions()


def _check_gamma(diag: SpectralDiagnostics):
    if not diag.gamma_defined or not diag.gamma > 0:
        raise RegimeError("gamma is undefined (H has no non-zero eigenvalue)")
    if not diag.epsilon < diag.gamma:
        raise RegimeError(f"requires epsilon < gamma, got {diag.epsilon:g} >= {diag.gamma:g}")


def predicted_teps(diag: SpectralDiagnostics) -> float:
    """``4 eps / gamma + sqrt(1 - nu)``, or ``2 eps / gamma`` when acute."""
    _check_gamma(diag)
    if diag.acute:
        return 2.0 * diag.epsilon / diag.gamma
    return 4.0 * diag.epsilon / diag.gamma + math.sqrt(max(0.0, 1.0 - diag.nu))


def predicted_nu_tilde(diag: SpectralDiagnostics) -> float:
    """``2 nu - 1 - 4 eps / gamma``; ``nu - 2 eps / gamma`` for acute perturbations."""
    _check_gamma(diag)
    eps, gamma, nu = diag.epsilon, diag.gamma, diag.nu
    if diag.acute:
        if not nu > 0:
            raise RegimeError("acute branch requires nu > 0")
        if not eps < gamma * nu / 2:
            raise RegimeError(f"acute branch requires epsilon < gamma*nu/2 = {gamma * nu / 2:g}")
        return nu - 2.0 * eps / gamma
    if not nu > 0.5:
        raise RegimeError("general branch requires nu > 0.5")
    bound = gamma * (2 * nu - 1) / 4
    if not eps < bound:
        raise RegimeError(f"general branch requires epsilon < gamma*(2nu-1)/4 = {bound:g}")
    return 2.0 * nu - 1.0 - 4.0 * eps / gamma


def predicted_gamma_tilde(diag: SpectralDiagnostics) -> float:
    """Lower bound on the effective regularity of ``H~^+`` along ``g``."""
    _check_gamma(diag)
    eps, gamma = diag.epsilon, diag.gamma
    if diag.acute:
        return gamma - eps
    if not eps > 0:
        raise RegimeError("general branch requires epsilon > 0")
    C = diag.C_const
    inv = 1.0 / (gamma - eps) + C * (2.0 / gamma + math.sqrt(max(0.0, 1.0 - diag.nu)) / eps)
    return 1.0 / inv


def _descent_factor(diag: SpectralDiagnostics, mode: str, theta: float) -> float:
    if mode == "exact":
        return predicted_nu_tilde(diag)
    if mode == "inexact":
        return 1.0 - theta
    raise ValueError(f"update_mode must be 'exact' or 'inexact', got {mode!r}")


def predicted_eta(tc: TheoryConstants, diag: SpectralDiagnostics, update_mode: str = "exact") -> float:
    """Predicted contraction ``||g_{k+1}||^2 <= (1 - eta) ||g_k||^2``."""
    q = _descent_factor(diag, update_mode, tc.theta)
    gt = predicted_gamma_tilde(diag)
    inner = (1.0 - tc.rho) * q - diag.epsilon / gt
    eta = 4.0 * tc.rho * q * gt * gt / tc.L_x0 * inner
    return min(1.0, max(0.0, eta))


def predicted_local_constants(tc: TheoryConstants, diag: SpectralDiagnostics, update_mode: str = "exact"):
    """``(c1, c2)`` of the unit-step recursion ``||g+|| <= c1 ||g||^2 + c2 ||g||``."""
    gt = predicted_gamma_tilde(diag)
    c1 = tc.L_H / (2.0 * gt * gt)
    if update_mode == "exact":
        tail = math.sqrt(max(0.0, 1.0 - predicted_nu_tilde(diag)))
    elif update_mode == "inexact":
        tail = math.sqrt(tc.theta)
    else:
        raise ValueError(f"update_mode must be 'exact' or 'inexact', got {update_mode!r}")
    return c1, diag.epsilon / gt + tail


def delta_gate(t: float, rho: float) -> float:
    """Smallest admissible ``nu`` for perturbation-model constant ``t``."""
    k = (1.0 - rho) ** 2
    return (math.sqrt((t * t + 4 * k) ** 2 - 16 * k * k) - (t * t - 4 * k)) / (8 * k)


def _sup_root(h, hi: float) -> float:
    """Supremum of ``{eps in [0, hi) : h(eps) > 0}`` for decreasing ``h``."""
    if h(0.0) <= 0:
        return 0.0
    if h(hi) > 0:
        return hi
    return bisect(h, 0.0, hi, xtol=1e-12, maxiter=500)


def epsilon_thresholds(diag: SpectralDiagnostics, rho: float) -> dict:
    """Largest perturbation sizes for which the convergence guarantees apply.

    Returns ``general_bound`` (exact updates, any perturbation, together with
    the gate ``nu > delta_C``), ``acute_eta_bound`` and ``nu1_eta_bound``
    (global rate under inherent stability), ``acute_local_bound`` and
    ``nu1_local_bound`` (unit-step local rate). Bounds that are only given
    implicitly are solved by bisection on ``[0, gamma)``.
    """
    gamma, nu = diag.gamma, diag.nu
    C = max(diag.C_const, 1.0)
    if not gamma > 0:
        raise RegimeError("gamma must be positive")
    a = C + 2 * (1 - rho)
    b = (1 - rho) * (2 * nu - 1) - C * math.sqrt(max(0.0, 1 - nu))
    if b <= 0:
        general = 0.0
    else:
        s = 2 * a + b + 1
        general = gamma * (s - math.sqrt(s * s - 8 * a * b)) / (4 * a)

    def acute_eta(e):
        return (1 - rho) * (gamma - e) * (nu * gamma - 2 * e) / gamma - e

    def nu1_eta(e):
        return (1 - rho) * (gamma - e) * (gamma - 4 * e) / ((1 + 2 * C) * gamma - 2 * C * e) - e

    def acute_local(e):
        return (gamma - e) * (1 - math.sqrt(max(0.0, 1 - (nu - 2 * e / gamma)))) - e

    def nu1_local(e):
        return (gamma - e) * (1 - 2 * math.sqrt(e / gamma)) / (1 + 2 * C) - e

    return {
        "general_bound": general,
        "acute_eta_bound": _sup_root(acute_eta, nu * gamma / 2),
        "nu1_eta_bound": _sup_root(nu1_eta, gamma / 4),
        "acute_local_bound": _sup_root(acute_local, nu * gamma / 2),
        "nu1_local_bound": _sup_root(nu1_local, gamma / 4),
        "delta_C": delta_gate(C, rho),
    }


def subspace_sin(U, U_tilde) -> float:
    """Spectral norm of ``U U^T - U~ U~^T`` for two orthonormal bases."""
    U = np.atleast_2d(np.asarray(U, dtype=float))
    Ut = np.atleast_2d(np.asarray(U_tilde, dtype=float))
    if U.shape != Ut.shape:
        raise ValueError(f"basis shapes differ: {U.shape} vs {Ut.shape}")
    D = U @ U.T - Ut @ Ut.T
    return min(1.0, spectral_norm(D))


def projected_gradient_gap(H, H_tilde, g, tol: float | None = None) -> float:
    """``||(H H^+ - H~ H~^+) g|| / ||g||``."""
    g = as_vector(g)
    gn = np.linalg.norm(g)
    if gn == 0:
        raise ValueError("gradient must be non-zero")
    diff = range_project(eigh(H), g, tol) - range_project(eigh(H_tilde), g, tol)
    return float(np.linalg.norm(diff) / gn)


def perturbed_pinv_norm_along(H_tilde, g, tol: float | None = None) -> float:
    """``||H~^+ g||``."""
    return float(np.linalg.norm(pinv_apply(eigh(H_tilde), g, tol)))


DIAGNOSTIC_COLUMNS = ("gamma", "nu", "epsilon", "C", "r", "r_tilde", "acute",
                      "teps", "nu_tilde", "gamma_tilde", "eta", "c1", "c2")


def diagnostics_row(diag: SpectralDiagnostics, tc: TheoryConstants | None = None,
                    update_mode: str = "exact") -> dict:
    """Flatten diagnostics (and, given ``tc``, the rate constants) to a CSV row."""
    eta = c1 = c2 = math.nan
    if tc is not None:
        try:
            eta = predicted_eta(tc, diag, update_mode)
            c1, c2 = predicted_local_constants(tc, diag, update_mode)
        except RegimeError:
            pass
    return {
        "gamma": diag.gamma, "nu": diag.nu, "epsilon": diag.epsilon, "C": diag.C_const,
        "r": diag.r, "r_tilde": diag.r_tilde, "acute": int(diag.acute), "teps": diag.teps,
        "nu_tilde": diag.nu_tilde, "gamma_tilde": diag.gamma_tilde, "eta": eta, "c1": c1, "c2": c2,
    }


def diagnostics_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=DIAGNOSTIC_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


__all__ = [
    "PerturbationSpec", "RegimeError", "SpectralDiagnostics", "TheoryConstants", "sample_goe",
    "measure_diagnostics", "predicted_teps", "predicted_nu_tilde", "predicted_gamma_tilde",
    "predicted_eta", "predicted_local_constants", "epsilon_thresholds", "delta_gate",
    "subspace_sin", "projected_gradient_gap", "diagnostics_row", "diagnostics_csv",
    "DIAGNOSTIC_COLUMNS",
]
