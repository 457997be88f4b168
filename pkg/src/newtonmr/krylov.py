"""Minimum-residual Krylov solvers for symmetric, possibly singular systems.

:func:`minres_qlp` returns, at every iteration ``t``, the minimum-norm element
among the residual minimizers over the current Krylov subspace. Rather than the
QLP two-sided factorization, the small projected problem
``min ||T_t y - c_t||`` is solved with a rank-revealing least-squares routine,
which yields the same iterate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import EigenDecomposition, LinearOperator, as_vector, range_project

SEED_MODES = ("auto", "plain", "range_invariant")
TERMINATIONS = ("tolerance_met", "max_iters", "breakdown")

# relative threshold for the Lanczos off-diagonal and for the rank of T_t
_BREAKDOWN_RTOL = 1e-12
_TRIDIAG_RCOND = 1e-12


@dataclass(frozen=True)
class KrylovConfig:
    max_iters: int = 200
    theta: float = 0.0
    seed_mode: str = "auto"
    reorthogonalize: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError("theta must lie in [0, 1)")
        if self.seed_mode not in SEED_MODES:
            raise ValueError(f"unknown seed_mode {self.seed_mode!r}")


@dataclass
class SolveTrace:
    """Per-iteration ``(t, ||A p_t - b||, ||A p_t||, ||p_t||)`` telemetry."""

    rows: list = field(default_factory=list)
    termination_reason: str = "max_iters"

    @property
    def iterations_used(self) -> int:
        return len(self.rows)

    @property
    def residual_norms(self) -> np.ndarray:
        return np.array([r[1] for r in self.rows])

    @property
    def image_norms(self) -> np.ndarray:
        return np.array([r[2] for r in self.rows])

    @property
    def solution_norms(self) -> np.ndarray:
        return np.array([r[3] for r in self.rows])


@dataclass
class SolveResult:
    solution: np.ndarray
    trace: SolveTrace
    oracle_applies: int
    seed: str = "plain"
    basis: np.ndarray | None = None
    iterates: list | None = None

    @property
    def iterations(self) -> int:
        return self.trace.iterations_used


def choose_seed(op: LinearOperator, rhs, dec: EigenDecomposition | None = None,
                mode: str = "auto", tol: float | None = None):
    """Pick the vector that generates the Krylov subspace.

    ``plain`` seeds with ``rhs`` (MINRES); ``range_invariant`` seeds with
    ``A rhs`` (MR-II) so every iterate stays in ``Range(A)``. In ``auto`` mode
    a decomposition, when given, decides range membership; without one the
    range-invariant seed is used since it is always admissible.

    Returns ``(kind, seed_vector)``.
    """
    rhs = as_vector(rhs)
    if mode not in SEED_MODES:
        raise ValueError(f"unknown seed mode {mode!r}")
    if mode == "auto":
        if dec is not None:
            nrm = np.linalg.norm(rhs)
            off = np.linalg.norm(rhs - range_project(dec, rhs, tol))
            mode = "plain" if off <= 1e-8 * nrm else "range_invariant"
        else:
            mode = "range_invariant"
    if mode == "plain":
        return "plain", rhs.copy()
    return "range_invariant", op(rhs)


def _lanczos_step(op, Q, q_prev, beta_prev, reorth):
    q = Q[-1]
    w = op(q)
    alpha = float(q @ w)
    w = w - alpha * q
    if q_prev is not None:
        w = w - beta_prev * q_prev
    if reorth:
        Qm = np.column_stack(Q)
        for _ in range(2):
            w = w - Qm @ (Qm.T @ w)
    return alpha, w


def minres_qlp(op: LinearOperator, rhs, cfg: KrylovConfig = KrylovConfig(),
               dec: EigenDecomposition | None = None, keep_iterates: bool = False) -> SolveResult:
    """Minimum-norm, minimum-residual solve of ``A p = rhs``.

    Iterates until ``||A p_t - rhs|| <= sqrt(theta) ||rhs||``, the Krylov
    subspace becomes invariant (``breakdown``) or ``cfg.max_iters`` is hit.
    The Newton-MR driver calls this with ``rhs = -g``.

    Parameters
    ----------
    op:
        Symmetric operator.
    rhs:
        Right-hand side; need not lie in ``Range(A)``.
    cfg:
        Solver settings, see :class:`KrylovConfig`.
    dec:
        Optional eigendecomposition of ``A``, used only by ``seed_mode="auto"``.
    keep_iterates:
        Store every ``p_t`` on the result (diagnostics and tests).
    """
    b = as_vector(rhs)
    d = b.shape[0]
    if d != op.dim:
        raise ValueError("rhs dimension does not match operator")
    applies0 = op.applies
    bnorm = float(np.linalg.norm(b))
    trace = SolveTrace()
    if bnorm == 0.0:
        trace.termination_reason = "tolerance_met"
        return SolveResult(np.zeros(d), trace, 0, "plain", np.zeros((d, 0)), [] if keep_iterates else None)

    kind, s = choose_seed(op, b, dec, cfg.seed_mode)
    snorm = float(np.linalg.norm(s))
    tol = np.sqrt(cfg.theta) * bnorm
    iterates = [] if keep_iterates else None
    if snorm == 0.0:
        # rhs is orthogonal to Range(A); the zero vector is the min-norm LS solution
        trace.rows.append((1, bnorm, 0.0, 0.0))
        trace.termination_reason = "breakdown"
        if keep_iterates:
            iterates.append(np.zeros(d))
        return SolveResult(np.zeros(d), trace, op.applies - applies0, kind, np.zeros((d, 0)), iterates)

    Q = [s / snorm]
    alphas, betas = [], []
    q_prev, beta_prev = None, 0.0
    anorm = 0.0
    p = np.zeros(d)
    for t in range(1, cfg.max_iters + 1):
        alpha, w = _lanczos_step(op, Q, q_prev, beta_prev, cfg.reorthogonalize)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        anorm = max(anorm, abs(alpha), beta_prev, beta)
        exhausted = beta <= _BREAKDOWN_RTOL * anorm or (cfg.reorthogonalize and t >= d)

        rows = t if exhausted else t + 1
        T = np.zeros((rows, t))
        T[np.arange(t), np.arange(t)] = alphas
        if t > 1:
            T[np.arange(1, t), np.arange(t - 1)] = betas
            T[np.arange(t - 1), np.arange(1, t)] = betas
        if not exhausted:
            T[t, t - 1] = beta
            Qn = np.column_stack(Q + [w / beta])
        else:
            Qn = np.column_stack(Q)
        if kind == "plain":
            c = np.zeros(rows)
            c[0] = bnorm
        else:
            c = Qn.T @ b
        y = np.linalg.lstsq(T, c, rcond=_TRIDIAG_RCOND)[0]
        Qt = Qn[:, :t]
        p = Qt @ y
        Ap = Qn @ (T @ y)
        rnorm = float(np.linalg.norm(Ap - b))
        trace.rows.append((t, rnorm, float(np.linalg.norm(Ap)), float(np.linalg.norm(p))))
        if keep_iterates:
            iterates.append(p.copy())

        if rnorm <= tol:
            trace.termination_reason = "tolerance_met"
            break
        if exhausted:
            trace.termination_reason = "breakdown"
            break
        betas.append(beta)
        q_prev, beta_prev = Q[-1], beta
        Q.append(w / beta)
    else:
        trace.termination_reason = "max_iters"

    basis = np.column_stack(Q[: trace.iterations_used])
    return SolveResult(p, trace, op.applies - applies0, kind, basis, iterates)


def cg(op: LinearOperator, rhs, cfg: KrylovConfig = KrylovConfig()) -> SolveResult:
    """Conjugate gradients with a negative-curvature exit.

    Stops once ``||A p_t - rhs|| <= sqrt(theta) ||rhs||``. If a search
    direction with ``<d, A d> <= 0`` is met, the current iterate is returned
    with ``termination_reason="breakdown"``; on the very first direction the
    right-hand side itself is returned, which is the steepest-descent
    direction when ``rhs = -g``.
    """
    b = as_vector(rhs)
    d = b.shape[0]
    applies0 = op.applies
    trace = SolveTrace()
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(d)
    if bnorm == 0.0:
        trace.termination_reason = "tolerance_met"
        return SolveResult(x, trace, 0)
    tol = np.sqrt(cfg.theta) * bnorm
    r = b.copy()
    direction = r.copy()
    rr = float(r @ r)
    for t in range(1, cfg.max_iters + 1):
        Ad = op(direction)
        curv = float(direction @ Ad)
        if curv <= 0.0:
            if t == 1:
                x = b.copy()
            trace.termination_reason = "breakdown"
            break
        step = rr / curv
        x = x + step * direction
        r = r - step * Ad
        rnorm = float(np.linalg.norm(r))
        trace.rows.append((t, rnorm, float(np.linalg.norm(b - r)), float(np.linalg.norm(x))))
        if rnorm <= tol:
            trace.termination_reason = "tolerance_met"
            break
        rr_new = rnorm * rnorm
        direction = r + (rr_new / rr) * direction
        rr = rr_new
    else:
        trace.termination_reason = "max_iters"
    return SolveResult(x, trace, op.applies - applies0)


def band_projector(dec: EigenDecomposition, band: str, split: float, tol: float | None = None) -> np.ndarray:
    """Projector onto eigenvectors with ``|lambda| >= split`` (``head``) or
    ``tol < |lambda| < split`` (``tail``)."""
    mag = np.abs(dec.eigenvalues)
    if band == "head":
        keep = mag >= split
    elif band == "tail":
        keep = (mag < split) & (mag > dec.tol(tol))
    else:
        raise ValueError(f"band must be 'head' or 'tail', got {band!r}")
    U = dec.eigenvectors[:, keep]
    return U @ U.T


def decoupled_subspace_solve(op: LinearOperator, rhs, dec: EigenDecomposition, band: str,
                             cfg: KrylovConfig = KrylovConfig(), split: float | None = None,
                             tol: float | None = None) -> SolveResult:
    """Solve ``min ||A x - P b||`` over ``x in P K_t`` for one spectral band.

    ``K_t`` is the Krylov subspace a :func:`minres_qlp` run with the same
    configuration builds; ``P`` is the orthogonal projector onto the band's
    eigenvectors. Summing the head and tail solutions reproduces the joint
    minimum-norm solution when both bands together span ``Range(A)``.
    """
    b = as_vector(rhs)
    if split is None:
        raise ValueError("split threshold is required")
    P = band_projector(dec, band, split, tol)
    joint = minres_qlp(op, b, cfg, dec)
    trace = SolveTrace(termination_reason=joint.trace.termination_reason)
    if not P.any() or joint.basis.shape[1] == 0:
        trace.rows.append((0, float(np.linalg.norm(P @ b)), 0.0, 0.0))
        return SolveResult(np.zeros(b.shape[0]), trace, joint.oracle_applies, joint.seed, joint.basis)
    B = P @ joint.basis
    U, s, _ = np.linalg.svd(B, full_matrices=False)
    W = U[:, s > 1e-10 * max(s[0], 1e-300)]
    AW = np.column_stack([op(w) for w in W.T]) if W.shape[1] else np.zeros((b.shape[0], 0))
    z = np.linalg.lstsq(AW, P @ b, rcond=_TRIDIAG_RCOND)[0]
    x = W @ z
    Ax = AW @ z
    trace.rows.append((joint.iterations, float(np.linalg.norm(Ax - P @ b)),
                       float(np.linalg.norm(Ax)), float(np.linalg.norm(x))))
    return SolveResult(x, trace, joint.oracle_applies + W.shape[1], joint.seed, W)
