"""Dense symmetric linear algebra and the matrix-free operator abstraction.

Everything the solvers need from a Hessian goes through :class:`LinearOperator`.
The dense routines (:func:`eigh`, :func:`pinv_apply`, :func:`range_project`)
back the exact-update path and double as oracles in the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

EPS = np.finfo(float).eps


class LinAlgError(RuntimeError):
    """Raised when a dense factorization fails or inputs are malformed."""


def as_vector(v) -> np.ndarray:
    """Return ``v`` as a finite 1-d float array."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


def symmetrize(A) -> np.ndarray:
    """Return ``(A + A^T) / 2`` as a float array; symmetric to the last bit."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    return 0.5 * (A + A.T)


@dataclass
class LinearOperator:
    """Symmetric ``d x d`` operator known only through its action ``v -> A v``.

    ``cost_per_apply`` is expressed in the oracle units used for accounting; a
    Hessian-vector product of a finite-sum objective over ``s`` of ``n`` terms
    costs ``2 s / n``.
    """

    dim: int
    apply: Callable[[np.ndarray], np.ndarray]
    cost_per_apply: float = 2.0
    applies: int = field(default=0, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("operator dimension must be positive")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        self.applies += 1
        return np.asarray(self.apply(v), dtype=float)

    def __matmul__(self, v):
        return self(v)

    def to_dense(self) -> np.ndarray:
        """Densify by applying to the identity columns (``dim`` applies)."""
        cols = [self(e) for e in np.eye(self.dim)]
        return symmetrize(np.column_stack(cols))

    @classmethod
    def from_dense(cls, A, cost_per_apply: float = 2.0) -> "LinearOperator":
        A = symmetrize(A)
        return cls(A.shape[0], lambda v: A @ v, cost_per_apply)


def check_operator(op: LinearOperator, probes: int = 100, seed: int = 0, rtol: float = 1e-10):
    """Statistically check linearity and symmetry of ``op``.

    Returns the worst relative linearity and symmetry defects over ``probes``
    random pairs; raises :class:`LinAlgError` if either exceeds ``rtol``.
    """
    rng = np.random.default_rng(seed)
    lin_err = sym_err = 0.0
    for _ in range(probes):
        u, v = rng.standard_normal((2, op.dim))
        a, b = rng.standard_normal(2)
        Au, Av = op(u), op(v)
        lhs = op(a * u + b * v)
        rhs = a * Au + b * Av
        scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), 1e-300)
        lin_err = max(lin_err, np.linalg.norm(lhs - rhs) / scale)
        s_scale = max(np.linalg.norm(u) * np.linalg.norm(Av), 1e-300)
        sym_err = max(sym_err, abs(u @ Av - v @ Au) / s_scale)
    if lin_err > rtol or sym_err > rtol:
        raise LinAlgError(f"operator check failed: linearity {lin_err:.2e}, symmetry {sym_err:.2e}")
    return lin_err, sym_err


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix ordered by descending ``|lambda|``.

    Signed eigenvalues are kept; ``eigenvectors[:, i]`` pairs with
    ``eigenvalues[i]``. ``rank_tol`` is the default threshold used by the
    rank-dependent helpers when no explicit ``tol`` is passed.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank_tol: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def tol(self, tol: float | None = None) -> float:
        return self.rank_tol if tol is None else float(tol)

    def range_basis(self, tol: float | None = None) -> np.ndarray:
        """Orthonormal basis of the numerical range, ``d x rank``."""
        return self.eigenvectors[:, np.abs(self.eigenvalues) > self.tol(tol)]

    def null_basis(self, tol: float | None = None) -> np.ndarray:
        return self.eigenvectors[:, np.abs(self.eigenvalues) <= self.tol(tol)]

    def reconstruct(self) -> np.ndarray:
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def default_rank_tol(eigenvalues: np.ndarray) -> float:
    """``d * eps * |lambda_1|``, the usual numerical-rank threshold."""
    if eigenvalues.size == 0:
        return 0.0
    return eigenvalues.size * EPS * float(np.max(np.abs(eigenvalues)))


def eigh(A, rank_tol: float | None = None) -> EigenDecomposition:
    """Spectral factorization of a symmetric matrix, sorted by magnitude.

    Uses LAPACK's symmetric divide-and-conquer driver through numpy. Ties in
    magnitude keep the ascending-value order LAPACK returns, so the ordering
    is deterministic.
    """
    A = symmetrize(A)
    if A.shape[0] < 1:
        raise ValueError("matrix must have dimension >= 1")
    if not np.all(np.isfinite(A)):
        raise LinAlgError("matrix has non-finite entries")
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise LinAlgError(f"symmetric eigensolver did not converge: {exc}") from exc
    order = np.argsort(-np.abs(w), kind="stable")
    w, V = w[order], V[:, order]
    tol = default_rank_tol(w) if rank_tol is None else float(rank_tol)
    return EigenDecomposition(w, V, tol)


def numerical_rank(dec: EigenDecomposition, tol: float | None = None) -> int:
    """Number of eigenvalues with ``|lambda| > tol``."""
    tol = dec.tol(tol)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    return int(np.count_nonzero(np.abs(dec.eigenvalues) > tol))


def pinv_apply(dec: EigenDecomposition, v, tol: float | None = None) -> np.ndarray:
    """Apply the Moore-Penrose pseudo-inverse: ``sum_i (u_i^T v / lambda_i) u_i``."""
    v = as_vector(v)
    keep = np.abs(dec.eigenvalues) > dec.tol(tol)
    U = dec.eigenvectors[:, keep]
    return U @ ((U.T @ v) / dec.eigenvalues[keep])


def pinv_matrix(dec: EigenDecomposition, tol: float | None = None) -> np.ndarray:
    keep = np.abs(dec.eigenvalues) > dec.tol(tol)
    U = dec.eigenvectors[:, keep]
    return (U / dec.eigenvalues[keep]) @ U.T


def range_project(dec: EigenDecomposition, v, tol: float | None = None) -> np.ndarray:
    """Orthogonal projection of ``v`` onto the numerical range."""
    v = as_vector(v)
    U = dec.range_basis(tol)
    return U @ (U.T @ v)


def range_projector(dec: EigenDecomposition, tol: float | None = None) -> np.ndarray:
    U = dec.range_basis(tol)
    return U @ U.T


def spectral_norm(A) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix."""
    A = symmetrize(A)
    if not A.any():
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(A))))
