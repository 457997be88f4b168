"""Small closed-form test problems."""

from __future__ import annotations

import numpy as np

from ..linalg import symmetrize
from .base import DomainError, Problem


class FractionProblem(Problem):
    """``f(x) = a x_1^2 / (b - x_2)`` on ``x_2 != b``.

    The Hessian has rank one everywhere and every point ``(0, x_2)`` is
    stationary.
    """

    dim = 2

    def __init__(self, a: float = 100.0, b: float = 1.0):
        self.a, self.b = float(a), float(b)

    def domain_check(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(np.isfinite(x)) and x[1] != self.b)

    def segment_check(self, x, y) -> bool:
        # the domain is two open half-planes; a segment stays in one of them
        return self.domain_check(y) and (x[1] - self.b) * (y[1] - self.b) > 0

    def _s(self, x):
        self.require_domain(x)
        return self.b - x[1]

    def eval_f(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.a * x[0] ** 2 / self._s(x))

    def eval_g(self, x, idx=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = self._s(x)
        return np.array([2 * self.a * x[0] / s, self.a * x[0] ** 2 / s ** 2])

    def hessian(self, x, idx=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        s = self._s(x)
        z = np.array([s, x[0]])
        return (2 * self.a / s ** 3) * np.outer(z, z)

    def hvp(self, x, v, idx=None) -> np.ndarray:
        return self.hessian(x) @ np.asarray(v, dtype=float)


class QuadraticProblem(Problem):
    """``f(x) = x^T A x / 2 - c^T x + (sigma / 6) sum_i x_i^3``.

    With ``sigma = 0`` (the default) this is a strongly convex quadratic; a
    nonzero ``sigma`` gives Hessian ``A + sigma diag(x)``, Lipschitz with
    constant ``|sigma|``.
    """

    def __init__(self, A, c, sigma: float = 0.0, require_pd: bool = True):
        A = symmetrize(A)
        c = np.asarray(c, dtype=float)
        if c.shape != (A.shape[0],):
            raise ValueError("c must match A")
        if require_pd and np.min(np.linalg.eigvalsh(A)) <= 0:
            raise ValueError("A must be positive definite")
        self.A, self.c, self.sigma = A, c, float(sigma)
        self.dim = A.shape[0]

    def eval_f(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.A @ x - self.c @ x + self.sigma / 6.0 * np.sum(x ** 3))

    def eval_g(self, x, idx=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.A @ x - self.c + 0.5 * self.sigma * x ** 2

    def hessian(self, x, idx=None) -> np.ndarray:
        return self.A + self.sigma * np.diag(np.asarray(x, dtype=float))

    def hvp(self, x, v, idx=None) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.A @ v + self.sigma * np.asarray(x, dtype=float) * v

    @property
    def hessian_lipschitz(self) -> float:
        return abs(self.sigma)


def make_fraction(a: float = 100.0, b: float = 1.0) -> FractionProblem:
    return FractionProblem(a, b)


def make_quadratic(A, c) -> QuadraticProblem:
    return QuadraticProblem(A, c)


def make_cubic_quadratic(A, c, sigma: float) -> QuadraticProblem:
    """Quadratic plus a separable cubic; the Hessian varies with ``x``."""
    return QuadraticProblem(A, c, sigma, require_pd=False)


__all__ = ["DomainError", "FractionProblem", "QuadraticProblem", "make_fraction",
           "make_quadratic", "make_cubic_quadratic"]
