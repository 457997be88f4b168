"""Finite-sum problem interface and Hessian sub-sampling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..linalg import LinearOperator, symmetrize


class DomainError(ValueError):
    """Point lies outside the objective's domain."""


class Problem:
    """Objective ``f(x) = sum_i f_i(x)`` with exact oracles.

    Subclasses implement :meth:`eval_f`, :meth:`eval_g` and :meth:`hvp`.
    Passing ``idx`` to :meth:`eval_g` or :meth:`hvp` evaluates the sampled
    estimate ``(n / |S|) sum_{j in S}``, which is unbiased for the full sum.
    """

    dim: int
    n_components: int = 1
    finite_sum: bool = False

    def domain_check(self, x) -> bool:
        return bool(np.all(np.isfinite(x)))

    def segment_check(self, x, y) -> bool:
        """True when the whole segment ``[x, y]`` lies in the domain.

        Line searches accept a trial point only if this holds, so iterates
        never jump between connected components of a non-convex domain.
        """
        return self.domain_check(y)

    def require_domain(self, x):
        if not self.domain_check(x):
            raise DomainError(f"{type(self).__name__}: point outside domain")

    def eval_f(self, x) -> float:
        raise NotImplementedError

    def eval_g(self, x, idx=None) -> np.ndarray:
        raise NotImplementedError

    def hvp(self, x, v, idx=None) -> np.ndarray:
        raise NotImplementedError

    def gnvp(self, x, v, idx=None) -> np.ndarray:
        """Gauss-Newton matrix-vector product, where the problem defines one."""
        raise NotImplementedError(f"{type(self).__name__} has no Gauss-Newton matrix")

    def hessian(self, x, idx=None) -> np.ndarray:
        cols = [self.hvp(x, e, idx) for e in np.eye(self.dim)]
        return symmetrize(np.column_stack(cols))

    def curvature_product(self, x, idx=None, gauss_newton: bool = False):
        """Return ``v -> H(x) v`` (or the Gauss-Newton product) for a fixed ``x``.

        Subclasses may precompute per-point quantities here so repeated
        products inside a Krylov solve are cheap.
        """
        prod = self.gnvp if gauss_newton else self.hvp
        return lambda v: prod(x, v, idx)

    def operator(self, x, idx=None, gauss_newton: bool = False) -> LinearOperator:
        m = self.n_components if idx is None else len(idx)
        x = np.array(x, dtype=float, copy=True)
        return LinearOperator(self.dim, self.curvature_product(x, idx, gauss_newton),
                              2.0 * m / self.n_components)

    def _scale(self, idx) -> float:
        return 1.0 if idx is None else self.n_components / len(idx)


@dataclass(frozen=True)
class SampleSelector:
    """Uniform sampling without replacement of ``max(1, round(fraction n))`` terms."""

    fraction: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")

    def size(self, n: int) -> int:
        raw = self.fraction * n
        if raw < 1:
            warnings.warn(f"sample fraction {self.fraction} of n={n} is below one term; using 1",
                          RuntimeWarning, stacklevel=3)
        return max(1, int(math.floor(raw + 0.5)))

    def sample(self, n: int, iteration: int = 0) -> np.ndarray | None:
        """Sorted sample for outer iteration ``iteration``; ``None`` means all terms."""
        m = self.size(n)
        if m >= n:
            return None
        rng = np.random.default_rng([self.rng_seed, iteration])
        return np.sort(rng.choice(n, size=m, replace=False))


def subsampled_operator(problem: Problem, x, sel: SampleSelector, iteration: int = 0) -> LinearOperator:
    """Operator applying ``(n / |S|) sum_{j in S} H_j(x)`` for a frozen sample ``S``."""
    idx = sel.sample(problem.n_components, iteration) if problem.finite_sum else None
    op = problem.operator(np.array(x, dtype=float, copy=True), idx)
    op.sample = idx
    return op
