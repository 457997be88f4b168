"""Negative log-likelihood of a two-component Gaussian mixture.

Only the mixing logit ``w`` and the means ``u, v`` are optimized; the
covariances are fixed. ``x = [w; u; v]`` so ``dim = 2p + 1``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .base import Problem
from .data import Dataset

_LOG2PI = np.log(2.0 * np.pi)


def _chol(S, name):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square")
    try:
        fac = cho_factor(0.5 * (S + S.T), lower=True)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive definite") from None
    logdet = 2.0 * np.sum(np.log(np.diag(fac[0])))
    return fac, logdet


class GmmProblem(Problem):
    finite_sum = True

    def __init__(self, data: Dataset, sigma1, sigma2):
        self.A = data.features
        self.n_components, self.p = self.A.shape
        self.dim = 2 * self.p + 1
        if np.shape(sigma1) != (self.p, self.p) or np.shape(sigma2) != (self.p, self.p):
            raise ValueError("covariances must be p x p")
        self._f1, self._ld1 = _chol(sigma1, "sigma1")
        self._f2, self._ld2 = _chol(sigma2, "sigma2")

    def _unpack(self, x):
        x = np.asarray(x, dtype=float)
        return x[0], x[1:self.p + 1], x[self.p + 1:]

    def _terms(self, x, idx):
        """Per-sample whitened residuals, responsibilities and log-likelihoods."""
        w, u, v = self._unpack(x)
        A = self.A if idx is None else self.A[idx]
        D1, D2 = A - u, A - v
        Z1 = cho_solve(self._f1, D1.T).T
        Z2 = cho_solve(self._f2, D2.T).T
        l1 = -np.logaddexp(0.0, -w) - 0.5 * (np.sum(D1 * Z1, axis=1) + self._ld1 + self.p * _LOG2PI)
        l2 = -np.logaddexp(0.0, w) - 0.5 * (np.sum(D2 * Z2, axis=1) + self._ld2 + self.p * _LOG2PI)
        lse = np.logaddexp(l1, l2)
        r1 = np.exp(l1 - lse)
        r2 = np.exp(l2 - lse)
        zeta = 0.5 * (1.0 + np.tanh(0.5 * w))
        return zeta, Z1, Z2, r1, r2, lse

    def eval_f(self, x) -> float:
        return float(-np.sum(self._terms(x, None)[-1]))

    def eval_g(self, x, idx=None) -> np.ndarray:
        zeta, Z1, Z2, r1, r2, _ = self._terms(x, idx)
        gw = -np.sum(r1 - zeta)
        gu = -(r1 @ Z1)
        gv = -(r2 @ Z2)
        return self._scale(idx) * np.concatenate([[gw], gu, gv])

    def _block_part(self, zeta, r1, r2, v):
        """The curvature of each component's own log-density, responsibility weighted."""
        vw, vu, vv = self._unpack(v)
        m = r1.shape[0]
        hw = m * zeta * (1.0 - zeta) * vw
        hu = r1.sum() * cho_solve(self._f1, vu)
        hv = r2.sum() * cho_solve(self._f2, vv)
        return np.concatenate([[hw], hu, hv])

    def hvp(self, x, v, idx=None) -> np.ndarray:
        zeta, Z1, Z2, r1, r2, _ = self._terms(x, idx)
        vw, vu, vv = self._unpack(v)
        # delta_i = (1, Z1_i, -Z2_i) is the gap between the two components' score vectors
        s = r1 * r2 * (vw + Z1 @ vu - Z2 @ vv)
        cross = np.concatenate([[s.sum()], s @ Z1, -(s @ Z2)])
        return self._scale(idx) * (self._block_part(zeta, r1, r2, v) - cross)

    def curvature_product(self, x, idx=None, gauss_newton: bool = False):
        zeta, Z1, Z2, r1, r2, _ = self._terms(x, idx)
        scale = self._scale(idx)
        w12 = r1 * r2

        def prod(v):
            out = self._block_part(zeta, r1, r2, v)
            if not gauss_newton:
                vw, vu, vv = self._unpack(v)
                s = w12 * (vw + Z1 @ vu - Z2 @ vv)
                out = out - np.concatenate([[s.sum()], s @ Z1, -(s @ Z2)])
            return scale * out
        return prod

    def gnvp(self, x, v, idx=None) -> np.ndarray:
        """Positive semi-definite part of the Hessian (the cross term dropped)."""
        zeta, _, _, r1, r2, _ = self._terms(x, idx)
        return self._scale(idx) * self._block_part(zeta, r1, r2, v)


def make_gmm(data: Dataset, sigma1, sigma2) -> GmmProblem:
    return GmmProblem(data, sigma1, sigma2)
