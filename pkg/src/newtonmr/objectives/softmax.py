"""Unregularized multinomial logistic (softmax cross-entropy) loss."""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from .base import Problem
from .data import Dataset


class SoftmaxProblem(Problem):
    """Sum of per-sample cross-entropies with class 0 as the reference.

    The parameter vector stacks ``x_1, ..., x_{C-1}`` (each of length ``p``),
    so ``dim = (C - 1) p``.
    """

    finite_sum = True

    def __init__(self, data: Dataset, n_classes: int):
        if data.labels is None:
            raise ValueError("softmax needs labelled data")
        if n_classes < 2:
            raise ValueError("need at least two classes")
        labels = np.asarray(data.labels)
        if labels.min() < 0 or labels.max() >= n_classes:
            raise ValueError(f"labels must lie in [0, {n_classes})")
        self.A = np.asarray(data.features, dtype=float)
        self.labels = labels
        self.C = n_classes
        self.p = self.A.shape[1]
        self.n_components = self.A.shape[0]
        self.dim = (n_classes - 1) * self.p
        Y = np.zeros((self.n_components, n_classes))
        Y[np.arange(self.n_components), labels] = 1.0
        self.Y = Y[:, 1:]

    def _rows(self, idx):
        if idx is None:
            return self.A, self.Y
        return self.A[idx], self.Y[idx]

    def _probs(self, x, A):
        Z = A @ x.reshape(self.C - 1, self.p).T
        Zf = np.hstack([np.zeros((Z.shape[0], 1)), Z])
        lse = logsumexp(Zf, axis=1)
        return Z, lse, np.exp(Z - lse[:, None])

    def eval_f(self, x) -> float:
        Z, lse, _ = self._probs(np.asarray(x, dtype=float), self.A)
        return float(np.sum(lse) - np.sum(Z * self.Y))

    def eval_g(self, x, idx=None) -> np.ndarray:
        A, Y = self._rows(idx)
        _, _, P = self._probs(np.asarray(x, dtype=float), A)
        return self._scale(idx) * ((P - Y).T @ A).ravel()

    def hvp(self, x, v, idx=None) -> np.ndarray:
        A, _ = self._rows(idx)
        _, _, P = self._probs(np.asarray(x, dtype=float), A)
        AV = A @ np.asarray(v, dtype=float).reshape(self.C - 1, self.p).T
        PAV = P * AV
        W = PAV - P * PAV.sum(axis=1, keepdims=True)
        return self._scale(idx) * (W.T @ A).ravel()

    def curvature_product(self, x, idx=None, gauss_newton: bool = False):
        A, _ = self._rows(idx)
        _, _, P = self._probs(np.asarray(x, dtype=float), A)
        scale = self._scale(idx)
        shape = (self.C - 1, self.p)

        def prod(v):
            PAV = P * (A @ np.asarray(v, dtype=float).reshape(shape).T)
            W = PAV - P * PAV.sum(axis=1, keepdims=True)
            return scale * (W.T @ A).ravel()
        return prod

    def gnvp(self, x, v, idx=None) -> np.ndarray:
        # cross-entropy on a linear model: the generalized Gauss-Newton matrix is the Hessian
        return self.hvp(x, v, idx)


def make_softmax(data: Dataset, n_classes: int) -> SoftmaxProblem:
    return SoftmaxProblem(data, n_classes)
