"""Datasets: synthetic generators, CSV ingestion and the GMM ground truth."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataParseError(ValueError):
    """CSV content that cannot be turned into a :class:`Dataset`."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("features must be an n x p array with n >= 1")
        object.__setattr__(self, "features", X)
        if self.labels is not None:
            y = np.asarray(self.labels)
            if y.shape != (X.shape[0],):
                raise ValueError("labels must have one entry per row")
            if not np.issubdtype(y.dtype, np.integer):
                raise ValueError("labels must be integers")
            if y.min() < 0:
                raise ValueError("labels must be non-negative")
            object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def p(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.labels is None else int(self.labels.max()) + 1


@dataclass(frozen=True)
class GmmGroundTruth:
    w_star: float
    u_star: np.ndarray
    v_star: np.ndarray
    sigma1: np.ndarray
    sigma2: np.ndarray

    @property
    def x_star(self) -> np.ndarray:
        return np.concatenate([[self.w_star], self.u_star, self.v_star])


def _sigmoid(t):
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def _covariance(Q, D):
    S = Q.T @ np.diag(1.0 / D) @ Q
    return 0.5 * (S + S.T)


def gen_gmm_data(p: int, n: int, cond_number: float, seed: int):
    """Sample ``n`` points from a random two-component Gaussian mixture.

    ``D`` has diagonal ``linspace(1, cond_number, p)`` so each
    ``Sigma_i = Q_i^T D^{-1} Q_i`` has condition number ``cond_number``; ``Q_1``
    comes from the QR factorization of a Gaussian matrix and ``Q_2`` from that
    of a uniform one.

    Returns
    -------
    (Dataset, GmmGroundTruth)
    """
    if p < 1 or n < 2:
        raise ValueError("need p >= 1 and n >= 2")
    if cond_number < 1:
        raise ValueError("cond_number must be >= 1")
    rng = np.random.default_rng(seed)
    w_star = float(rng.standard_normal())
    u_star = rng.uniform(-1.0, 1.0, p)
    v_star = rng.uniform(3.0, 4.0, p)
    Q1, _ = np.linalg.qr(rng.standard_normal((p, p)))
    Q2, _ = np.linalg.qr(rng.uniform(size=(p, p)))
    D = np.linspace(1.0, cond_number, p) if p > 1 else np.ones(1)
    S1, S2 = _covariance(Q1, D), _covariance(Q2, D)
    L1 = np.linalg.cholesky(S1)
    L2 = np.linalg.cholesky(S2)
    first = rng.uniform(size=n) < _sigmoid(w_star)
    xi = rng.standard_normal((n, p))
    A = np.where(first[:, None], u_star + xi @ L1.T, v_star + xi @ L2.T)
    return Dataset(A), GmmGroundTruth(w_star, u_star, v_star, S1, S2)


def gen_softmax_data(n: int, p: int, n_classes: int, seed: int, scale: float = 1.0) -> Dataset:
    """Gaussian features with labels drawn from a random softmax model.

    Labels are sampled rather than assigned by arg-max, so the classes
    overlap and the unregularized loss has a finite minimizer once ``n`` is
    large compared to ``(C - 1) p``.
    """
    if n < 1 or p < 1 or n_classes < 2:
        raise ValueError("need n >= 1, p >= 1 and at least two classes")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, p))
    W = scale * rng.standard_normal((n_classes, p)) / np.sqrt(p)
    Z = A @ W.T
    P = np.exp(Z - Z.max(axis=1, keepdims=True))
    P /= P.sum(axis=1, keepdims=True)
    cum = np.cumsum(P, axis=1)
    u = rng.uniform(size=(n, 1))
    labels = np.minimum((u > cum).sum(axis=1), n_classes - 1)
    return Dataset(A, labels)


def estimation_error(x, truth: GmmGroundTruth) -> float:
    """``(|w - w*| / |w*| + ||[u; v] - [u*; v*]|| / ||[u*; v*]||) / 2``."""
    x = np.asarray(x, dtype=float)
    p = truth.u_star.shape[0]
    if x.shape != (2 * p + 1,):
        raise ValueError(f"expected a vector of length {2 * p + 1}")
    if truth.w_star == 0.0:
        raise ValueError("w_star is zero; relative error undefined")
    means = np.concatenate([truth.u_star, truth.v_star])
    werr = abs(x[0] - truth.w_star) / abs(truth.w_star)
    merr = np.linalg.norm(x[1:] - means) / np.linalg.norm(means)
    return float(0.5 * (werr + merr))


def load_csv(path, has_labels: bool = False, header: bool = False, scale: bool = False) -> Dataset:
    """Read a numeric CSV, labels optionally in the last column.

    With ``scale=True`` each feature column is mapped affinely onto ``[0, 1]``
    (constant columns become 0).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    start = 1 if header else 0
    body = [(i, r) for i, r in enumerate(rows[start:], start=start + 1) if r and any(c.strip() for c in r)]
    if not body:
        raise DataParseError(f"{path}: no data rows")
    width = len(body[0][1])
    min_width = 2 if has_labels else 1
    if width < min_width:
        raise DataParseError(f"{path}: row {body[0][0]} has {width} columns, need at least {min_width}")
    values = np.empty((len(body), width))
    for k, (lineno, r) in enumerate(body):
        if len(r) != width:
            raise DataParseError(f"{path}: row {lineno} has {len(r)} columns, expected {width}")
        for j, cell in enumerate(r):
            try:
                values[k, j] = float(cell)
            except ValueError:
                raise DataParseError(f"{path}: row {lineno}, column {j + 1}: non-numeric cell {cell!r}") from None
            if not np.isfinite(values[k, j]):
                raise DataParseError(f"{path}: row {lineno}, column {j + 1}: non-finite value")
    labels = None
    if has_labels:
        raw = values[:, -1]
        bad = np.nonzero((raw != np.round(raw)) | (raw < 0))[0]
        if bad.size:
            raise DataParseError(f"{path}: row {body[bad[0]][0]}, column {width}: label must be a non-negative integer")
        labels = raw.astype(np.int64)
        values = values[:, :-1]
    if scale:
        lo, hi = values.min(axis=0), values.max(axis=0)
        span = np.where(hi > lo, hi - lo, 1.0)
        values = (values - lo) / span
    return Dataset(values, labels)
