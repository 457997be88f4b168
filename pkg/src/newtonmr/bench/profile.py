"""Dolan-More performance profiles over per-run final metrics."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass

import numpy as np

PROFILE_METRICS = ("f", "grad_norm", "estimation_error")
_NAME = re.compile(r"^(?P<method>.+)__seed(?P<run>\d+)$")


@dataclass(frozen=True)
class ProfileTable:
    """Ratios to the per-run best and the resulting profile curves.

    ``values[i, j]`` is the (shifted) metric of method ``j`` on run ``i``;
    ``curves[l, j]`` is the fraction of runs whose ratio for method ``j`` is
    at most ``lambdas[l]``. Runs where every method failed are listed in
    ``excluded`` and do not count.
    """

    metric: str
    methods: tuple
    runs: tuple
    values: np.ndarray
    ratios: np.ndarray
    lambdas: np.ndarray
    curves: np.ndarray
    shift: float = 0.0
    excluded: tuple = ()

    def curve(self, method, lam: float) -> float:
        j = self.methods.index(method)
        if not len(self.runs):
            return 0.0
        return float(np.mean(self.ratios[:, j] <= lam))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lambda", *self.methods])
        for lam, row in zip(self.lambdas, self.curves):
            w.writerow([repr(float(lam)), *(repr(float(v)) for v in row)])
        return buf.getvalue()

    def ratios_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["run", *self.methods])
        for run, row in zip(self.runs, self.ratios):
            w.writerow([run, *(repr(float(v)) for v in row)])
        return buf.getvalue()


def final_metric(trace, metric: str) -> float:
    """Last-iterate value of ``metric`` in a trace (NaN if absent or blank)."""
    try:
        col = trace[metric]
    except KeyError:
        raise ValueError(f"trace {trace.name!r} has no column {metric!r}") from None
    return float(col[-1]) if len(col) else math.nan


def _table_from_traces(traces, metric):
    table = {}
    for tr in traces:
        m = _NAME.match(tr.name)
        if m is None:
            raise ValueError(f"trace name {tr.name!r} is not of the form <method>__seed<run>")
        table[(int(m["run"]), m["method"])] = final_metric(tr, metric)
    return table


def performance_profile(data, metric: str, lambdas=None) -> ProfileTable:
    """Performance profile of ``metric`` (smaller is better).

    Parameters
    ----------
    data:
        Either a mapping ``{(run, method): value}`` or an iterable of traces
        named ``<method>__seed<run>`` (their last-row ``metric`` is used).
    lambdas:
        Where to sample the curves; by default every distinct finite ratio
        together with 1.

    Notes
    -----
    Ratios need positive metrics. If any finite value is ``<= 0`` (``f``
    often is) all values are shifted by ``1 - min`` first and ``shift``
    records the amount. Missing or non-finite values count as failures
    (ratio ``inf``).
    """
    table = dict(data) if isinstance(data, dict) else _table_from_traces(data, metric)
    methods = tuple(sorted({m for _, m in table}))
    runs_all = tuple(sorted({r for r, _ in table}))
    if len(methods) < 2:
        raise ValueError("a performance profile needs at least two methods")
    raw = np.full((len(runs_all), len(methods)), math.nan)
    for (r, m), v in table.items():
        raw[runs_all.index(r), methods.index(m)] = math.nan if v is None else float(v)
    finite = np.isfinite(raw)
    if not finite.any():
        raise ValueError(f"no finite {metric!r} value for any run")

    keep = finite.any(axis=1)
    excluded = tuple((r, "all methods failed") for r, k in zip(runs_all, keep) if not k)
    runs = tuple(r for r, k in zip(runs_all, keep) if k)
    vals = raw[keep]
    low = float(np.min(vals[np.isfinite(vals)]))
    shift = 1.0 - low if low <= 0 else 0.0
    vals = vals + shift
    ratios = np.full(vals.shape, math.inf)
    for i, row in enumerate(vals):
        ok = np.isfinite(row)
        ratios[i, ok] = row[ok] / np.min(row[ok])

    if lambdas is None:
        lambdas = np.unique(np.concatenate([[1.0], ratios[np.isfinite(ratios)]]))
    lambdas = np.sort(np.asarray(lambdas, dtype=float))
    curves = np.array([[np.mean(ratios[:, j] <= lam) for j in range(len(methods))] for lam in lambdas])
    return ProfileTable(metric, methods, runs, vals, ratios, lambdas, curves.reshape(len(lambdas), len(methods)),
                        shift, excluded)
