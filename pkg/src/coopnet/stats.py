"""Rank correlation and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UndefinedMetricError


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="mergesort")
    sorted_x = x[order]
    # Start index of each run of equal values in sorted order.
    starts = np.flatnonzero(np.r_[True, sorted_x[1:] != sorted_x[:-1]])
    ends = np.r_[starts[1:], x.size]
    run_rank = (starts + ends + 1) / 2.0
    ranks = np.empty(x.size)
    ranks[order] = np.repeat(run_rank, ends - starts)
    return ranks


def spearman(x, y) -> float:
    """Spearman's rho as the Pearson correlation of average ranks.

    Without ties this equals ``1 - 6 * sum(d**2) / (n * (n**2 - 1))``, which
    is then used directly: the rank differences are integers, so the sum is
    exact and the result carries a single rounding.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigError("spearman needs two 1-d series of equal length")
    if x.size < 2:
        raise UndefinedMetricError("insufficient data (n < 2)")
    if np.unique(x).size == x.size and np.unique(y).size == y.size:
        return spearman_closed_form(x, y)
    rx = average_ranks(x) - (x.size + 1) / 2.0
    ry = average_ranks(y) - (y.size + 1) / 2.0
    sxx = rx @ rx
    syy = ry @ ry
    if sxx == 0 or syy == 0:
        raise UndefinedMetricError("correlation undefined for a constant series")
    rho = (rx @ ry) / np.sqrt(sxx * syy)
    return float(np.clip(rho, -1.0, 1.0))


def spearman_closed_form(x, y) -> float:
    """Textbook formula on plain ranks; only valid for tie-free data."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    d = average_ranks(x) - average_ranks(y)
    return 1.0 - 6.0 * float(d @ d) / (n * (n * n - 1))


def mse(predicted, actual) -> float:
    f = np.asarray(predicted, dtype=float)
    y = np.asarray(actual, dtype=float)
    if f.shape != y.shape:
        raise ConfigError(f"length mismatch: {f.size} predictions vs {y.size} targets")
    if f.size == 0:
        raise ConfigError("need at least one prediction")
    return float(np.mean((f - y) ** 2))


def rmse(predicted, actual) -> float:
    return float(np.sqrt(mse(predicted, actual)))


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @classmethod
    def from_labels(cls, predicted, actual) -> "ConfusionCounts":
        p = np.asarray(predicted).astype(bool)
        a = np.asarray(actual).astype(bool)
        if p.shape != a.shape:
            raise ConfigError("length mismatch between predictions and labels")
        return cls(
            tp=int(np.sum(p & a)),
            tn=int(np.sum(~p & ~a)),
            fp=int(np.sum(p & ~a)),
            fn=int(np.sum(~p & a)),
        )

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        raise UndefinedMetricError("precision undefined: no positive predictions")
    return c.tp / (c.tp + c.fp)


def prediction_accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise UndefinedMetricError("prediction accuracy undefined: no samples")
    return (c.tp + c.tn) / c.total


def binarize(values, strategy: str | float = "mean") -> np.ndarray:
    """Map scores to 0/1.

    ``"mean"`` marks values strictly above the mean; a float ``tau`` marks
    values strictly above ``tau``.
    """
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ConfigError("cannot binarize an empty vector")
    if isinstance(strategy, str):
        if strategy != "mean":
            raise ConfigError(f"unknown binarization {strategy!r}")
        tau = v.mean()
    else:
        tau = float(strategy)
    return (v > tau).astype(np.int64)


def parse_binarize(text: str) -> str | float:
    """Parse the CLI form ``mean`` or ``fixed=0.5``."""
    if text == "mean":
        return "mean"
    if text.startswith("fixed="):
        try:
            return float(text.split("=", 1)[1])
        except ValueError:
            pass
    raise ConfigError(f"invalid binarization {text!r}; use 'mean' or 'fixed=<tau>'")


def correlation_matrix(columns: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    """Pairwise Spearman matrix; undefined entries are NaN."""
    names = list(columns)
    k = len(names)
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(i, k):
            try:
                rho = spearman(columns[names[i]], columns[names[j]])
            except UndefinedMetricError:
                continue
            out[i, j] = out[j, i] = rho
    return names, out
