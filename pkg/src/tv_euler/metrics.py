"""Trapezoid L1 distances between densities and Monte Carlo aggregation."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "trapezoid_l1",
    "trapezoid_l1_vs_exact",
    "trapezoid_l1_self",
    "TvEstimate",
    "aggregate_runs",
]


def _abscissae(sample):
    values = getattr(sample, "values", sample)
    x = np.sort(np.asarray(values, dtype=float).ravel())
    if x.size < 2:
        raise DomainError("need at least two abscissae")
    if not x[-1] > x[0]:
        raise DomainError("abscissae have zero total width")
    return x


def trapezoid_l1(abscissae, f, g):
    """Trapezoid rule for ``int |f - g|`` on the sorted ``abscissae``.

    ``f`` and ``g`` are callables taking an array of points. Duplicate
    abscissae give zero-width panels.
    """
    x = _abscissae(abscissae)
    d = np.abs(np.asarray(f(x), dtype=float) - np.asarray(g(x), dtype=float))
    return float(0.5 * np.sum(np.diff(x) * (d[1:] + d[:-1])))


def trapezoid_l1_vs_exact(sample, kde, exact):
    """L1 distance between a KDE and the exact density.

    The abscissae are the order statistics of ``sample``; mass beyond the
    sample range is not counted.
    """
    return trapezoid_l1(sample, kde.evaluate_many, exact)


def trapezoid_l1_self(sample_h, kde_h, kde_half):
    """L1 distance between the KDEs at ``h`` and ``h/2``, on the ``h``-sample order statistics."""
    return trapezoid_l1(sample_h, kde_h.evaluate_many, kde_half.evaluate_many)


@dataclass(frozen=True)
class TvEstimate:
    """Mean of per-run error estimates with its 95% half-width.

    ``precision = 1.96 sqrt(variance / R)`` with the unbiased variance.
    """

    estimate: float
    run_values: tuple
    precision: float
    variance: float

    @property
    def n_runs(self):
        return len(self.run_values)


def aggregate_runs(per_run):
    """Summarise per-run estimates, summing in run order."""
    v = np.asarray(per_run, dtype=float).ravel()
    if v.size < 2:
        raise DomainError("at least two runs are needed for a variance")
    if not np.all(np.isfinite(v)):
        raise DomainError("non-finite run value")
    mean = float(np.sum(v) / v.size)
    var = float(np.sum((v - mean) ** 2) / (v.size - 1))
    return TvEstimate(mean, tuple(float(a) for a in v), 1.96 * np.sqrt(var / v.size), var)
