"""Convergence-order fits, theoretical error ratios and two auxiliary inequalities."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, VerificationError

__all__ = [
    "RateFit",
    "fit_order",
    "theoretical_ratio",
    "log_rate",
    "rate_profile",
    "verify_sum_bound",
    "sum_bound_slacks",
    "discrete_gronwall",
    "random_gronwall_instance",
]


@dataclass(frozen=True)
class RateFit:
    """Least-squares line through ``(ln h, ln error)``."""

    log_h: np.ndarray
    log_error: np.ndarray
    slope: float
    intercept: float
    r_squared: float

    def to_dict(self):
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "points": [[float(np.exp(a)), float(np.exp(b))]
                       for a, b in zip(self.log_h, self.log_error)],
        }


def fit_order(points):
    """Empirical order: OLS slope of ``ln error`` against ``ln h``.

    Parameters
    ----------
    points : array_like, shape (n, 2)
        Pairs ``(h, error)`` with ``n >= 3`` and all entries positive.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 3:
        raise DomainError("need at least three (h, error) pairs")
    if not (np.all(np.isfinite(p)) and np.all(p > 0)):
        raise DomainError("h and error must be positive and finite")
    x, y = np.log(p[:, 0]), np.log(p[:, 1])
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise DomainError("all h values are equal")
    slope = float(xc @ (y - y.mean()) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    yc = y - y.mean()
    syy = float(yc @ yc)
    r2 = 1.0 - float(resid @ resid) / syy if syy > 0 else 1.0
    return RateFit(x, y, slope, intercept, r2)


def log_rate(T, h):
    """``(1 + ln(T/h)) h``, the error rate for drifts with bounded variation in time."""
    return (1 + np.log(T / np.asarray(h, dtype=float))) * h


def theoretical_ratio(T, h):
    """Predicted ``error(h) / error(h/2)``: ``2 (1 + ln(T/h)) / (1 + ln(2T/h))``."""
    if not (T > 0 and h > 0):
        raise DomainError("T and h must be positive")
    if h > T * (1 + 1e-12):
        raise DomainError("h must not exceed T")
    return 2 * (1 + np.log(T / h)) / (1 + np.log(2 * T / h))


def rate_profile(T, h, errors, rate="log"):
    """Errors divided by the predicted rate.

    ``rate`` is ``"log"`` for ``(1 + ln(T/h)) h`` or ``"sqrt"`` for ``sqrt(h)``.
    A bounded, roughly flat profile is consistent with the predicted order.
    """
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    if rate == "log":
        return e / log_rate(T, h)
    if rate == "sqrt":
        return e / np.sqrt(h)
    raise DomainError(f"unknown rate {rate!r}")


def sum_bound_slacks(n_max):
    """``pi - 2/n - sum_{k=1}^{n-1} 1/sqrt(k (n-k))`` for ``n = 2 .. n_max``."""
    n_max = int(n_max)
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    if n_max > 10 ** 6:
        raise DomainError("n_max above 1e6 is not supported")
    out = np.empty(n_max - 1)
    for n in range(2, n_max + 1):
        k = np.arange(1, n, dtype=float)
        # numpy sums pairwise, keeping the rounding error at O(log n) ulps
        s = np.sum(1.0 / np.sqrt(k * (n - k)))
        out[n - 2] = np.pi - 2.0 / n - s
    return out


def verify_sum_bound(n_max):
    """Check ``sum_{k=1}^{n-1} 1/sqrt(k (n-k)) <= pi - 2/n`` for all ``2 <= n <= n_max``.

    Returns
    -------
    float
        The smallest slack.

    Raises
    ------
    VerificationError
        At the first ``n`` violating the bound.
    """
    slack = sum_bound_slacks(n_max)
    bad = np.flatnonzero(slack < 0)
    if bad.size:
        n = int(bad[0]) + 2
        raise VerificationError(f"sum bound fails at n={n} (slack {slack[bad[0]]:.3g})", n)
    return float(slack.min())


def discrete_gronwall(y, f, g, rtol=1e-12):
    """Discrete Gronwall bound.

    If ``y_n <= f_n + sum_{i<n} g_i y_i`` for all ``n`` then
    ``y_n <= b_n = f_n + sum_{i<n} f_i g_i exp(sum_{j=i+1}^{n-1} g_j)``.

    Parameters
    ----------
    y, f, g : array_like
        Nonnegative sequences of equal length.
    rtol : float
        Relative slack allowed in both comparisons, for rounding.

    Returns
    -------
    ndarray
        The bound sequence ``b``.

    Raises
    ------
    VerificationError
        If the hypothesis fails (``index`` gives the position) or, which
        would contradict the lemma, the conclusion does.
    """
    y, f, g = (np.asarray(a, dtype=float).ravel() for a in (y, f, g))
    if not (y.size == f.size == g.size):
        raise DomainError("sequences must have equal length")
    if np.any(y < 0) or np.any(f < 0) or np.any(g < 0):
        raise DomainError("sequences must be nonnegative")
    gy = np.concatenate(([0.0], np.cumsum(g * y)))
    rhs = f + gy[:-1]
    bad = np.flatnonzero(y > rhs * (1 + rtol))
    if bad.size:
        i = int(bad[0])
        raise VerificationError(f"hypothesis fails at index {i}: {y[i]!r} > {rhs[i]!r}", i)
    n = y.size
    b = f.copy()
    for m in range(1, n):
        # exponent sum_{j=i+1}^{m-1} g_j for i < m
        tail = np.concatenate((np.cumsum(g[1:m][::-1])[::-1], [0.0]))
        b[m] += np.sum(f[:m] * g[:m] * np.exp(tail))
    bad = np.flatnonzero(y > b * (1 + rtol))
    if bad.size:
        i = int(bad[0])
        raise VerificationError(f"bound fails at index {i}: {y[i]!r} > {b[i]!r}", i)
    return b


def random_gronwall_instance(rng, n, scale=1.0):
    """Random ``(y, f, g)`` of length ``n`` satisfying the Gronwall hypothesis.

    ``f`` and ``g`` are drawn uniformly, then ``y_k`` is a random fraction of
    the largest value the hypothesis allows given ``y_0 .. y_{k-1}``.
    """
    f = rng.uniform(0, scale, n)
    g = rng.uniform(0, scale / max(n, 1) * 4, n)
    y = np.empty(n)
    acc = 0.0
    for k in range(n):
        y[k] = rng.uniform(0, 1) * (f[k] + acc)
        acc += g[k] * y[k]
    return y, f, g
