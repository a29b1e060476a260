"""Closed-form reference densities.

The main one is the transition density of Brownian motion with the
two-valued drift ``-theta * sgn(x)``, for which an explicit formula exists.
Terms are combined in log space so that large ``theta * |x|`` does not
overflow before the Gaussian factor brings the product back down.
"""

from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ConvergenceError, DomainError
from .grid import DensityGrid

__all__ = [
    "ClosedFormDensity",
    "bang_bang_density",
    "verify_chapman_kolmogorov",
    "density_to_grid",
    "bang_bang_gaussian_start",
]

_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def _log_tail(a):
    # log P(Z > a)
    return special.log_ndtr(-a)


def bang_bang_density(theta, t, x, z):
    """Transition density ``p_t(x, z)`` of ``dX = dW - theta sgn(X) dt``.

    Parameters
    ----------
    theta : float
        Drift magnitude, ``theta >= 0`` (zero gives the heat kernel).
    t : float
        Elapsed time, ``t > 0``.
    x, z : float or array_like
        Start and end points; broadcast against each other.

    Returns
    -------
    float or ndarray
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if theta < 0:
        raise DomainError("theta must be nonnegative")
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    flip = x < 0
    x = np.where(flip, -x, x)
    z = np.where(flip, -z, z)
    st = np.sqrt(t)
    tt = theta * t
    log_norm = -_LOG_SQRT_2PI - 0.5 * np.log(t)
    with np.errstate(divide="ignore"):
        log_theta = np.log(theta)
    pos = z > 0
    g_log = np.where(pos,
                     -(x - z - tt) ** 2 / (2 * t),
                     2 * theta * x - (x - z + tt) ** 2 / (2 * t)) + log_norm
    tail_log = log_theta + np.where(pos,
                                    -2 * theta * z + _log_tail((x + z - tt) / st),
                                    2 * theta * z + _log_tail((x - z - tt) / st))
    out = np.exp(g_log) + np.exp(tail_log)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ClosedFormDensity:
    """A density with an explicit formula.

    Kinds and their parameters:

    ``bang_bang``: ``theta``, ``t``, ``x`` -- law at time ``t`` of the
    two-valued drift process started at ``x``.
    ``gaussian``: ``mean``, ``variance``.
    ``laplace``: ``theta`` -- density ``theta exp(-2 theta |z|)``, the
    long-time limit of ``bang_bang``.
    """

    kind: str
    params: dict

    @classmethod
    def bang_bang(cls, theta, t, x=0.0):
        if not theta > 0:
            raise DomainError("theta must be positive")
        if not t > 0:
            raise DomainError("t must be positive")
        return cls("bang_bang", {"theta": float(theta), "t": float(t), "x": float(x)})

    @classmethod
    def gaussian(cls, mean, variance):
        if not variance > 0:
            raise DomainError("variance must be positive")
        return cls("gaussian", {"mean": float(mean), "variance": float(variance)})

    @classmethod
    def laplace(cls, theta):
        if not theta > 0:
            raise DomainError("theta must be positive")
        return cls("laplace", {"theta": float(theta)})

    def pdf(self, z):
        p = self.params
        z = np.asarray(z, dtype=float)
        if self.kind == "bang_bang":
            return bang_bang_density(p["theta"], p["t"], p["x"], z)
        if self.kind == "gaussian":
            v = p["variance"]
            out = np.exp(-(z - p["mean"]) ** 2 / (2 * v)) / np.sqrt(2 * np.pi * v)
        else:
            out = p["theta"] * np.exp(-2 * p["theta"] * np.abs(z))
        return out if out.ndim else float(out)

    __call__ = pdf

    @property
    def kinks(self):
        """Points where the first derivative jumps."""
        return (0.0,) if self.kind in ("bang_bang", "laplace") else ()

    def second_derivative(self, z):
        """Analytic second derivative where available, else ``None``."""
        if self.kind != "gaussian":
            return None
        m, v = self.params["mean"], self.params["variance"]
        z = np.asarray(z, dtype=float)
        return self.pdf(z) * ((z - m) ** 2 / v - 1) / v

    def default_extent(self):
        """Interval carrying all but a negligible fraction of the mass."""
        p = self.params
        if self.kind == "bang_bang":
            half = p["theta"] * p["t"] + 12 * np.sqrt(p["t"])
            return p["x"] - half, p["x"] + half
        if self.kind == "gaussian":
            s = np.sqrt(p["variance"])
            return p["mean"] - 12 * s, p["mean"] + 12 * s
        half = 40.0 / (2 * p["theta"])
        return -half, half

    def tail_mass(self, a, b):
        """Probability of the complement of ``[a, b]``."""
        p = self.params
        if self.kind == "gaussian":
            s = np.sqrt(p["variance"])
            return float(special.ndtr((a - p["mean"]) / s) + special.ndtr((p["mean"] - b) / s))
        if self.kind == "laplace":
            th = p["theta"]

            def lower(c):
                # P(Z < c)
                return 0.5 * np.exp(2 * th * c) if c < 0 else 1 - 0.5 * np.exp(-2 * th * c)
            return float(lower(a) + 1 - lower(b))
        lo, hi = self.default_extent()
        left = integrate.quad(self.pdf, min(a, lo) - 1, a, limit=200)[0] if a > lo - 1 else 0.0
        right = integrate.quad(self.pdf, b, max(b, hi) + 1, limit=200)[0] if b < hi + 1 else 0.0
        return float(left + right)

    def total_mass(self, tol=1e-12):
        """Adaptive quadrature of the density over its default extent."""
        lo, hi = self.default_extent()
        pts = [k for k in self.kinks if lo < k < hi]
        if self.kind == "gaussian":
            pts.append(self.params["mean"])
        edges = [lo, *sorted(pts), hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(self.pdf, a, b, epsabs=tol, epsrel=tol, limit=400)[0]
        return total


def verify_chapman_kolmogorov(theta, s, t, x, z, tol=1e-11):
    """Residual ``|int p_s(x, y) p_t(y, z) dy - p_{s+t}(x, z)|``.

    The integral is split at the drift discontinuity and at the two end
    points so each piece is smooth for the adaptive rule.
    """
    if not (s > 0 and t > 0):
        raise DomainError("s and t must be positive")

    def integrand(y):
        return bang_bang_density(theta, s, x, y) * bang_bang_density(theta, t, y, z)

    reach = theta * (s + t) + 14 * np.sqrt(s + t) + abs(x) + abs(z)
    cuts = sorted({-reach, 0.0, float(x), float(z), reach})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, err, info, *rest = integrate.quad(integrand, a, b, epsabs=tol, epsrel=tol,
                                               limit=500, full_output=1)
        if rest and err > 100 * tol:
            raise ConvergenceError(f"quadrature did not converge on [{a}, {b}]: {rest[0]}",
                                   residual=err)
        total += val
    return abs(total - bang_bang_density(theta, s + t, x, z))


def density_to_grid(cf, x_min=None, x_max=None, n_points=2 ** 14, time_stamp=None,
                    coverage=1e-6):
    """Tabulate a closed-form density on a uniform grid.

    Raises
    ------
    DomainError
        If ``[x_min, x_max]`` misses more than ``coverage`` of the mass, or the
        tabulated trapezoid mass is not within ``coverage`` of one.
    """
    lo, hi = cf.default_extent()
    x_min = lo if x_min is None else float(x_min)
    x_max = hi if x_max is None else float(x_max)
    missing = cf.tail_mass(x_min, x_max)
    if missing > coverage:
        raise DomainError(
            f"[{x_min}, {x_max}] misses mass {missing:.3g}; "
            f"the grid must extend to at least [{lo:.6g}, {hi:.6g}]")
    if time_stamp is None:
        time_stamp = cf.params.get("t", 0.0)
    grid = DensityGrid(x_min, x_max, np.zeros(n_points), time_stamp)
    grid = grid.with_values(cf.pdf(grid.points))
    if abs(grid.mass() - 1) > coverage:
        raise DomainError(f"trapezoid mass {grid.mass()!r} is off by more than {coverage}; "
                          "use more points")
    return grid


def bang_bang_gaussian_start(theta, t, mean, std, z, n_nodes=48):
    """Law at time ``t`` of the bang-bang process started from ``N(mean, std^2)``.

    Composite Gauss-Legendre over ``mean +- 10 std``, split at the drift
    discontinuity where the integrand in the start point has a kink.
    """
    z = np.asarray(z, dtype=float)
    a, b = mean - 10 * std, mean + 10 * std
    edges = [a, b] if not a < 0 < b else [a, 0.0, b]
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    out = np.zeros_like(z)
    for lo, hi in zip(edges[:-1], edges[1:]):
        for sub in np.linspace(lo, hi, 5)[:-1]:
            w = (hi - lo) / 4
            y = sub + 0.5 * w * (nodes + 1)
            wy = 0.5 * w * weights * np.exp(-(y - mean) ** 2 / (2 * std ** 2)) / (
                np.sqrt(2 * np.pi) * std)
            out = out + bang_bang_density(theta, t, y[:, None], z[None, :]).T @ wy
    return out
