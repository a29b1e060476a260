"""Drift coefficients and SDE problems with additive unit noise.

The problems handled here have the form ``X_t = X_0 + W_t + int_0^t b(s, X_s) ds``
with ``b`` bounded and merely measurable. Two reductions bring other models
into that form: the Lamperti transform for scalar SDEs with a state-dependent
diffusion coefficient, and a linear change of variables for a constant
non-degenerate diffusion matrix.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError

__all__ = [
    "DriftSpec",
    "SdeProblem",
    "LampertiTransform",
    "evaluate_drift",
    "lamperti_drift",
    "lamperti_drift_spec",
    "reduce_constant_noise",
    "fat_cantor_drift",
]

_KINDS = ("two_valued", "bang_bang", "zero", "constant", "piecewise", "custom")


@dataclass(frozen=True, eq=False)
class DriftSpec:
    """A bounded drift ``b(t, x)`` together with its sup-norm bound.

    Build instances through the class methods rather than the constructor.
    Piecewise-constant kinds use the half-open convention: on a breakpoint
    the value of the interval to its right applies, so a two-valued drift
    takes ``alpha`` on ``x < 0`` and ``beta`` on ``x >= 0``.

    Calling the spec evaluates it on a batch: ``x`` has shape ``(n,)`` when
    ``dimension == 1`` and ``(n, d)`` otherwise; ``t`` is a scalar or an
    array broadcastable against the batch.
    """

    kind: str
    params: dict
    bound: float
    dimension: int = 1
    evaluator: Optional[Callable] = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown drift kind {self.kind!r}")
        if not (self.bound >= 0 and np.isfinite(self.bound)):
            raise DomainError("drift bound must be finite and nonnegative")
        if self.dimension < 1:
            raise DomainError("dimension must be positive")

    @classmethod
    def two_valued(cls, alpha, beta):
        alpha, beta = float(alpha), float(beta)
        return cls("two_valued", {"alpha": alpha, "beta": beta},
                   max(abs(alpha), abs(beta)))

    @classmethod
    def bang_bang(cls, theta):
        """``-theta * sgn(x)`` with ``sgn(0) = +1``."""
        theta = float(theta)
        if theta <= 0:
            raise DomainError("theta must be positive")
        return cls("bang_bang", {"theta": theta}, theta)

    @classmethod
    def zero(cls, dimension=1):
        return cls("zero", {}, 0.0, dimension)

    @classmethod
    def constant(cls, c):
        c = np.atleast_1d(np.asarray(c, dtype=float))
        return cls("constant", {"c": tuple(c.tolist())}, float(np.max(np.abs(c))), c.size)

    @classmethod
    def piecewise(cls, breakpoints, values):
        """Scalar drift equal to ``values[i]`` on ``[breakpoints[i-1], breakpoints[i])``."""
        breaks = np.asarray(breakpoints, dtype=float)
        vals = np.asarray(values, dtype=float)
        if vals.size != breaks.size + 1:
            raise DomainError("need exactly one more value than breakpoints")
        if breaks.size and np.any(np.diff(breaks) <= 0):
            raise DomainError("breakpoints must be strictly increasing")
        return cls("piecewise", {"breakpoints": tuple(breaks.tolist()),
                                 "values": tuple(vals.tolist())},
                   float(np.max(np.abs(vals))))

    @classmethod
    def custom(cls, evaluator, bound, dimension=1):
        """Wrap a vectorised ``evaluator(t, x)``; ``bound`` is checked on every call."""
        return cls("custom", {}, float(bound), int(dimension), evaluator)

    @property
    def time_homogeneous(self):
        return self.kind != "custom"

    def piecewise_table(self):
        """``(breakpoints, values)`` for scalar piecewise-constant drifts, else ``None``."""
        if self.dimension != 1:
            return None
        p = self.params
        if self.kind == "two_valued":
            return np.array([0.0]), np.array([p["alpha"], p["beta"]])
        if self.kind == "bang_bang":
            return np.array([0.0]), np.array([p["theta"], -p["theta"]])
        if self.kind == "zero":
            return np.empty(0), np.zeros(1)
        if self.kind == "constant":
            return np.empty(0), np.array(p["c"])
        if self.kind == "piecewise":
            return np.array(p["breakpoints"]), np.array(p["values"])
        return None

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("drift evaluated at a non-finite state")
        table = self.piecewise_table()
        if table is not None:
            breaks, vals = table
            return vals[np.searchsorted(breaks, x, side="right")]
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.broadcast_to(np.array(self.params["c"]), x.shape).copy()
        out = np.asarray(self.evaluator(t, x), dtype=float)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        if np.any(np.abs(out) > self.bound * (1 + 1e-12) + 1e-300):
            raise DomainError(f"custom drift exceeds its declared bound {self.bound}")
        return out

    def to_dict(self):
        if self.kind == "custom":
            raise DomainError("custom drifts cannot be serialised")
        if "fat_cantor" in self.params:
            return {"kind": "fat_cantor", **self.params["fat_cantor"]}
        return {"kind": self.kind, **{k: (list(v) if isinstance(v, tuple) else v)
                                      for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        kind = data.pop("kind")
        if kind == "two_valued":
            return cls.two_valued(data["alpha"], data["beta"])
        if kind == "bang_bang":
            return cls.bang_bang(data["theta"])
        if kind == "zero":
            return cls.zero(data.get("dimension", 1))
        if kind == "constant":
            return cls.constant(data["c"])
        if kind == "piecewise":
            return cls.piecewise(data["breakpoints"], data["values"])
        if kind == "fat_cantor":
            return fat_cantor_drift(**data)
        raise DomainError(f"cannot build drift of kind {kind!r} from a mapping")

    def __eq__(self, other):
        if not isinstance(other, DriftSpec):
            return NotImplemented
        return (self.kind == other.kind and self.params == other.params
                and self.bound == other.bound and self.dimension == other.dimension
                and self.evaluator is other.evaluator)

    __hash__ = None


def evaluate_drift(spec, t, x):
    """Value of ``b(t, x)`` at a single state.

    Parameters
    ----------
    spec : DriftSpec
    t : float
        Time, ``t >= 0``.
    x : float or array_like of shape (d,)

    Returns
    -------
    float or ndarray
        A float for scalar input, otherwise an array of shape ``(d,)``.
    """
    if t < 0:
        raise DomainError("time must be nonnegative")
    x_arr = np.asarray(x, dtype=float)
    if x_arr.ndim == 0:
        return float(spec(t, x_arr.reshape(1))[0])
    if spec.dimension == 1:
        return spec(t, x_arr.reshape(1)).reshape(1)
    return spec(t, x_arr.reshape(1, -1))[0]


@dataclass(frozen=True)
class SdeProblem:
    """``X_t = X_0 + W_t + int b ds`` on ``[0, horizon]``.

    ``x0`` is the deterministic start. ``initial_density`` optionally replaces
    the point mass by a tabulated law (used by the mild-equation solver).
    """

    drift: DriftSpec
    x0: object
    horizon: float
    initial_density: object = None

    def __post_init__(self):
        if not self.horizon > 0:
            raise DomainError("horizon must be positive")
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.size != self.drift.dimension:
            raise DomainError(
                f"x0 has dimension {x0.size}, drift has dimension {self.drift.dimension}")
        if not np.all(np.isfinite(x0)):
            raise DomainError("x0 must be finite")

    @property
    def x0_array(self):
        return np.atleast_1d(np.asarray(self.x0, dtype=float))


# Gauss-Legendre rule used for every panel integral of 1/sigma.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


class LampertiTransform:
    """Tabulated ``psi(y) = int_z^y dw / sigma(w)`` and its inverse.

    ``psi`` is tabulated on ``[lower, upper]``, a compact subinterval of the
    open domain of ``sigma``. The mesh is geometrically refined towards both
    ends, and every panel is integrated with a 10-point Gauss-Legendre rule,
    so ``psi`` between nodes is exact to rounding for smooth ``sigma``.
    The inverse starts from a monotone cubic (PCHIP) guess and is polished
    by Newton's method on ``psi(y) = x``.

    Parameters
    ----------
    sigma : callable
        Vectorised positive diffusion coefficient.
    anchor : float
        The point ``z`` where ``psi`` vanishes.
    lower, upper : float
        Tabulation range; must contain ``anchor``.
    sigma_prime : callable, optional
        Derivative of ``sigma``. Central differences with step
        ``1e-6 * (1 + |y|)`` are used when omitted.
    n_nodes : int
        Number of uniformly spaced nodes before end refinement.
    """

    def __init__(self, sigma, anchor, lower, upper, sigma_prime=None, n_nodes=2049):
        if not lower < anchor < upper:
            raise DomainError("anchor must lie strictly inside [lower, upper]")
        self.sigma = sigma
        self.anchor = float(anchor)
        self.lower = float(lower)
        self.upper = float(upper)
        self._sigma_prime = sigma_prime

        width = upper - lower
        geo = width * np.geomspace(1e-8, 0.05, 60)
        nodes = np.concatenate([np.linspace(lower, upper, n_nodes),
                                lower + geo, upper - geo, [anchor]])
        nodes = np.unique(nodes)
        if np.any(np.asarray(sigma(nodes)) <= 0):
            raise DomainError("sigma must be positive on the tabulation range")
        panels = self._panel_integrals(nodes[:-1], nodes[1:])
        cum = np.concatenate([[0.0], np.cumsum(panels)])
        k = np.searchsorted(nodes, self.anchor)
        self._nodes = nodes
        self._values = cum - cum[k]
        if np.any(np.diff(self._values) <= 0):
            raise DomainError("psi is not strictly increasing on the tabulation range")
        self._inverse_guess = PchipInterpolator(self._values, nodes)

    def _panel_integrals(self, a, b):
        half = 0.5 * (b - a)
        mid = 0.5 * (b + a)
        pts = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        return half * (np.asarray(1.0 / self.sigma(pts)) @ _GL_WEIGHTS)

    @property
    def psi_range(self):
        return float(self._values[0]), float(self._values[-1])

    def psi(self, y):
        y = np.asarray(y, dtype=float)
        if np.any((y < self.lower) | (y > self.upper)):
            raise DomainError("y outside the tabulated range of psi")
        k = np.clip(np.searchsorted(self._nodes, y, side="right") - 1, 0,
                    self._nodes.size - 2)
        base = self._nodes[k]
        out = self._values[k] + self._panel_integrals(np.ravel(base), np.ravel(y)).reshape(y.shape)
        return out if out.ndim else float(out)

    def psi_inverse(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.psi_range
        if np.any((x < lo) | (x > hi)):
            raise DomainError(f"x outside the tabulated range [{lo}, {hi}] of psi")
        y = np.clip(self._inverse_guess(x), self.lower, self.upper)
        for _ in range(50):
            dy = (self.psi(y) - x) * self.sigma(y)
            y_new = np.clip(y - dy, self.lower, self.upper)
            done = np.all(np.abs(y_new - y) <= 1e-15 * (1 + np.abs(y)))
            y = y_new
            if done:
                break
        return y if np.ndim(y) else float(y)

    def sigma_prime(self, y):
        if self._sigma_prime is not None:
            return self._sigma_prime(y)
        y = np.asarray(y, dtype=float)
        step = 1e-6 * (1 + np.abs(y))
        return (self.sigma(y + step) - self.sigma(y - step)) / (2 * step)


def lamperti_drift(lt, beta_orig, t, x):
    """Drift ``(beta/sigma - sigma'/2)`` at ``psi^{-1}(x)`` of the transformed SDE."""
    y = lt.psi_inverse(x)
    return beta_orig(t, y) / lt.sigma(y) - 0.5 * lt.sigma_prime(y)


def lamperti_drift_spec(lt, beta_orig, bound):
    """Wrap :func:`lamperti_drift` as a custom :class:`DriftSpec`.

    States leaving the tabulated range of ``psi`` raise a
    :class:`~tv_euler.errors.DomainError`; choose ``lower``/``upper`` wide
    enough for the horizon simulated.
    """
    return DriftSpec.custom(lambda t, x: lamperti_drift(lt, beta_orig, t, x), bound)


def reduce_constant_noise(sigma_matrix, drift, y0, horizon):
    """Rewrite ``dY = sigma dW + b~(t, Y) dt`` with unit noise via ``X = sigma^{-1} Y``.

    Parameters
    ----------
    sigma_matrix : array_like, shape (d, d)
    drift : DriftSpec
        The drift ``b~`` of the original problem.
    y0 : array_like, shape (d,)
    horizon : float

    Returns
    -------
    SdeProblem
        Drift ``b(t, x) = sigma^{-1} b~(t, sigma x)`` started at ``sigma^{-1} y0``.
    """
    sigma = np.atleast_2d(np.asarray(sigma_matrix, dtype=float))
    d = sigma.shape[0]
    if sigma.shape != (d, d) or d != drift.dimension:
        raise DomainError("sigma must be square with the drift's dimension")
    cond = np.linalg.cond(sigma)
    if not np.isfinite(cond) or cond >= 1e12:
        raise DomainError(f"sigma is singular or ill-conditioned (cond={cond:.3g})")
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if np.array_equal(sigma, np.eye(d)):
        return SdeProblem(drift, y0 if d > 1 else float(y0[0]), horizon)
    inv = np.linalg.inv(sigma)
    x0 = inv @ y0
    bound = float(np.max(np.sum(np.abs(inv), axis=1)) * drift.bound)

    if d == 1:
        s, si = float(sigma[0, 0]), float(inv[0, 0])

        def reduced(t, x):
            return si * drift(t, s * x)

        return SdeProblem(DriftSpec.custom(reduced, bound, 1), float(x0[0]), horizon)

    def reduced(t, x):
        return drift(t, x @ sigma.T) @ inv.T

    return SdeProblem(DriftSpec.custom(reduced, bound, d), x0, horizon)


def fat_cantor_drift(depth=6, left=0.0, right=1.0, height=1.0):
    """Indicator (times ``height``) of a Smith-Volterra-Cantor set, truncated at ``depth``.

    Stage ``n`` removes an open middle interval of relative length ``4^-n``
    from each of the ``2^(n-1)`` remaining intervals of ``[left, right]``.
    """
    if depth < 0:
        raise DomainError("depth must be nonnegative")
    width = right - left
    intervals = [(left, right)]
    for n in range(1, depth + 1):
        gap = width / 4.0 ** n
        nxt = []
        for a, b in intervals:
            m = 0.5 * (a + b)
            nxt += [(a, m - gap / 2), (m + gap / 2, b)]
        intervals = nxt
    breaks, values = [], [0.0]
    for a, b in intervals:
        breaks += [a, b]
        values += [float(height), 0.0]
    spec = DriftSpec.piecewise(breaks, values)
    origin = {"depth": int(depth), "left": float(left), "right": float(right),
              "height": float(height)}
    object.__setattr__(spec, "params", {**spec.params, "fat_cantor": origin})
    return spec
