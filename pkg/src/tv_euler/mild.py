"""Heat-kernel utilities and a Picard solver for the mild Fokker-Planck equation.

In dimension one the law of ``dX = dW + b(t, X) dt`` has a density solving

    p(t) = G_t * m - int_0^t dG_{t-s}/dx * (b(s) p(s)) ds

where ``G_t`` is the centred Gaussian density of variance ``t`` and ``m`` the
initial law. The solver discretises the time integral with the drift term
frozen at the left end of each step and integrates the kernel exactly over
every (time step, grid cell) pair, using the closed form of
``int_0^b G_tau(y) dtau``. This removes the ``(t - s)^{-1/2}`` singularity
without any special treatment of the last step. Spatial convolutions are
cyclic FFTs on a grid padded to twice its length; the causal time sum is an
FFT convolution along the time axis.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import integrate, special, stats

from .errors import ConvergenceError, DomainError
from .exact import ClosedFormDensity
from .grid import DensityGrid, trapezoid_mass

__all__ = [
    "HEAT_KERNEL_ORDERS",
    "heat_kernel_l1_norms",
    "gaussian_convolve",
    "PicardConfig",
    "PicardResult",
    "picard_solve",
    "picard_run",
    "contraction_diagnostics",
    "mollifier_width",
]

HEAT_KERNEL_ORDERS = ("dt", "dx", "dxx_diag", "dxx_off", "dxxx_off", "dxxx_diag")
_SQ2PI = np.sqrt(2 / np.pi)
_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


def _phi(z):
    return np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi)


def _line(f):
    # integral over the real line of an even-or-odd-magnitude integrand, split at 0
    return integrate.quad(f, -np.inf, 0, **_QUAD)[0] + integrate.quad(f, 0, np.inf, **_QUAD)[0]


def _plane(f):
    total = 0.0
    for xa, xb in ((-np.inf, 0), (0, np.inf)):
        for ya, yb in ((-np.inf, 0), (0, np.inf)):
            total += integrate.dblquad(lambda y, x: f(x, y), xa, xb, ya, yb,
                                       epsabs=1e-12, epsrel=1e-11)[0]
    return total


def heat_kernel_l1_norms(t, order, dimension=None):
    """L1 norms of derivatives of the heat kernel, in closed form and by quadrature.

    Parameters
    ----------
    t : float
        Time, ``t > 0``.
    order : str
        One of ``"dt"`` (time derivative), ``"dx"`` (first spatial
        derivative), ``"dxx_diag"`` / ``"dxx_off"`` (second derivative in one
        or two distinct coordinates) and ``"dxxx_off"`` / ``"dxxx_diag"``
        (``d^3 / dx_j dx_i^2`` with ``j != i`` or ``j == i``).
    dimension : int, optional
        Space dimension ``d``. Defaults to 2 for the mixed derivatives and 1
        otherwise; only ``"dt"`` depends on it.

    Returns
    -------
    closed_form : float
        The identity value for ``dx`` and ``dxx_off``, otherwise the upper
        bound (``d/t``, ``2/t``, ``2 sqrt(2/pi) / t^{3/2}``,
        ``5 sqrt(2/pi) / t^{3/2}``).
    quadrature : float
        Adaptive quadrature of the norm itself; mixed derivatives are
        integrated over the plane.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    if order not in HEAT_KERNEL_ORDERS:
        raise DomainError(f"unknown order {order!r}; expected one of {HEAT_KERNEL_ORDERS}")
    mixed = order in ("dxx_off", "dxxx_off")
    d = (2 if mixed else 1) if dimension is None else int(dimension)
    if d < 1 or (mixed and d < 2):
        raise DomainError("mixed derivatives need dimension >= 2")
    s = np.sqrt(t)

    def g(x):
        return _phi(x / s) / s

    if order == "dx":
        return float(np.sqrt(2 / (np.pi * t))), _line(lambda x: abs(x) / t * g(x))
    if order == "dxx_diag":
        return 2 / t, _line(lambda x: abs(x * x / t - 1) / t * g(x))
    if order == "dxxx_diag":
        return (5 * _SQ2PI / t ** 1.5,
                _line(lambda x: abs((3 - x * x / t) * x) / t ** 2 * g(x)))
    if order == "dxx_off":
        return 2 / (np.pi * t), _plane(lambda x, y: abs(x * y) / t ** 2 * g(x) * g(y))
    if order == "dxxx_off":
        return (2 * _SQ2PI / t ** 1.5,
                _plane(lambda x, y: abs((1 - x * x / t) * y) / t ** 2 * g(x) * g(y)))
    # dG/dt = G (|x|^2 / t - d) / (2t); |x|^2 / t is chi-square with d degrees
    def integrand(r):
        return abs(r - d) / (2 * t) * stats.chi2.pdf(r, d)
    val = integrate.quad(integrand, 0, d, **_QUAD)[0] + integrate.quad(integrand, d, np.inf, **_QUAD)[0]
    return d / t, val


def _gaussian_weights(offsets, dx, t):
    """Discrete heat kernel on grid offsets ``offsets * dx``; sums to one."""
    s = np.sqrt(t)
    if s >= 2 * dx:
        w = _phi(offsets * dx / s) * dx / s
    else:
        # cell averages keep the kernel meaningful when it is narrower than a cell
        w = special.ndtr((offsets + 0.5) * dx / s) - special.ndtr((offsets - 0.5) * dx / s)
    return w


def _cyclic(kernel_vals, n):
    """Place kernel values for offsets ``-(n-1) .. n-1`` in a length-``2n`` cyclic buffer."""
    buf = np.zeros(2 * n)
    buf[:n] = kernel_vals[n - 1:]
    buf[n + 1:] = kernel_vals[:n - 1]
    return buf


def _check_support(n, dx, t):
    tail = 2 * special.ndtr(-(n - 0.5) * dx / np.sqrt(t))
    if tail > 1e-12:
        raise DomainError(f"heat kernel at t={t} has mass {tail:.3g} outside the padded grid; "
                          "widen the domain")


def gaussian_convolve(grid, t):
    """Convolve a tabulated density with ``G_t``.

    Raises
    ------
    DomainError
        If ``G_t`` puts more than ``1e-12`` of its mass beyond the grid width,
        which the zero padding cannot hold.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    n, dx = grid.n_points, grid.dx
    _check_support(n, dx, t)
    offsets = np.arange(-(n - 1), n)
    kern = _cyclic(_gaussian_weights(offsets, dx, t), n)
    out = sfft.irfft(sfft.rfft(grid.values, 2 * n) * sfft.rfft(kern), 2 * n)[:n]
    return grid.with_values(out, grid.time_stamp + t)


def _heat_potential(y, b):
    """``int_0^b G_tau(y) dtau``; zero when ``b = 0``."""
    if b == 0:
        return np.zeros_like(y)
    ay = np.abs(y)
    return np.sqrt(2 * b / np.pi) * np.exp(-y * y / (2 * b)) - ay * special.erfc(ay / np.sqrt(2 * b))


def _dx_kernel_weights(offsets, dx, a, b):
    """``int_a^b int_{cell} dG_tau/dx (z) dz dtau`` for the cells centred at ``offsets * dx``."""
    xp = (offsets + 0.5) * dx
    xm = (offsets - 0.5) * dx
    return (_heat_potential(xp, b) - _heat_potential(xm, b)) - (
        _heat_potential(xp, a) - _heat_potential(xm, a))


@dataclass(frozen=True)
class PicardConfig:
    """Discretisation and stopping rule of the Picard solver.

    ``domain`` is ``(x_min, x_max)``; by default it is
    ``x0 +- (B T + 12 sqrt(T + v0))`` with ``v0`` the initial variance.
    """

    n_time_steps: int = 256
    max_iterations: int = 200
    tolerance: float = 1e-10
    n_points: int = 2 ** 13
    domain: tuple = None

    def __post_init__(self):
        if self.n_time_steps < 1 or self.max_iterations < 1:
            raise DomainError("step and iteration counts must be positive")
        if not self.tolerance > 0:
            raise DomainError("tolerance must be positive")
        n = self.n_points
        if n < 8 or n & (n - 1):
            raise DomainError("n_points must be a power of two >= 8")
        if self.domain is not None and not self.domain[1] > self.domain[0]:
            raise DomainError("empty domain")


@dataclass
class PicardResult:
    """Output of :func:`picard_run`.

    ``slices[n]`` is the density at time ``n T / n_time_steps``.
    """

    grid: DensityGrid
    slices: np.ndarray
    residuals: list
    converged: bool


def mollifier_width(cfg, problem):
    """Standard deviation ``4 dx`` used to smear a point-mass start."""
    lo, hi = _domain(problem, cfg)
    return 4 * (hi - lo) / (cfg.n_points - 1)


def _initial_variance(init):
    if isinstance(init, ClosedFormDensity) and init.kind == "gaussian":
        return init.params["variance"], init.params["mean"]
    if isinstance(init, DensityGrid):
        z, p = init.points, init.values
        m = trapezoid_mass(p * z, init.dx)
        return trapezoid_mass(p * (z - m) ** 2, init.dx), m
    return 0.0, None


def _domain(problem, cfg):
    if cfg.domain is not None:
        return float(cfg.domain[0]), float(cfg.domain[1])
    v0, mean = _initial_variance(problem.initial_density)
    c = float(problem.x0_array[0]) if mean is None else mean
    T = problem.horizon
    half = problem.drift.bound * T + 12 * np.sqrt(T + v0)
    return c - half, c + half


def _initial_values(problem, z, dx):
    init = problem.initial_density
    if init is None:
        s0 = 4 * dx
        return _phi((z - problem.x0_array[0]) / s0) / s0
    if isinstance(init, DensityGrid):
        return np.interp(z, init.points, init.values, left=0.0, right=0.0)
    return np.asarray(init(z), dtype=float)


def picard_run(problem, cfg, raise_on_failure=True):
    """Iterate the discretised mild map to its fixed point.

    The first iterate is ``G_t * m`` on the whole time grid. Each iteration
    freezes ``b(t_k) q(t_k)`` on ``[t_k, t_{k+1})`` and recomputes every
    slice; the residual is the largest trapezoid L1 change over the slices.

    Raises
    ------
    ConvergenceError
        When ``raise_on_failure`` and the residual stays above the tolerance
        after ``max_iterations``, or whenever an iterate's mass leaves
        ``1 +- 1e-3``.
    DomainError
        For multi-dimensional drifts, a badly normalised initial density, or
        a domain whose boundary density exceeds ``1e-10``.
    """
    if problem.drift.dimension != 1:
        raise DomainError("the mild solver is one-dimensional")
    lo, hi = _domain(problem, cfg)
    n, M, T = cfg.n_points, cfg.n_time_steps, problem.horizon
    z = np.linspace(lo, hi, n)
    dx = z[1] - z[0]
    dt = T / M
    m0 = _initial_values(problem, z, dx)
    if abs(trapezoid_mass(m0, dx) - 1) > 1e-4:
        raise DomainError(f"initial density has grid mass {trapezoid_mass(m0, dx)!r}")
    _check_support(n, dx, T)

    offsets = np.arange(-(n - 1), n)
    m_hat = sfft.rfft(m0, 2 * n)
    base = np.empty((M + 1, n))
    base[0] = m0
    for k in range(1, M + 1):
        kern = _cyclic(_gaussian_weights(offsets, dx, k * dt), n)
        base[k] = sfft.irfft(m_hat * sfft.rfft(kern), 2 * n)[:n]

    # time-integrated gradient kernels for lags 1..M, transformed in space and time
    n_fft = sfft.next_fast_len(2 * M)
    lag_hat = np.empty((M, n + 1), dtype=complex)
    for j in range(M):
        w = _dx_kernel_weights(offsets, dx, j * dt, (j + 1) * dt)
        lag_hat[j] = sfft.rfft(_cyclic(w, n))
    lag_hat = sfft.fft(lag_hat, n_fft, axis=0)

    drift = np.stack([problem.drift(k * dt, z) for k in range(M)])
    q = base
    residuals = []
    converged = False
    for _ in range(cfg.max_iterations):
        f_hat = sfft.fft(sfft.rfft(drift * q[:M], 2 * n, axis=1), n_fft, axis=0)
        corr = sfft.ifft(f_hat * lag_hat, axis=0)[:M]
        new = np.empty_like(q)
        new[0] = m0
        new[1:] = base[1:] - sfft.irfft(corr, 2 * n, axis=1)[:, :n]
        masses = dx * (new.sum(axis=1) - 0.5 * (new[:, 0] + new[:, -1]))
        drift_mass = float(np.max(np.abs(masses - 1)))
        if drift_mass > 1e-3:
            raise ConvergenceError(f"iterate mass drifted by {drift_mass:.3g}",
                                   residuals[-1] if residuals else float("nan"))
        diff = np.abs(new - q)
        res = float(np.max(dx * (diff.sum(axis=1) - 0.5 * (diff[:, 0] + diff[:, -1]))))
        residuals.append(res)
        q = new
        if res < cfg.tolerance:
            converged = True
            break
    if not converged and raise_on_failure:
        raise ConvergenceError(
            f"Picard iteration did not reach {cfg.tolerance} in {cfg.max_iterations} "
            f"iterations", residuals[-1])
    edge = float(np.max(np.abs(q[:, [0, -1]])))
    if edge > 1e-10:
        raise DomainError(f"density {edge:.3g} at the domain boundary; widen the domain")
    grid = DensityGrid(lo, hi, q[M], T)
    return PicardResult(grid, q, residuals, converged)


def picard_solve(problem, cfg=None):
    """Density at the horizon from the mild equation.

    A point-mass start is replaced by ``N(x0, (4 dx)^2)``; compare against
    exact densities convolved with the same Gaussian
    (:func:`tv_euler.exact.bang_bang_gaussian_start`).
    """
    return picard_run(problem, cfg or PicardConfig()).grid


def contraction_diagnostics(problem, cfg=None):
    """Residual after each Picard iteration, without failing on non-convergence."""
    return picard_run(problem, cfg or PicardConfig(), raise_on_failure=False).residuals
