"""Euler-Maruyama scheme with a randomised time variable.

One step reads ``x + sqrt(h) * g + b(kh + h * u, x) * h`` with ``g`` standard
normal and ``u`` uniform on ``[0, 1)``; the time argument is therefore uniform
on ``[kh, (k+1)h]``. Randomness is counter based: the draws of sample ``i`` at
step ``k`` depend only on ``(master_seed, stream tags, n_steps, i, k)``, so
the output is bit-identical whatever the number of workers.
"""

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np
import psutil

from .drift import SdeProblem
from .errors import CapacityError, DomainError
from .rng import derive_key, draw_step, step_draws

__all__ = [
    "SamplerConfig",
    "EndpointSample",
    "step",
    "sample_endpoints",
    "coupled_endpoints",
    "default_jobs",
    "write_endpoints",
    "read_endpoints",
]

_BLOCK = 8192


def default_jobs():
    """Worker count from ``TV_EULER_JOBS``, defaulting to 1."""
    try:
        return max(1, int(os.environ.get("TV_EULER_JOBS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SamplerConfig:
    """Parameters of one batch of scheme realisations.

    ``stream`` holds extra integer tags (run index, experiment row, ...)
    mixed into the key so that batches sharing a seed stay independent.
    """

    problem: SdeProblem
    h: float
    n_samples: int
    master_seed: int = 0
    record_paths: bool = False
    stream: tuple = ()

    def __post_init__(self):
        T = self.problem.horizon
        if not (self.h > 0 and self.h <= T * (1 + 1e-12)):
            raise DomainError("time-step must satisfy 0 < h <= T")
        ratio = T / self.h
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise DomainError(f"T/h = {ratio!r} is not an integer")
        if self.n_samples < 1:
            raise DomainError("n_samples must be positive")

    @property
    def n_steps(self):
        return int(round(self.problem.horizon / self.h))

    def key(self, n_steps=None):
        return derive_key(self.master_seed, *self.stream,
                          self.n_steps if n_steps is None else n_steps)


@dataclass
class EndpointSample:
    """Terminal values ``X^h_T`` of ``n_samples`` independent scheme runs.

    ``values`` has shape ``(N,)`` in dimension one and ``(N, d)`` otherwise;
    ``paths`` (grid points only, including time 0) is filled when requested.
    """

    values: np.ndarray
    config: SamplerConfig
    paths: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return self.values.shape[0]


def step(x, k, h, gaussian, uniform, drift):
    """Advance one scheme step from grid time ``k h``."""
    if h <= 0:
        raise DomainError("h must be positive")
    x = np.asarray(x, dtype=float)
    g = np.asarray(gaussian, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(g)) and np.isfinite(uniform)):
        raise DomainError("non-finite input to step")
    t = k * h + h * uniform
    if drift.dimension == 1:
        b = drift(t, np.atleast_1d(x))
        out = x + np.sqrt(h) * g + b.reshape(x.shape) * h
    else:
        out = x + np.sqrt(h) * g + drift(t, x.reshape(1, -1))[0] * h
    return float(out) if out.ndim == 0 else out


@nb.njit(inline="always")
def _lookup(breaks, vals, x):
    lo = 0
    hi = breaks.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if x >= breaks[mid]:
            lo = mid + 1
        else:
            hi = mid
    return vals[lo]


@nb.njit(nogil=True, cache=True)
def _run_piecewise(start, stop, x0, n_steps, h, breaks, vals, k0, k1, out, paths):
    sqrt_h = np.sqrt(h)
    record = paths.shape[0] > 0
    for i in range(start, stop):
        x = x0
        if record:
            paths[i, 0] = x
        for k in range(n_steps):
            z, _ = step_draws(i, k, k0, k1)
            x = x + sqrt_h * z + _lookup(breaks, vals, x) * h
            if record:
                paths[i, k + 1] = x
        out[i] = x


@nb.njit(nogil=True, cache=True)
def _run_piecewise_coupled(start, stop, x0, n_coarse, h, breaks, vals, k0, k1,
                           coarse, fine):
    half = 0.5 * h
    sqrt_half = np.sqrt(half)
    for i in range(start, stop):
        xc = x0
        xf = x0
        for k in range(n_coarse):
            z1, _ = step_draws(i, 2 * k, k0, k1)
            z2, _ = step_draws(i, 2 * k + 1, k0, k1)
            xf = xf + sqrt_half * z1 + _lookup(breaks, vals, xf) * half
            xf = xf + sqrt_half * z2 + _lookup(breaks, vals, xf) * half
            xc = xc + sqrt_half * (z1 + z2) + _lookup(breaks, vals, xc) * h
        coarse[i] = xc
        fine[i] = xf


def _run_vectorised(start, stop, cfg, key, out, paths, substeps=1):
    """Generic path for custom or multi-dimensional drifts.

    With ``substeps > 1`` each step of size ``h`` sums the Gaussians of
    ``substeps`` consecutive fine steps, which couples it to the scheme run at
    ``h / substeps`` on the same key.
    """
    prob = cfg.problem
    d = prob.drift.dimension
    ids = np.arange(start, stop, dtype=np.int64)
    h = cfg.h
    x = np.tile(prob.x0_array, (ids.size, 1))
    if paths is not None:
        paths[start:stop, 0] = x if d > 1 else x[:, 0]
    scale = np.sqrt(h / substeps)
    for k in range(cfg.n_steps):
        z, u = draw_step(ids, substeps * k, key[0], key[1], d)
        for j in range(1, substeps):
            z = z + draw_step(ids, substeps * k + j, key[0], key[1], d)[0]
        t = k * h + h * u
        if d == 1:
            x[:, 0] = x[:, 0] + scale * z[:, 0] + prob.drift(t, x[:, 0]) * h
        else:
            x = x + scale * z + prob.drift(t[:, None], x) * h
        if paths is not None:
            paths[start:stop, k + 1] = x if d > 1 else x[:, 0]
    out[start:stop] = x if d > 1 else x[:, 0]


def _check_capacity(n_floats):
    need = 8 * n_floats
    avail = psutil.virtual_memory().available
    if need > 0.8 * avail:
        raise CapacityError(
            f"request needs {need / 2**30:.2f} GiB, only {avail / 2**30:.2f} GiB available")


def _run_blocks(fn, n, jobs):
    # fixed-size blocks: disjoint output slots, independent of the worker count
    blocks = [(s, min(s + _BLOCK, n)) for s in range(0, n, _BLOCK)]
    if jobs <= 1 or len(blocks) == 1:
        for s, e in blocks:
            fn(s, e)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for fut in [pool.submit(fn, s, e) for s, e in blocks]:
            fut.result()


def sample_endpoints(cfg, jobs=None):
    """Draw ``cfg.n_samples`` independent realisations of ``X^h_T``.

    Parameters
    ----------
    cfg : SamplerConfig
    jobs : int, optional
        Worker threads; defaults to :func:`default_jobs`. The result does not
        depend on it.

    Returns
    -------
    EndpointSample
    """
    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    prob = cfg.problem
    n, d, n_steps = cfg.n_samples, prob.drift.dimension, cfg.n_steps
    _check_capacity(n * d * (1 + (n_steps + 1 if cfg.record_paths else 0)))
    try:
        out = np.empty(n) if d == 1 else np.empty((n, d))
        paths = None
        if cfg.record_paths:
            paths = np.empty((n, n_steps + 1)) if d == 1 else np.empty((n, n_steps + 1, d))
    except MemoryError as exc:
        raise CapacityError(str(exc)) from exc
    key = cfg.key()
    table = prob.drift.piecewise_table()

    if table is not None:
        breaks, vals = (np.ascontiguousarray(a, dtype=float) for a in table)
        x0 = float(prob.x0_array[0])
        p_arr = paths if paths is not None else np.empty((0, 0))

        def work(s, e):
            _run_piecewise(s, e, x0, n_steps, cfg.h, breaks, vals, key[0], key[1], out, p_arr)
    else:
        def work(s, e):
            _run_vectorised(s, e, cfg, key, out, paths)

    _run_blocks(work, n, jobs)
    return EndpointSample(out, cfg, paths)


def coupled_endpoints(cfg, coupling="independent", jobs=None):
    """Samples at ``h`` and ``h/2`` for self-comparison of the scheme.

    Parameters
    ----------
    cfg : SamplerConfig
        Describes the coarse resolution ``h``.
    coupling : {"brownian", "independent"}
        ``"independent"`` draws each resolution from its own stream, keyed by
        its number of steps. ``"brownian"`` drives both schemes with the same
        Brownian path: the coarse increments are sums of two consecutive fine
        ones, and the fine sample equals :func:`sample_endpoints` at ``h/2``.

    Returns
    -------
    tuple of EndpointSample
        ``(sample at h, sample at h/2)``.
    """
    if cfg.record_paths:
        raise DomainError("path recording is not supported for coupled sampling")
    fine_cfg = SamplerConfig(cfg.problem, cfg.h / 2, cfg.n_samples, cfg.master_seed,
                             False, cfg.stream)
    if coupling == "independent":
        return sample_endpoints(cfg, jobs), sample_endpoints(fine_cfg, jobs)
    if coupling != "brownian":
        raise DomainError(f"unknown coupling {coupling!r}")

    jobs = default_jobs() if jobs is None else max(1, int(jobs))
    prob = cfg.problem
    n, d = cfg.n_samples, prob.drift.dimension
    _check_capacity(2 * n * d)
    key = fine_cfg.key()
    table = prob.drift.piecewise_table()
    if table is None:
        coarse = np.empty(n) if d == 1 else np.empty((n, d))

        def work(s, e):
            _run_vectorised(s, e, cfg, key, coarse, None, substeps=2)

        _run_blocks(work, n, jobs)
        return EndpointSample(coarse, cfg), sample_endpoints(fine_cfg, jobs)

    breaks, vals = (np.ascontiguousarray(a, dtype=float) for a in table)
    x0 = float(prob.x0_array[0])
    coarse = np.empty(n)
    fine = np.empty(n)

    def work(s, e):
        _run_piecewise_coupled(s, e, x0, cfg.n_steps, cfg.h, breaks, vals,
                               key[0], key[1], coarse, fine)

    _run_blocks(work, n, jobs)
    return EndpointSample(coarse, cfg), EndpointSample(fine, fine_cfg)


_HEADER = struct.Struct("<4sIQdd")


def write_endpoints(path, sample):
    """Binary dump: 32-byte header ``TVE1, d, N, h, T`` then little-endian doubles."""
    values = np.asarray(sample.values, dtype="<f8")
    d = 1 if values.ndim == 1 else values.shape[1]
    cfg = sample.config
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(b"TVE1", d, values.shape[0], cfg.h, cfg.problem.horizon))
        fh.write(np.ascontiguousarray(values).tobytes())


def read_endpoints(path):
    """Inverse of :func:`write_endpoints`; returns ``(values, h, T)``."""
    with open(path, "rb") as fh:
        magic, d, n, h, T = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != b"TVE1":
            raise DomainError(f"{path}: not an endpoint dump (magic {magic!r})")
        values = np.frombuffer(fh.read(), dtype="<f8")
    if values.size != n * d:
        raise DomainError(f"{path}: expected {n * d} values, found {values.size}")
    return (values if d == 1 else values.reshape(n, d)), h, T
