"""Counter-based random streams (Philox4x64-10) compiled with numba.

Every random word is a pure function of ``(key, counter)`` so a Monte Carlo
sample can be regenerated from its index alone, whatever the number of
threads used to produce its neighbours. The block function follows the
Random123 definition that numpy's ``Philox`` bit generator also implements.
"""

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53
_TWO_PI = 2.0 * np.pi


@nb.njit(inline="always")
def _mulhilo(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _S32
    b_lo = b & _MASK32
    b_hi = b >> _S32
    lo_lo = a_lo * b_lo
    hi_lo = a_hi * b_lo
    lo_hi = a_lo * b_hi
    hi_hi = a_hi * b_hi
    cross = (lo_lo >> _S32) + (hi_lo & _MASK32) + lo_hi
    hi = hi_hi + (hi_lo >> _S32) + (cross >> _S32)
    return hi, a * b


@nb.njit
def philox4x64(c0, c1, c2, c3, k0, k1):
    """Philox4x64 with 10 rounds; returns the four output words."""
    for r in range(10):
        if r > 0:
            k0 += _W0
            k1 += _W1
        hi0, lo0 = _mulhilo(_M0, c0)
        hi1, lo1 = _mulhilo(_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@nb.njit(inline="always")
def open_unit(w):
    # (0, 1], safe for log
    return (np.float64(w >> _S11) + 1.0) * _TWO_M53


@nb.njit(inline="always")
def closed_unit(w):
    # [0, 1)
    return np.float64(w >> _S11) * _TWO_M53


@nb.njit(inline="always")
def step_draws(sample, step, k0, k1):
    """One standard normal and one uniform on [0, 1) for ``(sample, step)``.

    The normal uses the cosine branch of Box-Muller on the first two words;
    the uniform comes from the third word.
    """
    w0, w1, w2, _ = philox4x64(np.uint64(sample), np.uint64(step), np.uint64(0),
                               np.uint64(0), k0, k1)
    z = np.sqrt(-2.0 * np.log(open_unit(w0))) * np.cos(_TWO_PI * closed_unit(w1))
    return z, closed_unit(w2)


@nb.njit(inline="always")
def normal_pair(sample, step, block, k0, k1):
    """Two independent standard normals for block ``block`` >= 1 of a step."""
    w0, w1, w2, w3 = philox4x64(np.uint64(sample), np.uint64(step),
                                np.uint64(block), np.uint64(0), k0, k1)
    r = np.sqrt(-2.0 * np.log(open_unit(w0)))
    a = _TWO_PI * closed_unit(w1)
    return r * np.cos(a), r * np.sin(a)


@nb.njit(nogil=True, cache=True)
def draw_step(sample_ids, step, k0, k1, dim):
    """Normals of shape ``(n, dim)`` and uniforms ``(n,)`` for one time step.

    Coordinate 0 comes from :func:`step_draws`, further coordinates from
    :func:`normal_pair` blocks, so one-dimensional runs consume exactly the
    words used by the compiled scheme kernels.
    """
    n = sample_ids.shape[0]
    z = np.empty((n, dim))
    u = np.empty(n)
    for i in range(n):
        s = sample_ids[i]
        z0, u0 = step_draws(s, step, k0, k1)
        z[i, 0] = z0
        u[i] = u0
        for j in range(1, dim, 2):
            a, b = normal_pair(s, step, (j + 1) // 2, k0, k1)
            z[i, j] = a
            if j + 1 < dim:
                z[i, j + 1] = b
    return z, u


def derive_key(master_seed, *tags):
    """Two 64-bit Philox key words from a master seed and integer stream tags.

    Hashing goes through :class:`numpy.random.SeedSequence`, so distinct tag
    tuples give statistically independent streams.
    """
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF] + [int(t) for t in tags]
    words = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint64)
    return np.uint64(words[0]), np.uint64(words[1])
