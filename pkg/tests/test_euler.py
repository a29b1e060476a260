import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from tv_euler import (CapacityError, ClosedFormDensity, DomainError, DriftSpec, SamplerConfig,
                      SdeProblem, coupled_endpoints, density_to_grid, sample_endpoints, step)
from tv_euler.euler import read_endpoints, write_endpoints
from tv_euler.rng import derive_key, draw_step, philox4x64


def _cfg(drift, h, n, seed=3, x0=0.0, T=1.0, **kw):
    return SamplerConfig(SdeProblem(drift, x0, T), h, n, seed, **kw)


def test_step_examples():
    assert step(0.0, 0, 1.0, 1.0, 0.3, DriftSpec.zero()) == pytest.approx(1.0)
    assert step(0.0, 0, 0.5, 0.0, 0.9, DriftSpec.constant(2.0)) == pytest.approx(1.0)
    assert step(0.2, 0, 0.25, -0.4, 0.5, DriftSpec.bang_bang(1.0)) == pytest.approx(-0.25)


def test_step_uses_randomised_time():
    drift = DriftSpec.custom(lambda t, x: np.broadcast_to(t, np.shape(x)), bound=10.0)
    # delta_3 = 3h + 0.4h
    assert step(0.0, 3, 0.5, 0.0, 0.4, drift) == pytest.approx(0.5 * 1.7)


def test_step_rejects_non_finite():
    with pytest.raises(DomainError):
        step(np.nan, 0, 0.1, 0.0, 0.5, DriftSpec.zero())
    with pytest.raises(DomainError):
        step(0.0, 0, 0.0, 0.0, 0.5, DriftSpec.zero())


def test_philox_matches_numpy():
    key, ctr = [123, 456], [5, 7, 9, 11]
    raw = np.random.Philox(counter=ctr, key=key).random_raw(4)
    # numpy bumps the counter before producing its first block
    ours = philox4x64(*(np.uint64(c) for c in [6, 7, 9, 11]), np.uint64(123), np.uint64(456))
    assert [int(w) for w in ours] == [int(w) for w in raw]


def test_key_depends_on_tags():
    assert derive_key(1, 0, 8) != derive_key(1, 1, 8)
    assert derive_key(1, 0, 8) != derive_key(2, 0, 8)
    assert derive_key(1, 0, 8) == derive_key(1, 0, 8)


def test_config_validation():
    prob = SdeProblem(DriftSpec.zero(), 0.0, 1.0)
    with pytest.raises(DomainError):
        SamplerConfig(prob, 0.3, 10)
    with pytest.raises(DomainError):
        SamplerConfig(prob, 2.0, 10)
    with pytest.raises(DomainError):
        SamplerConfig(prob, 0.25, 0)


def test_zero_drift_moments():
    n = 100_000
    v = sample_endpoints(_cfg(DriftSpec.zero(), 0.125, n)).values
    assert abs(v.mean()) < 4 / np.sqrt(n)
    assert abs(v.var() - 1) < 0.05


def test_constant_drift_moments():
    n = 100_000
    c, T = -0.7, 2.0
    v = sample_endpoints(_cfg(DriftSpec.constant(c), 0.25, n, x0=1.0, T=T)).values
    assert abs(v.mean() - (1.0 + c * T)) < 4 * np.sqrt(T / n)
    assert abs(v.var() / T - 1) < 0.05


def test_two_dimensional_constant_drift():
    n = 40_000
    v = sample_endpoints(_cfg(DriftSpec.constant([1.0, -2.0]), 0.25, n, x0=[0.0, 0.5])).values
    assert v.shape == (n, 2)
    np.testing.assert_allclose(v.mean(axis=0), [1.0, -1.5], atol=4 / np.sqrt(n))
    np.testing.assert_allclose(v.var(axis=0), [1.0, 1.0], rtol=0.05)
    assert abs(np.corrcoef(v.T)[0, 1]) < 4 / np.sqrt(n)


def test_time_randomisation_is_uniform():
    ids = np.arange(5000, dtype=np.int64)
    k0, k1 = derive_key(9, 1)
    u = np.concatenate([draw_step(ids, s, k0, k1, 1)[1] for s in range(20)])
    counts = np.histogram(u, bins=20, range=(0, 1))[0]
    assert stats.chisquare(counts).pvalue > 1e-3


def test_scheme_consumes_the_uniforms():
    # with b(t, x) = t and a single step of length 1 the drift adds delta_0
    n = 50_000
    tdrift = DriftSpec.custom(lambda t, x: np.broadcast_to(t, np.shape(x)), bound=1.0)
    a = sample_endpoints(_cfg(tdrift, 1.0, n)).values
    b = sample_endpoints(_cfg(DriftSpec.zero(), 1.0, n)).values
    u = a - b
    assert u.min() >= 0 and u.max() < 1
    counts = np.histogram(u, bins=20, range=(0, 1))[0]
    assert stats.chisquare(counts).pvalue > 1e-3


@pytest.mark.parametrize("drift", [DriftSpec.bang_bang(1.0), DriftSpec.two_valued(-3, 4),
                                   DriftSpec.custom(lambda t, x: -np.tanh(x) * t, 1.0)])
def test_determinism_across_jobs(drift):
    cfg = _cfg(drift, 1 / 16, 20_001)
    a = sample_endpoints(cfg, jobs=1).values
    b = sample_endpoints(cfg, jobs=3).values
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("coupling", ["independent", "brownian"])
def test_coupled_determinism_across_jobs(coupling):
    cfg = _cfg(DriftSpec.two_valued(-3, 4), 1 / 8, 17_000)
    a = coupled_endpoints(cfg, coupling, jobs=1)
    b = coupled_endpoints(cfg, coupling, jobs=4)
    for x, y in zip(a, b):
        assert x.values.tobytes() == y.values.tobytes()


def test_sample_prefix_stable():
    # sample i depends on (seed, i) only, not on N
    cfg_small = _cfg(DriftSpec.bang_bang(2.0), 1 / 8, 100)
    cfg_big = _cfg(DriftSpec.bang_bang(2.0), 1 / 8, 10_000)
    assert np.array_equal(sample_endpoints(cfg_small).values,
                          sample_endpoints(cfg_big).values[:100])


def test_piecewise_and_vectorised_paths_agree():
    alpha, beta = -3.0, 4.0
    fast = DriftSpec.two_valued(alpha, beta)
    slow = DriftSpec.custom(lambda t, x: np.where(x < 0, alpha, beta), bound=4.0)
    a = sample_endpoints(_cfg(fast, 1 / 32, 3000)).values
    b = sample_endpoints(_cfg(slow, 1 / 32, 3000)).values
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_pathwise_bound():
    cfg = _cfg(DriftSpec.two_valued(-3, 4), 1 / 16, 2000, x0=0.4, record_paths=True)
    w = sample_endpoints(SamplerConfig(SdeProblem(DriftSpec.zero(), 0.0, 1.0), 1 / 16, 2000, 3,
                                       record_paths=True))
    x = sample_endpoints(cfg)
    assert x.paths.shape == (2000, 17)
    assert np.all(x.paths[:, 0] == 0.4)
    np.testing.assert_array_equal(x.paths[:, -1], x.values)
    bound = 0.4 + np.max(np.abs(w.paths), axis=1) + 4.0 * 1.0
    assert np.all(np.abs(x.values) <= bound + 1e-12)


def test_zero_drift_coupled_ks():
    a, b = coupled_endpoints(_cfg(DriftSpec.zero(), 1 / 4, 20_000))
    assert stats.ks_2samp(a.values, b.values).pvalue > 0.01


def test_brownian_coupling_structure():
    cfg = _cfg(DriftSpec.two_valued(-3, 4), 1 / 8, 5000)
    coarse, fine = coupled_endpoints(cfg, "brownian")
    half = sample_endpoints(SamplerConfig(cfg.problem, 1 / 16, 5000, cfg.master_seed))
    assert np.array_equal(fine.values, half.values)
    z_coarse, z_fine = coupled_endpoints(_cfg(DriftSpec.zero(), 1 / 8, 5000), "brownian")
    np.testing.assert_allclose(z_coarse.values, z_fine.values, atol=1e-12)


def test_coupled_unknown_mode():
    with pytest.raises(DomainError):
        coupled_endpoints(_cfg(DriftSpec.zero(), 1 / 4, 10), "antithetic")


def test_capacity_error():
    with pytest.raises(CapacityError):
        sample_endpoints(_cfg(DriftSpec.zero(), 1.0, 10 ** 13))


def test_binary_dump_roundtrip(tmp_path):
    s = sample_endpoints(_cfg(DriftSpec.bang_bang(1.0), 1 / 4, 1000))
    path = tmp_path / "x.bin"
    write_endpoints(path, s)
    raw = path.read_bytes()
    assert raw[:4] == b"TVE1" and len(raw) == 32 + 8 * 1000
    values, h, T = read_endpoints(path)
    assert np.array_equal(values, s.values) and h == 0.25 and T == 1.0
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(DomainError):
        read_endpoints(path)


@given(seed=st.integers(0, 2 ** 63), n=st.integers(1, 50))
def test_all_values_finite(seed, n):
    v = sample_endpoints(_cfg(DriftSpec.two_valued(-6, 8), 1 / 8, n, seed=seed)).values
    assert v.shape == (n,) and np.all(np.isfinite(v))


@pytest.mark.slow
def test_bang_bang_ks_against_exact():
    n = 100_000
    v = sample_endpoints(_cfg(DriftSpec.bang_bang(1.0), 1e-4, n, seed=21), jobs=None).values
    grid = density_to_grid(ClosedFormDensity.bang_bang(1.0, 1.0, 0.0), -9, 9, 2 ** 16)
    z, p = grid.points, grid.values
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (p[1:] + p[:-1]) * grid.dx)])
    d = stats.kstest(v, lambda x: np.interp(x, z, cdf)).statistic
    assert d < 1.628 / np.sqrt(n)
