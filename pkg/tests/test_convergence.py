import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tv_euler import (DomainError, VerificationError, discrete_gronwall, fit_order,
                      theoretical_ratio, verify_sum_bound)
from tv_euler.convergence import (log_rate, random_gronwall_instance, rate_profile,
                                  sum_bound_slacks)

H = [2.0 ** -k for k in range(3, 9)]


def test_fit_exact_powers():
    assert fit_order([(h, h) for h in H]).slope == pytest.approx(1.0, abs=1e-12)
    fit = fit_order([(h, math.sqrt(h)) for h in H])
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)


def test_fit_serialisation():
    d = fit_order([(h, 3 * h ** 0.7) for h in H]).to_dict()
    assert set(d) == {"slope", "intercept", "r_squared", "points"}
    assert d["intercept"] == pytest.approx(math.log(3))
    np.testing.assert_allclose(np.array(d["points"])[:, 0], H)


def test_fit_rejects_bad_input():
    with pytest.raises(DomainError):
        fit_order([(0.5, 1.0), (0.25, 0.5)])
    with pytest.raises(DomainError):
        fit_order([(0.5, 1.0), (0.25, 0.0), (0.125, 0.1)])
    with pytest.raises(DomainError):
        fit_order([(0.5, 1.0), (0.5, 0.9), (0.5, 0.8)])


@given(st.lists(st.floats(1e-4, 10), min_size=6, max_size=6), st.floats(1e-6, 1e6))
def test_fit_scale_invariance(errors, c):
    pts = list(zip(H, errors))
    a = fit_order(pts)
    b = fit_order([(h, c * e) for h, e in pts])
    assert b.slope == pytest.approx(a.slope, abs=1e-12)
    assert b.intercept == pytest.approx(a.intercept + math.log(c), abs=1e-9)


def test_theoretical_ratio_values():
    # independent evaluation: 2 (1 + k ln 2) / (1 + (k + 1) ln 2) at h = 2^-k
    for k in range(1, 11):
        oracle = 2 * (1 + k * math.log(2)) / (1 + (k + 1) * math.log(2))
        assert theoretical_ratio(1.0, 2.0 ** -k) == pytest.approx(oracle, rel=1e-14)
    assert round(theoretical_ratio(1.0, 1 / 8), 2) == 1.63
    assert theoretical_ratio(1.0, 1.0) == pytest.approx(1.181232, abs=1e-6)
    assert theoretical_ratio(3.0, 3.0 / 8) == theoretical_ratio(1.0, 1 / 8)


def test_theoretical_ratio_smallest_step():
    # printed as 1.82 in the published column; the formula gives 1.8252
    value = theoretical_ratio(1.0, 1 / 512)
    assert value == pytest.approx(1.825216, abs=1e-6)
    assert abs(value - 1.82) < 0.01


def test_theoretical_ratio_domain():
    with pytest.raises(DomainError):
        theoretical_ratio(1.0, 2.0)
    with pytest.raises(DomainError):
        theoretical_ratio(1.0, 0.0)


@given(st.floats(1e-9, 1.0), st.floats(0.01, 0.99))
def test_theoretical_ratio_monotone(h, frac):
    assert theoretical_ratio(1.0, h * frac) > theoretical_ratio(1.0, h)
    assert theoretical_ratio(1.0, h) < 2


def test_theoretical_ratio_limit():
    assert theoretical_ratio(1.0, 1e-300) == pytest.approx(2.0, abs=5e-3)


def test_rate_profile():
    h = np.array(H)
    np.testing.assert_allclose(rate_profile(1.0, h, 2 * log_rate(1.0, h)), 2.0)
    np.testing.assert_allclose(rate_profile(1.0, h, np.sqrt(h), rate="sqrt"), 1.0)
    with pytest.raises(DomainError):
        rate_profile(1.0, h, h, rate="cubic")


def test_sum_bound_examples():
    s = sum_bound_slacks(3)
    assert s[0] == pytest.approx(math.pi - 2, abs=1e-12)
    assert s[1] == pytest.approx(math.pi - 2 / 3 - 2 / math.sqrt(2), abs=1e-12)
    assert s[0] == pytest.approx(1.1416, abs=1e-4)
    assert s[1] == pytest.approx(1.0607, abs=1e-4)


def test_sum_bound_large():
    slack = sum_bound_slacks(10 ** 4)
    assert np.all(slack > 0)
    assert verify_sum_bound(10 ** 4) == pytest.approx(slack.min())
    # the sum tends to pi, so the slack shrinks along n
    assert slack[-1] < slack[100] < slack[10]


def test_sum_bound_domain():
    with pytest.raises(DomainError):
        sum_bound_slacks(1)
    with pytest.raises(DomainError):
        sum_bound_slacks(10 ** 7)


def test_gronwall_zero_g():
    f = np.array([1.0, 2.0, 0.5])
    np.testing.assert_array_equal(discrete_gronwall(f, f, np.zeros(3)), f)


def test_gronwall_constant_sequences():
    n, c = 12, 0.3
    b = discrete_gronwall(np.ones(n), np.ones(n), np.full(n, c))
    oracle = [1 + c * sum(math.exp(c * (m - 1 - i)) for i in range(m)) for m in range(n)]
    np.testing.assert_allclose(b, oracle, rtol=1e-13)


def test_gronwall_hypothesis_violation_index():
    with pytest.raises(VerificationError) as info:
        discrete_gronwall([1.0, 0.5, 5.0], [1.0, 0.5, 0.5], [0.1, 0.1, 0.1])
    assert info.value.index == 2


def test_gronwall_domain():
    with pytest.raises(DomainError):
        discrete_gronwall([1.0], [1.0, 1.0], [0.0])
    with pytest.raises(DomainError):
        discrete_gronwall([-1.0], [1.0], [0.0])


@given(st.integers(0, 2 ** 32), st.integers(1, 80), st.floats(0.01, 10))
def test_gronwall_random_instances(seed, n, scale):
    y, f, g = random_gronwall_instance(np.random.default_rng(seed), n, scale)
    b = discrete_gronwall(y, f, g)
    assert np.all(y <= b * (1 + 1e-12))
