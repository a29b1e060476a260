import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from tv_euler import (ClosedFormDensity, DensityGrid, DomainError, bang_bang_density,
                      bang_bang_gaussian_start, density_to_grid, verify_chapman_kolmogorov)

thetas = st.floats(0.05, 20)
times = st.floats(0.05, 10)
points = st.floats(-8, 8)


def test_small_theta_gives_heat_kernel():
    z = np.linspace(-4, 5, 41)
    np.testing.assert_allclose(bang_bang_density(1e-10, 1.3, 0.5, z),
                               stats.norm.pdf(z, 0.5, np.sqrt(1.3)), rtol=1e-8, atol=1e-15)
    np.testing.assert_allclose(bang_bang_density(0.0, 1.3, -0.5, z),
                               stats.norm.pdf(z, -0.5, np.sqrt(1.3)), rtol=1e-12)


def test_long_time_limit_at_origin():
    assert bang_bang_density(1.0, 400.0, 0.0, 0.0) == pytest.approx(1.0, abs=1e-3)


def test_normalisation_theta_one():
    assert ClosedFormDensity.bang_bang(1.0, 1.0, 0.0).total_mass() == pytest.approx(1, abs=1e-8)


@pytest.mark.parametrize("theta,t,x", [(0.3, 2.0, -1.0), (5.0, 0.2, 3.0), (20.0, 1.0, 0.0),
                                       (50.0, 1.0, 30.0)])
def test_normalisation_varied(theta, t, x):
    assert ClosedFormDensity.bang_bang(theta, t, x).total_mass() == pytest.approx(1, abs=1e-8)


def test_domain_errors():
    with pytest.raises(DomainError):
        bang_bang_density(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(DomainError):
        ClosedFormDensity.gaussian(0, -1)


def test_no_overflow_far_from_origin():
    v = bang_bang_density(40.0, 1.0, 30.0, np.array([-20.0, 0.0, 10.0, 30.0]))
    assert np.all(np.isfinite(v)) and np.all(v >= 0)


@given(theta=thetas, t=times, x=points)
def test_branch_continuity_at_zero(theta, t, x):
    left = bang_bang_density(theta, t, x, -1e-300)
    at = bang_bang_density(theta, t, x, 0.0)
    right = bang_bang_density(theta, t, x, 1e-300)
    assert abs(right - at) <= 1e-12 * max(1.0, at)
    assert abs(left - at) <= 1e-12 * max(1.0, at)


@given(theta=thetas, t=times, x=points, z=points)
def test_symmetry(theta, t, x, z):
    assert bang_bang_density(theta, t, x, z) == bang_bang_density(theta, t, -x, -z)


@given(theta=thetas, t=times, x=points)
def test_nonnegative(theta, t, x):
    z = np.linspace(-30, 30, 301)
    assert np.all(bang_bang_density(theta, t, x, z) >= 0)


def test_symmetry_branch_cross_check():
    # x < 0 is evaluated by reflection; compare against the direct z <= 0 formula
    theta, t, x, z = 1.3, 0.7, 0.4, -0.9
    st_ = np.sqrt(t)
    direct = (np.exp(2 * theta * x - (x - z + theta * t) ** 2 / (2 * t)) / np.sqrt(2 * np.pi * t)
              + theta * np.exp(2 * theta * z) * stats.norm.sf((x - z - theta * t) / st_))
    assert bang_bang_density(theta, t, x, z) == pytest.approx(direct, rel=1e-13)
    assert bang_bang_density(theta, t, -x, -z) == pytest.approx(direct, rel=1e-13)


def test_chapman_kolmogorov_examples():
    assert verify_chapman_kolmogorov(1e-12, 0.4, 0.6, 0.2, 0.5) < 1e-9
    assert verify_chapman_kolmogorov(1.0, 0.5, 0.5, 0.0, 0.3) < 1e-6
    assert verify_chapman_kolmogorov(1.0, 0.25, 0.75, 1.0, -1.0) < 1e-6


def test_chapman_kolmogorov_randomised():
    rng = np.random.default_rng(5)
    for _ in range(10):
        theta, s, t = rng.uniform(0.1, 5), rng.uniform(0.05, 2), rng.uniform(0.05, 2)
        x, z = rng.uniform(-2, 2, 2)
        assert verify_chapman_kolmogorov(theta, s, t, x, z) < 1e-6


def test_laplace_distance_decreases_in_time():
    z = np.linspace(-10, 10, 4001)
    lap = ClosedFormDensity.laplace(5.0).pdf(z)
    sups = [np.max(np.abs(bang_bang_density(5.0, t, 0.0, z) - lap)) for t in (0.25, 0.5, 1.0)]
    assert sups[0] > sups[1] > sups[2]
    l1 = integrate.quad(lambda y: abs(bang_bang_density(5.0, 1.0, 0.0, y)
                                      - 5 * np.exp(-10 * abs(y))), -10, 10, points=[0],
                        limit=400)[0]
    assert l1 < 1e-3


def test_grid_examples():
    g = density_to_grid(ClosedFormDensity.gaussian(0, 1), -8, 8, 4096)
    assert g.mass() == pytest.approx(1, abs=1e-9)
    g = density_to_grid(ClosedFormDensity.bang_bang(1, 1, 0), -8, 8)
    assert g.mass() == pytest.approx(1, abs=1e-6)
    lap = ClosedFormDensity.laplace(1.0)
    assert 1 - lap.tail_mass(-12, 12) == pytest.approx(1, abs=1e-8)
    # the kink costs about dx^2 / 3 in trapezoid mass
    g = density_to_grid(lap, -12, 12, 2 ** 18)
    assert g.mass() == pytest.approx(1, abs=1e-8)


def test_grid_coverage_error_names_extent():
    with pytest.raises(DomainError, match="at least"):
        density_to_grid(ClosedFormDensity.gaussian(0, 1), -2, 2)


def test_grid_csv_roundtrip(tmp_path):
    g = density_to_grid(ClosedFormDensity.bang_bang(2, 0.5, 1.0))
    g.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().startswith("z,p\n")
    back = DensityGrid.from_csv(tmp_path / "g.csv")
    assert np.array_equal(back.values, g.values)
    assert back.x_min == g.x_min and back.x_max == g.x_max


def test_gaussian_start_against_quadrature():
    theta, t, m, s = 1.0, 1.0, 0.3, 0.2
    z = np.array([-1.5, -0.2, 0.0, 0.4, 2.0])
    got = bang_bang_gaussian_start(theta, t, m, s, z)
    for zi, gi in zip(z, got):
        ref = integrate.quad(lambda y: stats.norm.pdf(y, m, s) * bang_bang_density(theta, t, y, zi),
                             m - 12 * s, m + 12 * s, points=[0.0], limit=200,
                             epsabs=1e-13)[0]
        assert gi == pytest.approx(ref, rel=1e-9, abs=1e-13)
