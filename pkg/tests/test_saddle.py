import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npvarsel import lattice, saddle

GRID = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]


def test_theta_small_argument():
    want = 1 + 2 * (0.1 + 0.1**4 + 0.1**9 + 0.1**16)
    assert saddle.theta(0.1) == pytest.approx(want, rel=1e-15)
    assert saddle.theta(0.0) == 1.0


def test_theta_near_one_matches_poisson_summation():
    z = 0.99
    assert saddle.theta(z) == pytest.approx(math.sqrt(math.pi / -math.log(z)), rel=1e-12)


def test_theta_domain():
    with pytest.raises(ValueError):
        saddle.theta(1.0)
    with pytest.raises(ValueError):
        saddle.theta(-0.1)


def test_phi_prime_matches_finite_difference():
    for y in [0.05, 0.3, 1.0, 3.0]:
        h = 1e-6 * y
        fd = (saddle.phi(y + h) - saddle.phi(y - h)) / (2 * h)
        assert saddle.phi_prime(y) == pytest.approx(fd, rel=1e-6)


def test_phi_limits():
    assert saddle.phi(50.0) < 1e-20
    assert saddle.phi(1e-4) == pytest.approx(1 / (2 * 1e-4), rel=1e-3)


@pytest.mark.parametrize("gamma", GRID)
def test_saddle_residual_and_curvature(gamma):
    s = saddle.solve_saddle(gamma)
    assert abs(saddle.phi(s.y_gamma) - gamma) <= 1e-10
    assert s.l_second > 0
    assert 0 < s.z_gamma < 1
    assert s.l_value == pytest.approx(math.log(saddle.theta(s.z_gamma)) - gamma * math.log(s.z_gamma))


def test_saddle_monotone_on_grid():
    sols = [saddle.solve_saddle(g) for g in GRID]
    z = np.array([s.z_gamma for s in sols])
    lv = np.array([s.l_value for s in sols])
    assert np.all(np.diff(z) > 0)
    assert np.all(np.diff(lv) > 0)


def test_saddle_is_minimum_of_l():
    gamma = 2.0
    s = saddle.solve_saddle(gamma)

    def ell(z):
        return math.log(saddle.theta(z)) - gamma * math.log(z)

    for dz in [-1e-3, 1e-3]:
        assert ell(s.z_gamma + dz) > s.l_value


def test_saddle_rejects_nonpositive_gamma():
    with pytest.raises(ValueError):
        saddle.solve_saddle(0.0)


@pytest.mark.parametrize("dim", [10, 20, 40])
def test_log_count_asymptotic_close(dim):
    exact = lattice.log_count(dim, 1)
    approx = saddle.log_count_asymptotic(dim, 1)
    assert abs(approx / exact - 1) < 1e-3


def test_asymptotic_counts_n1_n2():
    for dim in [10, 40]:
        for i, which in [(1, "N1"), (2, "N2")]:
            exact = lattice.count_points(dim, 1, which)
            ratio = exact / saddle.asymptotic_count(i, dim, 1)
            assert 0.95 < ratio < 1.05


def test_gamma_bar_values():
    assert saddle.gamma_bar(1.5) is None
    assert saddle.gamma_bar(2) == 1
    assert saddle.gamma_bar(10) == 8
    with pytest.raises(ValueError):
        saddle.gamma_bar(1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.01, 60.0))
def test_gamma_bar_below_vartheta(v):
    gb = saddle.gamma_bar(v)
    if gb is not None:
        assert gb <= v
        assert saddle.hard_instance_ratio(gb) <= v
        if gb + 1 <= v:
            assert saddle.hard_instance_ratio(gb + 1) > v
