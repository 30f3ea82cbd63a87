import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npvarsel import lattice


def brute_count(dim, bound, nonzero_first=False):
    r = math.isqrt(bound)
    total = 0
    for k in itertools.product(range(-r, r + 1), repeat=dim):
        if sum(c * c for c in k) <= bound and not (nonzero_first and k[0] == 0):
            total += 1
    return total


def test_figure_one_count():
    assert lattice.count_points(3, sq_bound=10.24) == 110
    assert brute_count(3, 10, nonzero_first=True) == 110


def test_gamma_convention_uses_gamma_times_dim():
    # squared radius gamma * dim = 3.21 -> 3
    assert lattice.count_points(3, 1.07) == brute_count(3, 3, nonzero_first=True)


@pytest.mark.parametrize("dim", range(1, 6))
@pytest.mark.parametrize("bound", [0, 1, 2, 5, 9, 13])
def test_dp_matches_brute_force(dim, bound):
    assert lattice.count_n1(dim, bound) == brute_count(dim, bound)
    want_n2 = brute_count(dim - 1, bound) if dim > 1 else 1
    assert lattice.count_n2(dim, bound) == want_n2


def test_small_counts():
    assert lattice.count_points(1, 4, "N") == 4
    assert lattice.count_points(2, 1, "N1") == 9
    assert lattice.count_points(1, 0.5, "N") == 0


def test_n_is_difference():
    for dim in range(1, 7):
        n1 = lattice.count_points(dim, 2, "N1")
        n2 = lattice.count_points(dim, 2, "N2")
        assert lattice.count_points(dim, 2, "N") == n1 - n2


def test_boundary_rounding():
    # sqrt(8)**2 = 8.000000000000002 must count the norm-8 shell exactly once
    assert lattice.floor_bound(math.sqrt(8) ** 2) == 8
    assert lattice.floor_bound((10.24 / 3) * 3) == 10
    assert lattice.floor_bound(2.9999) == 2


def test_big_integers_do_not_overflow():
    n = lattice.count_points(60, 1)
    assert isinstance(n, int)
    assert n > 2**64
    assert lattice.log_count(60, 1) == pytest.approx(math.log(n))


def test_enumeration_is_sorted_unique_and_complete():
    q = lattice.BallCountQuery.from_gamma(3, sq_bound=6, constraint="k1-nonzero")
    pts = lattice.enumerate_ball(q)
    assert pts == sorted(set(pts))
    assert len(pts) == lattice.count_query(q)
    assert all(p[0] != 0 and lattice.norm2(p) <= 6 for p in pts)


def test_enumeration_guard():
    q = lattice.BallCountQuery.from_gamma(20, 1)
    with pytest.raises(lattice.DimensionLimitError):
        lattice.enumerate_ball(q)


def test_invalid_inputs():
    with pytest.raises(ValueError):
        lattice.count_points(0, 1)
    with pytest.raises(ValueError):
        lattice.count_points(3, -1.0)
    with pytest.raises(ValueError):
        lattice.count_points(3, 1, "N3")
    with pytest.raises(ValueError):
        lattice.squared_bound(3, gamma=1, sq_bound=3)


def test_support_constrained_matches_filter():
    d, j, m = 4, 1, math.sqrt(5)
    subset = {0, 1, 3}
    got = lattice.enumerate_support_constrained(d, j, m, subset=subset)
    r = 2
    want = sorted(
        k
        for k in itertools.product(range(-r, r + 1), repeat=d)
        if k[j] != 0 and set(lattice.support(k)) <= subset and lattice.norm2(k) <= 5
    )
    assert got == want


def test_support_constrained_max_support():
    d, j = 5, 0
    got = lattice.enumerate_support_constrained(d, j, sq_bound=4, max_support=2)
    assert all(len(lattice.support(k)) <= 2 and k[j] != 0 for k in got)
    r = 2
    want = sorted(
        k
        for k in itertools.product(range(-r, r + 1), repeat=d)
        if k[j] != 0 and len(lattice.support(k)) <= 2 and lattice.norm2(k) <= 4
    )
    assert got == want


@pytest.mark.parametrize("dim", [2, 3, 4, 5])
@pytest.mark.parametrize("gamma", [1.0, 1.5, 2.0, 4.0, 8.0])
def test_volumetric_and_packing_bounds(dim, gamma):
    lo, hi, pack = lattice.analytic_bounds(dim, gamma)
    n1 = lattice.count_points(dim, gamma, "N1")
    if gamma > 1:
        assert lo <= n1 <= hi
    assert n1 <= pack


def test_packing_bound_fails_in_dimension_one():
    # the bound is only valid from dimension two upwards
    assert lattice.count_points(1, 1, "N1") == 3
    assert lattice.packing_bound(1, 1) < 3


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(0, 12))
def test_counts_monotone_in_bound(dim, bound):
    assert lattice.count_n1(dim, bound) <= lattice.count_n1(dim, bound + 1)
    assert lattice.count_n1(dim, bound) <= lattice.count_n1(dim + 1, bound)
