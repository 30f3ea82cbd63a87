import math

import numpy as np
import pytest
from sklearn.base import clone

from npvarsel import fourier, lattice, regression, selection


@pytest.mark.parametrize("density", [None, regression.cosine_tilt_density(0.4, coord=1)])
def test_fast_coefficients_match_direct(density):
    f = fourier.SparseFourierFunction(5, {(1, 0, 0, 0, 0): 0.8, (0, 1, -1, 0, 0): 0.5, (0, 0, 1, 1, 1): 0.3})
    s = regression.simulate_regression(f, 500, 0.5, density, seed=1)
    bound = 5
    layout = selection.SupportLayout.build(5, 3, bound)
    ex = regression._Exponentials(s.X, regression._weights(s.X, s.Y, density), math.isqrt(bound))
    direct = regression.empirical_coefficients(s, density, layout.indices())
    fast = np.concatenate(
        [regression.level_coefficients(ex, layout.supports[t], layout.patterns[t]).ravel() for t in (1, 2, 3)]
    )
    assert np.allclose(fast, direct, atol=1e-13)


def test_empirical_coefficient_unbiased():
    f = fourier.SparseFourierFunction(3, {(1, 0, 0): 0.7, (0, 1, -2): -0.4})
    g = regression.cosine_tilt_density(0.5)
    ks = [(1, 0, 0), (0, 1, -2), (0, 1, 0)]
    est = np.array(
        [[regression.empirical_coefficient(regression.simulate_regression(f, 200, 1.0, g, s), g, k) for k in ks]
         for s in range(800)]
    )  # fmt: skip
    se = est.std(axis=0) / math.sqrt(est.shape[0])
    for i, k in enumerate(ks):
        assert abs(est[:, i].mean() - f.coefficient(k)) < 4 * se[i]


def test_density_validation():
    g = regression.cosine_tilt_density(0.3)
    assert regression.check_density(g, 2)
    rng = np.random.default_rng(0)
    X = g.sample(20000, 2, rng)
    assert X.min() >= 0 and X.max() <= 1
    # first moment of the tilted marginal
    assert X[:, 0].mean() == pytest.approx(0.5, abs=0.01)
    assert np.mean(np.cos(2 * np.pi * X[:, 0])) == pytest.approx(0.3 / 2, abs=0.01)
    with pytest.raises(ValueError):
        regression.cosine_tilt_density(1.5)


def test_plan_regression_formula():
    m, lam = regression.plan_regression(30836, 30, 2, 2.0, 1.0, 2.0, 1.0)
    assert m == pytest.approx(2.0)
    want = 4 * 3.0 * math.sqrt(2 * math.log(24 * math.sqrt(2) * 30 / 2) / 30836)
    assert lam == pytest.approx(want)


def test_cond3_monotone_in_n():
    args = dict(d=30, dstar=2, vartheta=2.0, sigma=1.0, L2=2.0, Linf=2 * math.sqrt(2), g_min=1.0, kappa=4.0)
    small = regression.check_cond3(n=1000, **args)
    large = regression.check_cond3(n=40000, **args)
    assert not small.both
    assert large.both
    assert large.margin2 > small.margin2


def test_selection_strategies_agree():
    f = fourier.make_pair_frequency_instance(10, (3, 7), 2.0)
    s = regression.simulate_regression(f, 8000, 1.0, None, seed=4)
    ex = regression.select_regression(s, None, 2.0, 0.5, 2, "exhaustive")
    st = regression.select_regression(s, None, 2.0, 0.5, 2, "stepwise")
    assert ex.selected == st.selected == {3, 7}
    assert not st.early_stop


def test_stepwise_stops_early_when_first_level_suffices():
    f = fourier.make_single_frequency_instance(10, [1, 2], 2.0)
    s = regression.simulate_regression(f, 8000, 1.0, None, seed=0)
    st = regression.select_regression(s, None, 2.0, 0.5, 2, "stepwise")
    assert st.selected == {1, 2}
    assert st.early_stop and st.levels_scanned == 1


def test_estimator_api_and_transform():
    f = fourier.make_single_frequency_instance(6, [0, 4], 1.5)
    s = regression.simulate_regression(f, 3000, 0.5, None, seed=2)
    est = regression.FourierScreeningSelector(dstar=2, vartheta=2.0, sigma=0.5, L2=1.5 * math.sqrt(2))
    assert clone(est).get_params() == est.get_params()
    est.fit(s.X, s.Y)
    assert est.get_support(indices=True).tolist() == [0, 4]
    assert est.transform(s.X).shape == (3000, 2)
    with pytest.raises(ValueError):
        est.fit(s.X + 2.0, s.Y)


def test_error_bound():
    assert regression.regression_error_bound(30, 2) == pytest.approx(120.0**-2)


def test_guard():
    s = regression.RegressionSample(np.full((10, 6), 0.5), np.zeros(10), 1.0)
    with pytest.raises(selection.GuardExceededError):
        regression.select_regression(s, None, 2.0, 0.1, 5)


def test_lattice_patterns_used_by_regression():
    # level sums only touch all-nonzero patterns
    pats = lattice.nonzero_patterns(2, 5)
    assert all(0 not in p for p in pats)
    # (+-1, +-1) and the eight sign/order variants of (1, 2)
    assert len(pats) == 12
