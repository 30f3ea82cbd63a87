import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npvarsel import fourier, lattice


def grid_points(d, size=64):
    # the rectangle rule on a uniform grid is exact for trigonometric polynomials of low degree
    axis = (np.arange(size) + 0.5) / size
    return np.array(list(itertools.product(axis, repeat=d)))


def test_basis_orthonormal_on_grid():
    X = grid_points(2)
    ks = [k for k in itertools.product(range(-2, 3), repeat=2)]
    Phi = np.column_stack([fourier.basis_eval(k, X) for k in ks])
    gram = Phi.T @ Phi / X.shape[0]
    assert np.allclose(gram, np.eye(len(ks)), atol=1e-12)


def test_basis_single_point_and_constant():
    x = np.array([0.1, 0.3])
    assert fourier.basis_eval((0, 0), x) == 1.0
    assert fourier.basis_eval((1, 0), x) == pytest.approx(math.sqrt(2) * math.cos(2 * math.pi * 0.1))
    assert fourier.basis_eval((-1, 0), x) == pytest.approx(math.sqrt(2) * math.sin(-2 * math.pi * 0.1))


def test_parseval():
    rng = np.random.default_rng(0)
    f = fourier.random_sigma_member(2, [0, 1], kappa=0.5, L=50.0, rng=rng)
    vals = f.evaluate(grid_points(2))
    assert np.mean(vals**2) == pytest.approx(f.l2_norm_sq(), rel=1e-10)


def test_coefficients_recovered_by_quadrature():
    f = fourier.SparseFourierFunction(2, {(1, 0): 0.5, (-1, 2): -0.25, (0, 0): 1.0})
    X = grid_points(2)
    y = f.evaluate(X)
    for k, v in f.coefficients.items():
        assert np.mean(y * fourier.basis_eval(k, X)) == pytest.approx(v, abs=1e-12)


def test_zero_coefficients_dropped_and_relevance():
    f = fourier.SparseFourierFunction(4, {(1, 0, 0, 0): 0.0, (0, 2, -1, 0): 0.3})
    assert len(f) == 1
    assert f.relevant_variables == frozenset({1, 2})


def test_json_round_trip():
    f = fourier.SparseFourierFunction(3, {(1, 0, 0): 0.5, (0, -1, 2): -0.25, (0, 0, 0): 2.0})
    g = fourier.SparseFourierFunction.loads(f.dumps())
    assert dict(g.coefficients) == dict(f.coefficients)
    assert g.d == f.d


def test_json_rejects_noncanonical_key():
    bad = {"d": 2, "coefficients": [{"k": [-1, 0], "type": "cos", "value": 1.0}]}
    with pytest.raises(ValueError):
        fourier.SparseFourierFunction.from_json_dict(bad)


def test_analyze_membership():
    f = fourier.make_single_frequency_instance(5, [0, 3], 1.5)
    rep = fourier.analyze(f, kappa=2.25, L=2.25, dstar=2)
    assert rep.support == frozenset({0, 3})
    assert rep.c1_member
    assert not fourier.analyze(f, kappa=2.3, L=10, dstar=2).c1_member
    assert not fourier.analyze(f, kappa=1.0, L=2.0, dstar=2).sigma_member


def test_truncated_relevance_floor():
    rng = np.random.default_rng(3)
    kappa, L = 1.0, 6.0
    f = fourier.random_sigma_member(4, [1, 2], kappa, L, rng)
    m = 2.5
    floor = fourier.relevance_lower_bound(kappa, L, 2, m)
    for j in (1, 2):
        assert fourier.truncated_relevance(f, j, m, {1, 2}) >= floor - 1e-12


@pytest.mark.parametrize("dstar,gamma", [(2, 1), (2, 2), (3, 1)])
def test_hard_instance_relevance_is_one(dstar, gamma):
    pts = fourier.hard_instance_support(dstar, gamma)
    signs = np.where(np.arange(len(pts)) % 2 == 0, 1, -1)
    f = fourier.make_hard_instance(8, list(range(dstar)), gamma, signs)
    rep = fourier.analyze(f, kappa=0.0, L=math.inf, dstar=dstar)
    for j in range(dstar):
        assert rep.relevance[j] == pytest.approx(1.0)
    # each Sobolev sum is at most gamma * N1 / N
    budget = gamma * lattice.count_points(dstar, gamma, "N1") / lattice.count_points(dstar, gamma, "N")
    assert rep.sobolev_sums.max() <= budget + 1e-12


def test_noise_depends_only_on_seed_and_index():
    idx = np.array([[0, 1], [2, -1], [3, 3], [1, 0]])
    a = fourier.index_normals(7, idx)
    b = fourier.index_normals(7, idx[::-1])
    assert np.array_equal(a, b[::-1])
    assert np.array_equal(fourier.index_normals(7, idx[1:2]), a[1:2])
    assert not np.array_equal(fourier.index_normals(8, idx), a)


def test_noise_is_standard_normal():
    idx = np.array(list(itertools.product(range(-30, 30), repeat=2)))
    z = fourier.index_normals(1, idx)
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert z.var() == pytest.approx(1.0, abs=0.03)


def test_white_noise_unbiased():
    f = fourier.make_single_frequency_instance(3, [1], 0.7)
    idx = np.array([[0, 1, 0], [1, 0, 0]])
    ys = np.array([fourier.sample_white_noise(f, 50, idx, s).values for s in range(4000)])
    se = 1 / math.sqrt(50 * 4000)
    assert abs(ys[:, 0].mean() - 0.7) < 4 * se
    assert abs(ys[:, 1].mean()) < 4 * se
    assert ys[:, 0].var() == pytest.approx(1 / 50, rel=0.1)


def test_sample_lookup_and_round_trip():
    f = fourier.make_single_frequency_instance(2, [0], 1.0)
    idx = np.array([[1, 0], [0, 1], [1, 1]])
    s = fourier.sample_white_noise(f, 10, idx, 0)
    t = fourier.WhiteNoiseSample.from_json_dict(s.to_json_dict())
    assert np.array_equal(t.values, s.values)
    assert t[(0, 1)] == s.values[1]
    assert np.array_equal(s.values_at(idx[[2, 0]]), s.values[[2, 0]])
    with pytest.raises(fourier.MissingObservationError):
        s.values_at(np.array([[2, 0]]))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.floats(-2, 2)), min_size=1, max_size=6))
def test_json_round_trip_property(terms):
    coefs = {}
    for a, b, v in terms:
        coefs[(a, b)] = v
    f = fourier.SparseFourierFunction(2, coefs)
    g = fourier.SparseFourierFunction.loads(f.dumps())
    assert dict(g.coefficients) == dict(f.coefficients)
