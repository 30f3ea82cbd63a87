"""Random-design regression: simulation, empirical Fourier coefficients, and selection.

Observations are ``Y_i = f(X_i) + sigma eps_i`` with ``X_i`` drawn from a design
density ``g`` on ``[0, 1]^d`` bounded below by ``g_min``.  Coefficients are
estimated by ``theta_hat_k = mean(phi_k(X_i) Y_i / g(X_i))`` and a coordinate is
selected when some ``|theta_hat_k| > lambda`` with ``k_j != 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.feature_selection import SelectorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import lattice
from .fourier import SQRT2, SparseFourierFunction, basis_eval
from .selection import SupportLayout, GuardExceededError

MAX_REG_DSTAR = 4


@dataclass(frozen=True)
class DesignDensity:
    """Density on the unit cube with known lower and upper bounds."""

    pdf: callable
    g_min: float
    g_max: float
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.g_min <= self.g_max:
            raise ValueError("need 0 < g_min <= g_max")

    def __call__(self, X):
        return self.pdf(np.atleast_2d(X))

    def sample(self, n: int, d: int, rng) -> np.ndarray:
        """Rejection sampling from the uniform proposal."""
        if not math.isfinite(self.g_max):
            raise ValueError("rejection sampling needs a finite density upper bound")
        out = np.empty((0, d))
        while out.shape[0] < n:
            need = n - out.shape[0]
            batch = max(16, int(need * self.g_max * 1.2))
            cand = rng.random((batch, d))
            keep = rng.random(batch) * self.g_max <= self(cand)
            out = np.vstack([out, cand[keep]])
        return out[:n]


def uniform_density() -> DesignDensity:
    return DesignDensity(lambda X: np.ones(X.shape[0]), 1.0, 1.0, "uniform")


def cosine_tilt_density(c: float, coord: int = 0) -> DesignDensity:
    """``1 + c cos(2 pi x_coord)``, with ``|c| < 1``."""
    if not abs(c) < 1:
        raise ValueError("need |c| < 1")
    return DesignDensity(
        lambda X: 1.0 + c * np.cos(2.0 * np.pi * X[:, coord]),
        1.0 - abs(c),
        1.0 + abs(c),
        f"cosine_tilt({c},{coord})",
    )


def check_density(g: DesignDensity, d: int, grid: int = 16, tol: float = 1e-6) -> bool:
    """Quadrature check that ``g`` integrates to one and respects ``g_min``.

    Uses a midpoint tensor grid on the first ``min(d, 2)`` coordinates with the
    rest fixed at midpoints, so it is exact only for densities varying in at
    most two coordinates (the built-ins).
    """
    u = (np.arange(grid) + 0.5) / grid
    dims = min(d, 2)
    mesh = np.stack(np.meshgrid(*([u] * dims), indexing="ij"), axis=-1).reshape(-1, dims)
    X = np.full((mesh.shape[0], d), 0.5)
    X[:, :dims] = mesh
    vals = g(X)
    return bool(abs(vals.mean() - 1.0) <= tol and vals.min() >= g.g_min - tol)


@dataclass
class RegressionSample:
    X: np.ndarray
    Y: np.ndarray
    sigma: float

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float)
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError("X and Y lengths differ")
        if self.X.size and (self.X.min() < 0 or self.X.max() > 1):
            raise ValueError("design points must lie in the unit cube")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


def simulate_regression(
    f: SparseFourierFunction, n: int, sigma: float, g: DesignDensity | None = None, seed=None
) -> RegressionSample:
    """Draw ``n`` design points from ``g`` and Gaussian-noise responses."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    g = g or uniform_density()
    rng = np.random.default_rng(seed)
    X = g.sample(n, f.d, rng)
    eps = rng.standard_normal(n)
    return RegressionSample(X, f.evaluate(X) + sigma * eps, sigma)


def _weights(X, Y, g: DesignDensity | None) -> np.ndarray:
    if g is None:
        return np.asarray(Y, dtype=float)
    gx = g(X)
    if np.any(gx <= 0):
        raise ValueError("design density is not positive at every design point")
    return np.asarray(Y, dtype=float) / gx


def empirical_coefficient(sample: RegressionSample, g: DesignDensity | None, k) -> float:
    """``(1/n) sum phi_k(X_i) Y_i / g(X_i)``; ``g=None`` means uniform."""
    w = _weights(sample.X, sample.Y, g)
    return float(np.mean(basis_eval(k, sample.X) * w))


class _Exponentials:
    """``exp(2 pi i v x_ij)`` for ``v = 1..V``, built once per fit."""

    def __init__(self, X: np.ndarray, w: np.ndarray, vmax: int):
        self.n = X.shape[0]
        self.vmax = vmax
        base = np.exp(2j * np.pi * X)
        E = np.empty((vmax,) + X.shape, dtype=complex)
        E[0] = base
        for v in range(1, vmax):
            E[v] = E[v - 1] * base
        self.E = E  # (V, n, d)
        self.w = w

    def column(self, j, v):
        e = self.E[abs(v) - 1][:, j]
        return e if v > 0 else np.conj(e)

    def level_sums(self, supports: np.ndarray, patterns: np.ndarray) -> np.ndarray:
        """``sum_i w_i exp(2 pi i k.X_i)`` for each (support, pattern) pair."""
        t = supports.shape[1]
        if t == 1:
            S = np.einsum("i,vij->jv", self.w, self.E)  # (d, V)
            v = patterns[:, 0]
            vals = S[supports[:, 0][:, None], np.abs(v)[None, :] - 1]
            return np.where(v[None, :] > 0, vals, np.conj(vals))
        if t == 2:
            n, d = self.n, self.E.shape[2]
            V = self.vmax
            # columns ordered (v, j)
            pos = self.E.transpose(1, 0, 2).reshape(n, V * d)
            left = pos * self.w[:, None]
            G_pos = left.T @ pos  # (V*d, V*d): sum w e_a^{va} e_b^{vb}
            G_neg = left.T @ np.conj(pos)
            a, b = supports[:, 0], supports[:, 1]
            va, vb = patterns[:, 0], patterns[:, 1]
            ra = (np.abs(va) - 1)[None, :] * d + a[:, None]
            rb = (np.abs(vb) - 1)[None, :] * d + b[:, None]
            same = (np.sign(va) == np.sign(vb))[None, :]
            vals = np.where(same, G_pos[ra, rb], G_neg[ra, rb])
            # both signs negative: conjugate of the all-positive sum
            return np.where((va < 0)[None, :], np.conj(vals), vals)
        out = np.empty((supports.shape[0], patterns.shape[0]), dtype=complex)
        for r, T in enumerate(supports):
            prod = np.ones((self.n, patterns.shape[0]), dtype=complex)
            for c in range(t):
                cols = np.stack([self.column(T[c], v) for v in patterns[:, c]], axis=1)
                prod *= cols
            out[r] = self.w @ prod
        return out


def level_coefficients(ex: _Exponentials, supports, patterns) -> np.ndarray:
    """Empirical coefficients ``theta_hat`` for every (support, pattern) at one level."""
    S = ex.level_sums(supports, patterns) / ex.n
    canonical = patterns[:, 0] > 0  # supports are sorted, so the first entry decides
    return SQRT2 * np.where(canonical[None, :], S.real, S.imag)


def empirical_coefficients(sample: RegressionSample, g: DesignDensity | None, indices) -> np.ndarray:
    """Vector of :func:`empirical_coefficient` values for rows of ``indices``."""
    w = _weights(sample.X, sample.Y, g)
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    return np.array([float(np.mean(basis_eval(k, sample.X) * w)) for k in idx])


def plan_regression(n, d, dstar, vartheta, sigma, L2, g_min) -> tuple[float, float]:
    """``m = sqrt(vartheta dstar)``, ``lambda = 4 (sigma + L2) sqrt(dstar log(24 sqrt(vartheta) d / dstar) / (n g_min^2))``."""
    for name, v in (("n", n), ("d", d), ("dstar", dstar), ("vartheta", vartheta), ("g_min", g_min)):
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")
    if sigma < 0 or L2 < 0:
        raise ValueError("sigma and L2 must be nonnegative")
    m = math.sqrt(vartheta * dstar)
    lt = dstar * math.log(24.0 * math.sqrt(vartheta) * d / dstar)
    lam = 4.0 * (sigma + L2) * math.sqrt(lt / (n * g_min**2))
    return m, lam


@dataclass(frozen=True)
class Cond3Result:
    ineq1: bool
    ineq2: bool
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float

    @property
    def both(self) -> bool:
        return self.ineq1 and self.ineq2

    @property
    def margin1(self) -> float:
        return self.rhs1 / self.lhs1

    @property
    def margin2(self) -> float:
        return self.rhs2 / self.lhs2

    def to_dict(self) -> dict:
        return {
            "ineq1": self.ineq1,
            "ineq2": self.ineq2,
            "both": self.both,
            "margin1": self.margin1,
            "margin2": self.margin2,
        }


def check_cond3(n, d, dstar, vartheta, sigma, L2, Linf, g_min, kappa) -> Cond3Result:
    """Both sample-size conditions behind the ``(8d/dstar)^(-dstar)`` recovery guarantee."""
    lt = dstar * math.log(24.0 * math.sqrt(vartheta) * d / dstar)
    lhs1 = lt / n
    rhs1 = L2**2 / Linf**2
    count = lattice.count_points(dstar, vartheta, "N")
    lhs2 = 128.0 * (sigma + L2) ** 2 * count * lt / (n * g_min**2)
    return Cond3Result(lhs1 <= rhs1, lhs2 < kappa, lhs1, rhs1, lhs2, kappa)


def regression_error_bound(d: int, dstar: int) -> float:
    return (8.0 * d / dstar) ** (-dstar)


@dataclass
class RegressionSelection:
    selected: frozenset
    early_stop: bool
    levels_scanned: int
    max_abs: np.ndarray  # per coordinate, max |theta_hat_k| over scanned k with k_j != 0


def select_regression(
    sample: RegressionSample,
    g: DesignDensity | None,
    m: float,
    lam: float,
    dstar: int,
    strategy: str = "exhaustive",
    max_dstar: int = MAX_REG_DSTAR,
) -> RegressionSelection:
    """Mark ``supp(k)`` for every scanned ``k`` with ``|theta_hat_k| > lam``.

    ``"exhaustive"`` scans every ``k`` with ``||k|| <= m`` and ``1 <= ||k||_0 <= dstar``.
    ``"stepwise"`` scans by increasing ``||k||_0`` and stops as soon as
    ``dstar`` coordinates are marked.
    """
    if strategy not in ("exhaustive", "stepwise"):
        raise ValueError(f"unknown strategy {strategy!r}")
    if dstar > max_dstar:
        raise GuardExceededError(f"dstar {dstar} exceeds the enumeration guard {max_dstar}")
    d = sample.d
    bound = lattice.floor_bound(m * m)
    layout = SupportLayout.build(d, min(dstar, d), bound)
    w = _weights(sample.X, sample.Y, g)
    ex = _Exponentials(sample.X, w, max(1, math.isqrt(bound)))

    marked = np.zeros(d, dtype=bool)
    max_abs = np.zeros(d)
    early = False
    scanned = 0
    for t in range(1, layout.dstar + 1):
        sup, pat = layout.supports[t], layout.patterns[t]
        if pat.shape[0] == 0:
            break
        theta = np.abs(level_coefficients(ex, sup, pat))
        scanned = t
        per_support = theta.max(axis=1)
        for c in range(t):
            np.maximum.at(max_abs, sup[:, c], per_support)
        hits = sup[per_support > lam]
        marked[np.unique(hits)] = True
        if strategy == "stepwise" and marked.sum() >= dstar:
            early = t < layout.dstar
            break
    return RegressionSelection(frozenset(int(j) for j in np.flatnonzero(marked)), early, scanned, max_abs)


class FourierScreeningSelector(SelectorMixin, BaseEstimator):
    """Select relevant covariates by thresholding empirical Fourier coefficients.

    ``fit(X, y)`` expects design points in ``[0, 1]^d``.  Unless ``m`` and ``lam``
    are given, they follow the sample-size calibrated defaults of
    :func:`plan_regression`.  ``transform`` keeps the selected columns.

    Parameters
    ----------
    dstar : int
        Upper bound on the number of relevant covariates.
    vartheta : float
        ``2 L / kappa``.
    sigma : float
        Noise level (or an upper estimate).
    L2 : float
        Bound on the ``L^2(P_X)`` norm of the regression function.
    density : DesignDensity, optional
        Design density; uniform when omitted.
    strategy : {"exhaustive", "stepwise"}
    m, lam : float, optional
        Override the cut-off radius and threshold.
    """

    def __init__(self, dstar=1, vartheta=2.0, sigma=1.0, L2=1.0, density=None, strategy="exhaustive", m=None, lam=None):
        self.dstar = dstar
        self.vartheta = vartheta
        self.sigma = sigma
        self.L2 = L2
        self.density = density
        self.strategy = strategy
        self.m = m
        self.lam = lam

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if X.min() < 0 or X.max() > 1:
            raise ValueError("design points must lie in [0, 1]^d")
        n, d = X.shape
        g = self.density or uniform_density()
        m_def, lam_def = plan_regression(n, d, self.dstar, self.vartheta, self.sigma, self.L2, g.g_min)
        self.m_ = self.m if self.m is not None else m_def
        self.lam_ = self.lam if self.lam is not None else lam_def
        res = select_regression(RegressionSample(X, y, self.sigma), g, self.m_, self.lam_, self.dstar, self.strategy)
        self.result_ = res
        self.support_ = np.array(sorted(res.selected), dtype=int)
        self.scores_ = res.max_abs / self.lam_
        return self

    def _get_support_mask(self):
        check_is_fitted(self, "support_")
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.support_] = True
        return mask
