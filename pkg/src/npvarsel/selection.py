"""Variable selection from Gaussian white-noise Fourier observations.

The statistic for coordinate ``j`` and a candidate set ``I`` is

    Q_hat(j, m, I) = sum_{k : ||k|| <= m, j in supp(k) <= I} (y_k^2 - 1/n),

and ``j`` is declared relevant when ``Q_hat(j, m_l, I) >= lambda_l`` for some
``l <= dstar`` and some ``|I| = l``.  Sums over ``I`` are assembled from block
sums ``B_T`` over multi-indices whose support is exactly ``T``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import comb
from sklearn.base import BaseEstimator

from . import lattice
from .fourier import SparseFourierFunction, WhiteNoiseSample, sample_white_noise

MAX_FULL_DIM = 25
MAX_FULL_DSTAR = 4


class GuardExceededError(ValueError):
    """The exhaustive search over candidate sets would be too large."""


def log_term(d: int, dstar: int) -> float:
    return math.log(2.0 * math.e * d / dstar)


def lambda_value(n: int, d: int, dstar: int, A: float, count: int) -> float:
    """``(2 sqrt(A N dstar log(2ed/dstar)) + 2 A dstar log(2ed/dstar)) / n``."""
    lt = dstar * log_term(d, dstar)
    return (2.0 * math.sqrt(A * count * lt) + 2.0 * A * lt) / n


@dataclass(frozen=True)
class ThresholdPlan:
    n: int
    d: int
    dstar: int
    A: float
    vartheta: float
    m: tuple
    lam: tuple
    counts: tuple  # N(l, vartheta), l = 1..dstar

    @property
    def sq_bounds(self) -> tuple:
        """Integer squared cut-offs ``floor(l * vartheta)``."""
        return tuple(lattice.floor_bound(ell * self.vartheta) for ell in range(1, self.dstar + 1))

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "dstar": self.dstar,
            "A": self.A,
            "vartheta": self.vartheta,
            "m": list(self.m),
            "lambda": list(self.lam),
            "N": [str(c) for c in self.counts],
        }


def plan_thresholds(n: int, d: int, dstar: int, A: float = 2.0, vartheta: float = 2.0) -> ThresholdPlan:
    """Cut-offs ``m_l = sqrt(l vartheta)`` and Bonferroni thresholds ``lambda_l``."""
    if not 1 <= dstar <= d:
        raise ValueError(f"need 1 <= dstar <= d, got dstar={dstar}, d={d}")
    if not A > 1:
        raise ValueError(f"A must exceed 1, got {A}")
    if not vartheta > 0:
        raise ValueError(f"vartheta must be positive, got {vartheta}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    counts = tuple(lattice.count_points(ell, vartheta, "N") for ell in range(1, dstar + 1))
    lam = tuple(lambda_value(n, d, dstar, A, c) for c in counts)
    m = tuple(math.sqrt(ell * vartheta) for ell in range(1, dstar + 1))
    return ThresholdPlan(n, d, dstar, float(A), float(vartheta), m, lam, counts)


# --------------------------------------------------------------------------
# index layout grouped by exact support
# --------------------------------------------------------------------------


def colex_rank(combos: np.ndarray) -> np.ndarray:
    """Rank of each sorted row among same-size subsets in colexicographic order."""
    combos = np.atleast_2d(combos)
    t = combos.shape[1]
    r = np.zeros(combos.shape[0], dtype=np.int64)
    for i in range(t):
        r += comb(combos[:, i], i + 1, exact=False).round().astype(np.int64)
    return r


@lru_cache(maxsize=64)
def _colex_supports(d: int, t: int) -> np.ndarray:
    sup = np.array(list(itertools.combinations(range(d), t)), dtype=np.int64).reshape(-1, t)
    out = np.empty_like(sup)
    out[colex_rank(sup)] = sup
    return out


@dataclass(frozen=True)
class SupportLayout:
    """All ``k`` with ``1 <= ||k||_0 <= dstar`` and ``||k||^2 <= bound``, blocked by support.

    Level ``t`` holds ``supports[t]`` (rows ordered by colex rank) times
    ``patterns[t]`` (all-nonzero vectors); the flattened order is level, then
    support, then pattern.
    """

    d: int
    dstar: int
    bound: int
    supports: dict = field(repr=False)
    patterns: dict = field(repr=False)
    pattern_norms: dict = field(repr=False)

    @classmethod
    def build(cls, d: int, dstar: int, bound: int) -> "SupportLayout":
        sup, pat, nrm = {}, {}, {}
        for t in range(1, dstar + 1):
            p = np.array(lattice.nonzero_patterns(t, bound), dtype=np.int64).reshape(-1, t)
            sup[t] = _colex_supports(d, t)
            pat[t] = p
            nrm[t] = (p * p).sum(axis=1)
        return cls(d, dstar, bound, sup, pat, nrm)

    def level_size(self, t: int) -> int:
        return self.supports[t].shape[0] * self.patterns[t].shape[0]

    def level_indices(self, t: int) -> np.ndarray:
        sup, pat = self.supports[t], self.patterns[t]
        ns, npat = sup.shape[0], pat.shape[0]
        out = np.zeros((ns * npat, self.d), dtype=np.int64)
        rows = np.arange(ns * npat)
        for c in range(t):
            out[rows, np.repeat(sup[:, c], npat)] = np.tile(pat[:, c], ns)
        return out

    def indices(self) -> np.ndarray:
        blocks = [self.level_indices(t) for t in range(1, self.dstar + 1)]
        blocks = [b for b in blocks if b.size]
        if not blocks:
            return np.zeros((0, self.d), dtype=np.int64)
        return np.vstack(blocks)

    def split(self, values: np.ndarray) -> dict:
        """Reshape flat per-index values into ``{t: (n_supports, n_patterns)}`` arrays."""
        out, start = {}, 0
        for t in range(1, self.dstar + 1):
            ns, npat = self.supports[t].shape[0], self.patterns[t].shape[0]
            out[t] = values[start : start + ns * npat].reshape(ns, npat)
            start += ns * npat
        return out


def observation_layout(plan: ThresholdPlan) -> SupportLayout:
    """Every coefficient any statistic of ``plan`` can touch."""
    return SupportLayout.build(plan.d, plan.dstar, plan.sq_bounds[-1])


def observation_index_set(plan: ThresholdPlan) -> np.ndarray:
    return observation_layout(plan).indices()


def simulate_for_plan(f: SparseFourierFunction, plan: ThresholdPlan, seed: int) -> WhiteNoiseSample:
    return sample_white_noise(f, plan.n, observation_index_set(plan), seed)


# --------------------------------------------------------------------------
# statistics
# --------------------------------------------------------------------------


def q_hat(sample: WhiteNoiseSample, j: int, m: float, subset) -> float:
    """Unbiased estimate of the energy on ``{||k|| <= m, j in supp(k) <= subset}``."""
    pts = lattice.enumerate_support_constrained(sample.d, j, m, subset=subset)
    y = sample.values_at(np.array(pts, dtype=np.int64).reshape(len(pts), sample.d))
    return float(np.sum(y * y - 1.0 / sample.n))


def block_sums(layout: SupportLayout, centred: dict, bound: int) -> dict:
    """``B_T`` for every support ``T`` of each level: sums of ``y^2 - 1/n`` with ``||k||^2 <= bound``."""
    return {
        t: centred[t] @ (layout.pattern_norms[t] <= bound).astype(float)
        for t in centred
    }


def subset_statistics(d: int, ell: int, B: dict) -> tuple[np.ndarray, np.ndarray]:
    """``Q_hat`` for every ``|I| = ell`` and every ``j in I``.

    Returns ``(I_rows, Q)`` with ``Q[r, p]`` the statistic of coordinate
    ``I_rows[r, p]`` on ``I_rows[r]``.
    """
    I_rows = np.array(list(itertools.combinations(range(d), ell)), dtype=np.int64).reshape(-1, ell)
    Q = np.zeros(I_rows.shape, dtype=float)
    positions = range(ell)
    for size in range(1, ell + 1):
        blocks = B.get(size)
        if blocks is None:
            continue
        for M in itertools.combinations(positions, size):
            vals = blocks[colex_rank(I_rows[:, M])]
            for p in M:
                Q[:, p] += vals
    return I_rows, Q


@dataclass
class SelectionResult:
    selected: frozenset
    statistics: np.ndarray  # per variable: max_l lambda_l^-1 max_I Q_hat
    witnesses: dict  # j -> (ell, I) attaining the max

    def to_dict(self) -> dict:
        return {
            "selected": sorted(int(j) for j in self.selected),
            "statistics": [float(s) for s in self.statistics],
            "witnesses": {
                str(j): {"ell": int(ell), "I": [int(i) for i in I]}
                for j, (ell, I) in sorted(self.witnesses.items())
            },
        }


def _check_guard(d: int, levels, max_dim: int, max_dstar: int):
    if d > max_dim or max(levels) > max_dstar:
        raise GuardExceededError(
            f"exhaustive search over subsets needs d <= {max_dim} and dstar <= {max_dstar} "
            f"(got d={d}, levels up to {max(levels)})"
        )


def select(
    sample: WhiteNoiseSample,
    plan: ThresholdPlan,
    variant: str = "full",
    max_dim: int = MAX_FULL_DIM,
    max_dstar: int = MAX_FULL_DSTAR,
) -> SelectionResult:
    """Thresholded subset statistics; ``variant="simple"`` uses only ``l = dstar``.

    A coordinate is selected when its normalised statistic is ``>= 1``.  The
    maximum runs over sets ``I`` containing ``j``; other sets give an empty sum.
    """
    if variant not in ("full", "simple"):
        raise ValueError(f"variant must be 'full' or 'simple', got {variant!r}")
    if sample.d != plan.d:
        raise ValueError(f"sample dimension {sample.d} differs from plan dimension {plan.d}")
    levels = list(range(1, plan.dstar + 1)) if variant == "full" else [plan.dstar]
    _check_guard(plan.d, levels, max_dim, max_dstar)

    layout = observation_layout(plan)
    y = sample.values_at(layout.indices())
    centred = layout.split(y * y - 1.0 / sample.n)

    d = plan.d
    best = np.full(d, -np.inf)
    witnesses = {}
    for ell in levels:
        bound = plan.sq_bounds[ell - 1]
        B = block_sums(layout, {t: centred[t] for t in range(1, ell + 1)}, bound)
        I_rows, Q = subset_statistics(d, ell, B)
        scores = (Q / plan.lam[ell - 1]).ravel()
        js = I_rows.ravel()
        order = np.lexsort((-scores, js))
        first = np.ones(order.size, dtype=bool)
        first[1:] = js[order][1:] != js[order][:-1]
        for pos in order[first]:
            j = int(js[pos])
            if scores[pos] > best[j]:
                best[j] = scores[pos]
                witnesses[j] = (ell, tuple(int(i) for i in I_rows[pos // ell]))
    selected = frozenset(int(j) for j in np.flatnonzero(best >= 1.0))
    return SelectionResult(selected, best, {j: w for j, w in witnesses.items() if j in selected})


def adaptive_lambda_plan(n: int, d: int, dstar: int, vartheta: float) -> ThresholdPlan:
    """Plan with ``A = 2``: ``(2 sqrt(2 N dstar log) + 4 dstar log) / n``."""
    return plan_thresholds(n, d, dstar, 2.0, vartheta)


def select_adaptive(sample: WhiteNoiseSample, grid, dstar: int, **kw) -> SelectionResult:
    """Union of the ``A = 2`` selections over a grid of ``vartheta`` values."""
    grid = sorted(float(v) for v in grid)
    if not grid:
        raise ValueError("vartheta grid is empty")
    if any(v <= 1 for v in grid):
        raise ValueError("grid values must exceed 1")
    selected = set()
    stats = np.full(sample.d, -np.inf)
    witnesses = {}
    for v in grid:
        res = select(sample, adaptive_lambda_plan(sample.n, sample.d, dstar, v), "full", **kw)
        selected |= res.selected
        for j, w in res.witnesses.items():
            if res.statistics[j] > stats[j]:
                witnesses[j] = w
        stats = np.maximum(stats, res.statistics)
    return SelectionResult(frozenset(selected), stats, witnesses)


# --------------------------------------------------------------------------
# estimators
# --------------------------------------------------------------------------


class WhiteNoiseSelector(BaseEstimator):
    """Sparsity-pattern estimator for white-noise observations.

    Parameters
    ----------
    dstar : int
        Known upper bound on the number of relevant variables.
    vartheta : float
        Smoothness-to-relevance ratio ``L (1 + tau) / kappa`` fixing the cut-offs.
    A : float
        Bonferroni inflation, ``> 1``; the type I error is at most
        ``(2 e d / dstar)^(-dstar (A - 1))``.
    variant : {"full", "simple"}
        ``"simple"`` thresholds only the ``|I| = dstar`` statistics.

    Attributes
    ----------
    plan_ : ThresholdPlan
    support_ : ndarray of int
        Selected coordinates, sorted.
    scores_ : ndarray of float
        Normalised statistic per coordinate (selected iff ``>= 1``).
    """

    def __init__(self, dstar=1, vartheta=2.0, A=2.0, variant="full"):
        self.dstar = dstar
        self.vartheta = vartheta
        self.A = A
        self.variant = variant

    def fit(self, sample: WhiteNoiseSample, y=None):
        self.plan_ = plan_thresholds(sample.n, sample.d, self.dstar, self.A, self.vartheta)
        self.result_ = select(sample, self.plan_, self.variant)
        self._finish(sample.d)
        return self

    def _finish(self, d):
        self.n_features_in_ = d
        self.support_ = np.array(sorted(self.result_.selected), dtype=int)
        self.scores_ = self.result_.statistics

    def get_support(self, indices=False):
        if indices:
            return self.support_
        mask = np.zeros(self.n_features_in_, dtype=bool)
        mask[self.support_] = True
        return mask


class AdaptiveWhiteNoiseSelector(WhiteNoiseSelector):
    """Union of :class:`WhiteNoiseSelector` fits (``A = 2``) over a ``vartheta`` grid."""

    def __init__(self, dstar=1, grid=(2.0,)):
        self.dstar = dstar
        self.grid = grid

    def fit(self, sample: WhiteNoiseSample, y=None):
        self.result_ = select_adaptive(sample, self.grid, self.dstar)
        self._finish(sample.d)
        return self


# --------------------------------------------------------------------------
# conditions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionCheck:
    holds: bool
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        """Ratio of the available relevance to the required one (``>= 1`` when it holds)."""
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


def qq1_threshold(plan: ThresholdPlan, s: int, alpha: float) -> float:
    """Truncated relevance guaranteeing ``P(J not in J_hat) <= alpha``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    n = plan.n
    ls = math.log(2.0 * s / alpha)
    count = plan.counts[s - 1]
    first = math.sqrt(plan.lam[s - 1] + (2.0 * math.sqrt(count * ls) + 1.0) / n)
    return (first + math.sqrt(2.0 * ls / n)) ** 2


def consistency_check(
    kappa: float, L: float, tau: float, plan: ThresholdPlan, s: int, mode: str = "ordre2", alpha: float | None = None
) -> ConditionCheck:
    """Compare the guaranteed truncated relevance ``kappa tau / (1 + tau)`` with what recovery needs.

    ``mode="ordre2"`` requires ``4 lambda_s``; ``mode="qq1"`` uses the sharper
    requirement at level ``alpha`` (default ``2 (2ed/dstar)^(-(A-1) dstar)``).
    ``L`` is accepted for symmetry with the class parameters; it enters only
    through ``plan.vartheta``.
    """
    if not 1 <= s <= plan.dstar:
        raise ValueError(f"s must lie in 1..{plan.dstar}")
    lhs = kappa * tau / (1.0 + tau)
    if mode == "ordre2":
        rhs = 4.0 * plan.lam[s - 1]
    elif mode == "qq1":
        if alpha is None:
            alpha = default_type2_level(plan)
        rhs = qq1_threshold(plan, s, alpha)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ConditionCheck(lhs >= rhs, lhs, rhs)


def default_type2_level(plan: ThresholdPlan) -> float:
    return 2.0 * (2.0 * math.e * plan.d / plan.dstar) ** (-(plan.A - 1.0) * plan.dstar)


def type1_bound(d: int, dstar: int, A: float) -> float:
    return (2.0 * math.e * d / dstar) ** (-dstar * (A - 1.0))


def consistency_error_bound(d: int, dstar: int, A: float) -> float:
    return 3.0 * type1_bound(d, dstar, A)


def adaptive_error_bound(d: int, dstar: int, K: int) -> float:
    return (K + 2) * (dstar / (2.0 * math.e * d)) ** dstar


def separation_rate(n: float, d: int, s: int) -> float:
    """``max((log(d/s) / n^2)^(2/(4+s)), s log(d/s) / n)``."""
    if not 1 <= s < d:
        raise ValueError(f"need 1 <= s < d, got s={s}, d={d}")
    ld = math.log(d / s)
    return max((ld / n**2) ** (2.0 / (4.0 + s)), s * ld / n)
