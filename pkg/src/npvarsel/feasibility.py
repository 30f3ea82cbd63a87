"""Information-theoretic lower bounds and the possible/impossible frontier.

All evaluators return raw left- and right-hand sides so that callers can
place their own (unknown) absolute constants on the frontier.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from . import lattice, saddle


def log_binomial(d: int, k: int) -> float:
    return float(gammaln(d + 1) - gammaln(k + 1) - gammaln(d - k + 1))


def fano_bound(M: int, avg_kl: float, alpha: float) -> float | None:
    """``1/2 - alpha`` when the average divergence is at most ``alpha log M``, else ``None``."""
    if M < 3:
        raise ValueError(f"Fano's bound needs M >= 3, got {M}")
    if avg_kl <= alpha * math.log(M):
        return 0.5 - alpha
    return None


def kl_bound(card_S: int, A: float, n: float) -> float:
    """``|S| A^4 n^2``: divergence of the sign-mixture from the null."""
    return card_S * A**4 * n**2


def chi_square_tail(a, x: float) -> tuple[float, float]:
    """Deviation levels of ``sum a_i (xi_i^2 - 1)`` exceeded with probability ``<= exp(-x)``.

    Returns ``(upper, lower)``: the sum exceeds ``upper`` or falls below
    ``-lower`` with probability at most ``exp(-x)`` each.
    """
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("weights must be nonnegative")
    if x < 0:
        raise ValueError("x must be nonnegative")
    norm2 = float(np.sqrt(np.sum(a * a)))
    sup = float(a.max()) if a.size else 0.0
    root = math.sqrt(x)
    return 2.0 * norm2 * root + 2.0 * sup * x, 2.0 * norm2 * root


@dataclass(frozen=True)
class RegimeQuery:
    n: float
    d: int
    dstar: int
    kappa: float
    L: float
    alpha: float = 0.25
    tau: float | None = None

    def __post_init__(self):
        if not 0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha}")
        if not 1 <= self.dstar <= self.d:
            raise ValueError("need 1 <= dstar <= d")
        if not (self.n > 0 and self.kappa > 0 and self.L > 0):
            raise ValueError("n, kappa and L must be positive")

    @property
    def vartheta(self) -> float:
        return self.L / self.kappa


@dataclass(frozen=True)
class Verdict:
    mode: str
    impossible: bool
    lhs: float
    rhs: float
    asymptotic: bool = False
    gamma_bar: int | None = None

    @property
    def margin(self) -> float:
        """``lhs / rhs``; the impossibility condition holds when this is ``>= 1``."""
        return self.lhs / self.rhs

    def to_dict(self) -> dict:
        out = asdict(self)
        out["margin"] = self.margin
        out["verdict"] = "impossible" if self.impossible else "inconclusive"
        return out


class NotApplicableError(ValueError):
    """The requested condition cannot be evaluated for this query."""


def impossibility_check(q: RegimeQuery, mode: str = "ordre4") -> Verdict:
    """Evaluate a sufficient condition for the minimax error to stay above ``1/2 - alpha``.

    ``mode="ordre3"`` compares ``N(dstar, gamma_bar) dstar log(d/dstar) / n^2``
    with ``vartheta kappa^2 / (alpha gamma_bar)`` (valid for ``dstar`` large
    enough, flagged ``asymptotic``).  ``"ordre4"`` (white noise) and ``"prop7"``
    (regression) compare ``dstar log(d/dstar) / n`` with ``kappa / alpha``.
    """
    log_ratio = q.dstar * math.log(q.d / q.dstar)
    if mode in ("ordre4", "prop7"):
        lhs = log_ratio / q.n
        rhs = q.kappa / q.alpha
        return Verdict(mode, lhs >= rhs, lhs, rhs)
    if mode == "ordre3":
        if q.vartheta <= 1:
            raise NotApplicableError(f"needs L / kappa > 1, got {q.vartheta}")
        if log_binomial(q.d, q.dstar) < math.log(3):
            raise NotApplicableError("needs binomial(d, dstar) >= 3")
        gb = saddle.gamma_bar(q.vartheta)
        if gb is None:
            raise NotApplicableError(f"no admissible integer radius for vartheta={q.vartheta}")
        count = lattice.count_points(q.dstar, gb, "N")
        lhs = count * log_ratio / q.n**2
        rhs = q.vartheta * q.kappa**2 / (q.alpha * gb)
        return Verdict(mode, lhs >= rhs, lhs, rhs, asymptotic=True, gamma_bar=gb)
    raise ValueError(f"unknown mode {mode!r}")


def is_impossible(q: RegimeQuery) -> bool:
    """True if either white-noise impossibility condition applies."""
    if impossibility_check(q, "ordre4").impossible:
        return True
    try:
        return impossibility_check(q, "ordre3").impossible
    except NotApplicableError:
        return False


@dataclass(frozen=True)
class RegimeValues:
    eq10_first: float
    eq10_second: float
    eq11: float
    eq12b: float
    eq10b_first: float
    eq10b_second: float
    gamma_bar: int | None

    def classify(self, c_lo1=0.0, c_lo1p=0.0, c_hi1=0.0, c_hi1p=0.0) -> str:
        """``possible``, ``impossible``, ``both`` or ``undetermined`` given frontier constants."""
        possible = self.eq10_first < c_lo1 and self.eq10_second <= c_lo1p
        impossible = (self.eq11 >= c_hi1) or (self.eq12b >= c_hi1p)
        if possible and impossible:
            return "both"
        if possible:
            return "possible"
        if impossible:
            return "impossible"
        return "undetermined"

    def to_dict(self) -> dict:
        return asdict(self)


def regime_map(q: RegimeQuery, tau: float | None = None) -> RegimeValues:
    """Left-hand sides of the growing-sparsity conditions.

    The query is first reduced to unit relevance (``L -> L / kappa``,
    ``n -> n kappa``).  ``eq11`` is ``nan`` when no admissible integer radius
    exists.
    """
    tau = tau if tau is not None else (q.tau if q.tau is not None else 1.0)
    if q.d / q.dstar <= math.e:
        raise ValueError("need d / dstar > e so that log log (d / dstar) is defined")
    L = q.L / q.kappa
    log_n = math.log(q.n * q.kappa)
    loglog = math.log(math.log(q.d / q.dstar))
    half_log_ds = 0.5 * math.log(q.dstar)
    l_plus = saddle.solve_saddle(L + tau).l_value
    gb = saddle.gamma_bar(L) if L > 1 else None
    eq11 = (
        saddle.solve_saddle(gb).l_value * q.dstar + half_log_ds + loglog - 2 * log_n if gb is not None else math.nan
    )
    second = math.log(q.dstar) + loglog - log_n
    return RegimeValues(
        eq10_first=l_plus * q.dstar + half_log_ds + loglog - 2 * log_n,
        eq10_second=second,
        eq11=eq11,
        eq12b=second,
        eq10b_first=l_plus * q.dstar + half_log_ds + loglog - log_n,
        eq10b_second=math.log(q.dstar) + math.log(math.log(q.d)) - log_n,
        gamma_bar=gb,
    )
