"""Jacobi theta series and the saddle point of ``log h(z) - gamma log z``.

``h(z) = sum_{r in Z} z^{r^2}``.  Substituting ``z = exp(-y)`` turns the saddle
equation into ``phi(y) = gamma`` where ``phi(y)`` is the mean of ``k^2`` under
the weights ``exp(-y k^2)``; ``phi`` decreases strictly from ``+inf`` to ``0``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

SERIES_CAP = 10**6

DEFAULT_TOL = 1e-12


class SaddleConvergenceError(RuntimeError):
    pass


@lru_cache(maxsize=4096)
def _gaussian_moments(y: float, tol: float) -> tuple[float, float, float]:
    """``(S0, S2, S4)`` with ``Sp = sum_{k in Z} k^p exp(-y k^2)``.

    Terms are added until a geometric bound on each remaining tail is below
    ``tol / 2`` times the running sum.
    """
    s0, s2, s4 = 1.0, 0.0, 0.0
    for r in range(1, SERIES_CAP + 1):
        x = 2.0 * math.exp(-y * r * r)
        r2 = float(r * r)
        s0 += x
        s2 += x * r2
        s4 += x * r2 * r2
        if x == 0.0:
            return s0, s2, s4
        decay = math.exp(-y * (2 * r + 1))
        step = 1.0 + 1.0 / r
        done = True
        for term, total, p in ((x, s0, 0), (x * r2, s2, 2), (x * r2 * r2, s4, 4)):
            q = step**p * decay
            if q >= 1.0 or term * q / (1.0 - q) > 0.5 * tol * total:
                done = False
                break
        if done:
            return s0, s2, s4
    raise SaddleConvergenceError(f"theta series did not converge within {SERIES_CAP} terms (y={y})")


def theta(z: float, tol: float = DEFAULT_TOL) -> float:
    """``h(z) = 1 + 2 sum_{r >= 1} z^{r^2}`` for ``0 <= z < 1``, relative error <= ``tol``."""
    if not 0.0 <= z < 1.0:
        raise ValueError(f"theta needs 0 <= z < 1, got {z}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if z == 0.0:
        return 1.0
    return _gaussian_moments(-math.log(z), tol)[0]


def phi(y: float, tol: float = DEFAULT_TOL) -> float:
    """``z h'(z) / h(z)`` at ``z = exp(-y)``."""
    if not y > 0:
        raise ValueError(f"phi needs y > 0, got {y}")
    s0, s2, _ = _gaussian_moments(y, tol)
    return s2 / s0


def phi_prime(y: float, tol: float = DEFAULT_TOL) -> float:
    """Derivative of :func:`phi`: minus the variance of ``k^2`` under ``exp(-y k^2)``."""
    if not y > 0:
        raise ValueError(f"phi_prime needs y > 0, got {y}")
    s0, s2, s4 = _gaussian_moments(y, tol)
    mean = s2 / s0
    return -(s4 / s0 - mean * mean)


@dataclass(frozen=True)
class SaddleData:
    gamma: float
    y_gamma: float
    z_gamma: float
    h_value: float
    l_value: float
    l_second: float
    c_gamma: float
    residual: float

    def to_dict(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=1024)
def solve_saddle(gamma: float, tol: float = 1e-12, max_iter: int = 400) -> SaddleData:
    """Solve ``phi(y) = gamma`` and return the saddle-point quantities.

    The root is bracketed (upper end doubled from 50 until ``phi < gamma``),
    bisected in ``log y`` and polished by safeguarded Newton steps until
    ``|phi(y) - gamma| <= tol``.
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    series_tol = min(1e-15, tol * 1e-3)

    def f(y):
        return phi(y, series_tol) - gamma

    lo, hi = 1e-8, 50.0
    while f(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise SaddleConvergenceError(f"could not bracket root for gamma={gamma}")
    if f(lo) < 0:
        raise SaddleConvergenceError(f"gamma={gamma} too large for the default bracket")

    y = math.sqrt(lo * hi)
    for _ in range(max_iter):
        y = math.sqrt(lo * hi)
        fy = f(y)
        if fy > 0:
            lo = y
        else:
            hi = y
        if abs(fy) < 1e-3 * max(1.0, gamma) or hi / lo < 1 + 1e-12:
            break

    for _ in range(max_iter):
        fy = f(y)
        if abs(fy) <= tol:
            break
        if fy > 0:
            lo = y
        else:
            hi = y
        step = fy / phi_prime(y, series_tol)
        nxt = y - step
        if not lo < nxt < hi:
            nxt = math.sqrt(lo * hi)
        if nxt == y:
            break
        y = nxt
    residual = abs(f(y))
    if residual > tol:
        raise SaddleConvergenceError(f"saddle solve for gamma={gamma} stalled at residual {residual:.3e}")

    s0, s2, s4 = _gaussian_moments(y, series_tol)
    z = math.exp(-y)
    variance = s4 / s0 - (s2 / s0) ** 2
    l_second = variance / (z * z)
    l_value = math.log(s0) + gamma * y
    c_gamma = math.log((s0 - 1.0) / (s0 * z * (1.0 - z) * math.sqrt(2.0 * math.pi * l_second)))
    return SaddleData(
        gamma=float(gamma),
        y_gamma=y,
        z_gamma=z,
        h_value=s0,
        l_value=l_value,
        l_second=l_second,
        c_gamma=c_gamma,
        residual=residual,
    )


def log_asymptotic_count(i: int, dim: int, gamma: float, saddle: SaddleData | None = None) -> float:
    """Log of the saddle-point approximation of ``N1`` (``i=1``) or ``N2`` (``i=2``)."""
    if i not in (1, 2):
        raise ValueError(f"i must be 1 or 2, got {i}")
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    s = saddle if saddle is not None else solve_saddle(gamma)
    z = s.z_gamma
    return (
        dim * s.l_value
        - (i - 1) * math.log(s.h_value)
        - math.log(z * (1.0 - z))
        - 0.5 * math.log(2.0 * s.l_second * math.pi * dim)
    )


def asymptotic_count(i: int, dim: int, gamma: float, saddle: SaddleData | None = None) -> float:
    """Saddle-point approximation of ``N1`` or ``N2``; ``inf`` past float range."""
    try:
        return math.exp(log_asymptotic_count(i, dim, gamma, saddle))
    except OverflowError:
        return math.inf


def log_count_asymptotic(dim: int, gamma: float, saddle: SaddleData | None = None) -> float:
    """``dim * l(z) - log(dim) / 2 + c`` approximating ``log N(dim, gamma)``."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    s = saddle if saddle is not None else solve_saddle(gamma)
    return dim * s.l_value - 0.5 * math.log(dim) + s.c_gamma


def hard_instance_ratio(gamma: float) -> float:
    """``gamma * (1 + 1 / (h(z_gamma) - 1))``, the smoothness budget of the hard instance."""
    s = solve_saddle(gamma)
    return gamma * (1.0 + 1.0 / (s.h_value - 1.0))


def gamma_bar(vartheta: float) -> int | None:
    """Largest integer ``gamma`` with ``gamma (1 + (h(z_gamma) - 1)^-1) <= vartheta``.

    Returns ``None`` when ``gamma = 1`` is already infeasible.
    """
    if not vartheta > 1:
        raise ValueError(f"vartheta must exceed 1, got {vartheta}")
    best = None
    # the multiplier exceeds 1, so no gamma >= vartheta can be feasible
    for g in range(1, math.floor(vartheta) + 1):
        if hard_instance_ratio(g) <= vartheta:
            best = g
    return best
