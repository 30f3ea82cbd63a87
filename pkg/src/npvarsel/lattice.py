"""Integer lattice points in Euclidean balls centred at the origin.

Balls are described by a *squared* radius.  ``count_points(dim, gamma)`` counts
``k`` in ``Z^dim`` with ``||k||_2^2 <= gamma * dim``; pass ``sq_bound`` instead of
``gamma`` to give the squared radius directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

ENUMERATION_DIM_LIMIT = 16

_ROUND_TOL = 1e-9


class DimensionLimitError(ValueError):
    """Raised when explicit enumeration is requested above the dimension guard."""


def floor_bound(value: float) -> int:
    """Floor a nonnegative real squared radius to an integer.

    Values within ``1e-9`` (relative) of an integer snap to that integer, so
    ``sqrt(8) ** 2`` or ``(10.24 / 3) * 3`` are not misclassified at the boundary.
    """
    if value < 0:
        raise ValueError(f"squared bound must be nonnegative, got {value}")
    nearest = round(value)
    if abs(value - nearest) <= _ROUND_TOL * max(1.0, abs(value)):
        return int(nearest)
    return math.floor(value)


def squared_bound(dim: int, gamma: float | None = None, sq_bound: float | None = None) -> int:
    """Integer squared radius ``floor(gamma * dim)`` (or ``floor(sq_bound)``)."""
    if (gamma is None) == (sq_bound is None):
        raise ValueError("give exactly one of gamma or sq_bound")
    if gamma is not None:
        if not gamma > 0:
            raise ValueError(f"gamma must be positive, got {gamma}")
        return floor_bound(gamma * dim)
    if not sq_bound > 0:
        raise ValueError(f"sq_bound must be positive, got {sq_bound}")
    return floor_bound(sq_bound)


def norm2(k) -> int:
    return sum(int(c) * int(c) for c in k)


def support(k) -> tuple[int, ...]:
    return tuple(i for i, c in enumerate(k) if c != 0)


def is_canonical(k) -> bool:
    """True when ``k`` is nonzero with a positive first nonzero entry."""
    for c in k:
        if c != 0:
            return c > 0
    return False


@dataclass(frozen=True)
class BallCountQuery:
    dim: int
    bound: int  # integer squared radius
    constraint: str = "all"  # "all" | "k1-nonzero"

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.bound < 0:
            raise ValueError(f"bound must be >= 0, got {self.bound}")
        if self.constraint not in ("all", "k1-nonzero"):
            raise ValueError(f"unknown constraint {self.constraint!r}")

    @classmethod
    def from_gamma(cls, dim, gamma=None, sq_bound=None, constraint="all"):
        return cls(dim, squared_bound(dim, gamma, sq_bound), constraint)


# --------------------------------------------------------------------------
# counting by dynamic programming over squared norms
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _square_counts(dim: int, bound: int) -> tuple[int, ...]:
    """``a[r]`` = number of ``k`` in ``Z^dim`` with ``||k||^2 == r``, for ``r <= bound``.

    Coefficients of the truncated power series ``h(z)**dim``; exact integers.
    """
    if dim == 0:
        return (1,) + (0,) * bound
    prev = _square_counts(dim - 1, bound)
    squares = [v * v for v in range(math.isqrt(bound) + 1)]
    out = [0] * (bound + 1)
    for r, a in enumerate(prev):
        if a == 0:
            continue
        out[r] += a
        for sq in squares[1:]:
            if r + sq > bound:
                break
            out[r + sq] += 2 * a
    return tuple(out)


def shell_counts(dim: int, bound: int) -> tuple[int, ...]:
    """Number of lattice points on each sphere ``||k||^2 = r``, ``r = 0..bound``."""
    if dim < 0 or bound < 0:
        raise ValueError("dim and bound must be nonnegative")
    return _square_counts(dim, bound)


def count_n1(dim: int, bound: int) -> int:
    """``|{k in Z^dim : ||k||^2 <= bound}|``."""
    return sum(_square_counts(dim, bound))


def count_n2(dim: int, bound: int) -> int:
    """Points of the ``dim``-ball with ``k_1 == 0`` (a ``dim - 1`` dimensional ball)."""
    return sum(_square_counts(dim - 1, bound))


def count_points(dim: int, gamma: float | None = None, which: str = "N", *, sq_bound: float | None = None) -> int:
    """Exact lattice count ``N1``, ``N2`` or ``N = N1 - N2``.

    Parameters
    ----------
    dim : int
        Dimension of the ball.
    gamma : float, optional
        Squared-radius scale; the ball is ``||k||^2 <= gamma * dim``.
    which : {"N1", "N2", "N"}
        ``N`` counts the points with a nonzero first coordinate.
    sq_bound : float, optional
        Squared radius given directly (exclusive with ``gamma``).
    """
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    bound = squared_bound(dim, gamma, sq_bound)
    if which == "N1":
        return count_n1(dim, bound)
    if which == "N2":
        return count_n2(dim, bound)
    if which == "N":
        return count_n1(dim, bound) - count_n2(dim, bound)
    raise ValueError(f"which must be N1, N2 or N, got {which!r}")


def count_query(query: BallCountQuery) -> int:
    if query.constraint == "all":
        return count_n1(query.dim, query.bound)
    return count_n1(query.dim, query.bound) - count_n2(query.dim, query.bound)


def log_count(dim: int, gamma: float | None = None, which: str = "N", *, sq_bound: float | None = None) -> float:
    """Natural log of :func:`count_points`, safe for counts beyond float range."""
    value = count_points(dim, gamma, which, sq_bound=sq_bound)
    if value <= 0:
        return -math.inf
    return math.log(value)


# --------------------------------------------------------------------------
# explicit enumeration
# --------------------------------------------------------------------------


def _ball_points(dim: int, bound: int, nonzero_first: bool):
    # lexicographic recursion with pruning on the remaining squared budget
    def rec(prefix, left, depth):
        if depth == dim:
            yield tuple(prefix)
            return
        r = math.isqrt(left)
        for v in range(-r, r + 1):
            if depth == 0 and nonzero_first and v == 0:
                continue
            prefix.append(v)
            yield from rec(prefix, left - v * v, depth + 1)
            prefix.pop()

    yield from rec([], bound, 0)


def enumerate_ball(query: BallCountQuery, dim_limit: int = ENUMERATION_DIM_LIMIT) -> list[tuple[int, ...]]:
    """All lattice points of the ball, each once, in lexicographic order."""
    if query.dim > dim_limit:
        raise DimensionLimitError(f"dim {query.dim} exceeds enumeration limit {dim_limit}")
    return list(_ball_points(query.dim, query.bound, query.constraint == "k1-nonzero"))


@lru_cache(maxsize=512)
def nonzero_patterns(t: int, bound: int) -> tuple[tuple[int, ...], ...]:
    """Vectors in ``Z^t`` with every entry nonzero and ``||v||^2 <= bound``."""
    if t == 0:
        return ((),)
    if t > bound:
        return ()
    out = []

    def rec(prefix, left, depth):
        if depth == t:
            out.append(tuple(prefix))
            return
        # each remaining coordinate needs at least 1
        r = math.isqrt(left - (t - depth - 1))
        for v in range(-r, r + 1):
            if v == 0:
                continue
            prefix.append(v)
            rec(prefix, left - v * v, depth + 1)
            prefix.pop()

    rec([], bound, 0)
    return tuple(out)


def embed(d: int, coords, pattern) -> tuple[int, ...]:
    k = [0] * d
    for c, v in zip(coords, pattern):
        k[c] = v
    return tuple(k)


def enumerate_support_constrained(
    d: int,
    j: int,
    m: float | None = None,
    *,
    subset=None,
    max_support: int | None = None,
    sq_bound: float | None = None,
) -> list[tuple[int, ...]]:
    """Multi-indices ``k`` in ``Z^d`` with ``||k||_2 <= m`` and ``k_j != 0``.

    Exactly one of ``subset`` (``{j} <= supp(k) <= subset``) or ``max_support``
    (``||k||_0 <= max_support``) selects the mode.  Coordinates are 0-based.
    The radius may be given as ``m`` or as a squared radius ``sq_bound``.
    """
    if (m is None) == (sq_bound is None):
        raise ValueError("give exactly one of m or sq_bound")
    if m is not None:
        if not m > 0:
            raise ValueError(f"radius m must be positive, got {m}")
        bound = floor_bound(m * m)
    else:
        bound = squared_bound(1, sq_bound=sq_bound)
    if not 0 <= j < d:
        raise ValueError(f"coordinate {j} outside 0..{d - 1}")
    if (subset is None) == (max_support is None):
        raise ValueError("give exactly one of subset or max_support")

    if subset is not None:
        subset = sorted(set(subset))
        if j not in subset:
            raise ValueError(f"coordinate {j} not in subset {subset}")
        if any(not 0 <= c < d for c in subset):
            raise ValueError("subset coordinates outside range")
        others = [c for c in subset if c != j]
        supports = (
            tuple(sorted((j,) + extra))
            for t in range(len(others) + 1)
            for extra in itertools.combinations(others, t)
        )
    else:
        if not 1 <= max_support <= d:
            raise ValueError(f"max_support must lie in 1..{d}")
        others = [c for c in range(d) if c != j]
        supports = (
            tuple(sorted((j,) + extra))
            for t in range(max_support)
            for extra in itertools.combinations(others, t)
        )

    points = [embed(d, T, p) for T in supports for p in nonzero_patterns(len(T), bound)]
    points.sort()
    return points


# --------------------------------------------------------------------------
# analytic bounds
# --------------------------------------------------------------------------


def unit_ball_volume(dim: int) -> float:
    return math.exp(0.5 * dim * math.log(math.pi) - math.lgamma(1 + 0.5 * dim))


def analytic_bounds(dim: int, gamma: float) -> tuple[float, float, float]:
    """Volumetric lower/upper bounds on ``N1(dim, gamma)`` and the cube-packing bound.

    Returns ``(lower, upper, packing)`` where ``packing = 0.3 * (9 pi e gamma)^(dim/2)``,
    which is only claimed for ``gamma >= 1`` (``nan`` below that).
    """
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    vol = unit_ball_volume(dim)
    root = math.sqrt(gamma)
    lower = vol * max(root - 1.0, 0.0) ** dim * dim ** (dim / 2)
    upper = vol * (root + 1.0) ** dim * dim ** (dim / 2)
    packing = packing_bound(dim, gamma) if gamma >= 1 else math.nan
    return lower, upper, packing


def packing_bound(dim: int, gamma: float) -> float:
    if gamma < 1:
        raise ValueError(f"packing bound requires gamma >= 1, got {gamma}")
    return 0.3 * (9 * math.pi * math.e * gamma) ** (dim / 2)
