"""Sparse trigonometric expansions on ``[0, 1]^d`` and Gaussian white-noise observations.

A multi-index ``k`` in ``Z^d`` selects ``sqrt(2) cos(2 pi k.x)`` when its first
nonzero entry is positive and ``sqrt(2) sin(2 pi k.x)`` when it is negative;
``k = 0`` is the constant function.  Coefficient maps are keyed by plain
integer tuples, so the sign of ``k`` carries the cos/sin choice.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from . import lattice
from .lattice import is_canonical, norm2, support

SQRT2 = math.sqrt(2.0)


class MissingObservationError(KeyError):
    """A statistic needed a coefficient that was not observed."""


def _as_index(k) -> tuple[int, ...]:
    out = tuple(int(c) for c in k)
    if any(c != ck for c, ck in zip(out, k)):
        raise ValueError(f"multi-index entries must be integers, got {k!r}")
    return out


def basis_eval(k, x):
    """Evaluate the trigonometric basis function ``phi_k`` at ``x``.

    ``x`` may be a single point of shape ``(d,)`` or an array of points of
    shape ``(n, d)``.
    """
    k = np.asarray(_as_index(k), dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != k.shape[0]:
        raise ValueError(f"dimension mismatch: k has {k.shape[0]} entries, x has {x.shape[-1]}")
    if not k.any():
        return np.ones(x.shape[:-1]) if x.ndim > 1 else 1.0
    phase = 2.0 * np.pi * (x @ k)
    if is_canonical(k):
        return SQRT2 * np.cos(phase)
    return SQRT2 * np.sin(phase)


@dataclass(frozen=True)
class SparseFourierFunction:
    """Finite trigonometric expansion ``f = sum_k theta_k phi_k`` on ``[0, 1]^d``."""

    d: int
    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"ambient dimension must be positive, got {self.d}")
        clean = {}
        for k, v in dict(self.coefficients).items():
            k = _as_index(k)
            if len(k) != self.d:
                raise ValueError(f"multi-index {k} does not have dimension {self.d}")
            v = float(v)
            if v != 0.0:
                clean[k] = clean.get(k, 0.0) + v
        object.__setattr__(self, "coefficients", MappingProxyType(clean))

    def __len__(self):
        return len(self.coefficients)

    def coefficient(self, k) -> float:
        return self.coefficients.get(tuple(k), 0.0)

    @property
    def relevant_variables(self) -> frozenset:
        """Coordinates appearing in the support of some stored multi-index."""
        return frozenset(j for k in self.coefficients for j in support(k))

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got {X.shape[1]}")
        out = np.zeros(X.shape[0])
        for k, v in self.coefficients.items():
            out += v * basis_eval(k, X)
        return out

    def __call__(self, X):
        return self.evaluate(X)

    def l2_norm_sq(self) -> float:
        return float(sum(v * v for v in self.coefficients.values()))

    def sup_bound(self) -> float:
        """Upper bound on ``sup |f|`` from the coefficient magnitudes."""
        return float(
            sum(abs(v) * (1.0 if not any(k) else SQRT2) for k, v in self.coefficients.items())
        )

    # -- JSON -----------------------------------------------------------

    def to_json_dict(self) -> dict:
        entries = []
        for k in sorted(self.coefficients):
            v = self.coefficients[k]
            if not any(k):
                entries.append({"k": list(k), "type": "const", "value": v})
            elif is_canonical(k):
                entries.append({"k": list(k), "type": "cos", "value": v})
            else:
                entries.append({"k": [-c for c in k], "type": "sin", "value": v})
        return {"d": self.d, "coefficients": entries}

    @classmethod
    def from_json_dict(cls, data: dict) -> "SparseFourierFunction":
        try:
            d = int(data["d"])
            entries = data["coefficients"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"function spec needs 'd' and 'coefficients': {exc}") from None
        coefs = {}
        for e in entries:
            k = _as_index(e["k"])
            kind = e.get("type")
            if len(k) != d:
                raise ValueError(f"multi-index {k} does not have dimension {d}")
            if kind == "const":
                if any(k):
                    raise ValueError(f"const entry must have k = 0, got {k}")
                key = k
            elif kind in ("cos", "sin"):
                if not is_canonical(k):
                    raise ValueError(f"{kind} entry {k} is not canonical (first nonzero entry must be positive)")
                key = k if kind == "cos" else tuple(-c for c in k)
            else:
                raise ValueError(f"unknown basis type {kind!r}")
            if key in coefs:
                raise ValueError(f"duplicate entry for {k} ({kind})")
            coefs[key] = float(e["value"])
        return cls(d, coefs)

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "SparseFourierFunction":
        return cls.from_json_dict(json.loads(text))


# --------------------------------------------------------------------------
# smoothness / relevance
# --------------------------------------------------------------------------


@dataclass
class SmoothnessReport:
    sobolev_sums: np.ndarray
    relevance: np.ndarray
    support: frozenset
    sigma_member: bool
    c1_member: bool


def analyze(f: SparseFourierFunction, kappa: float, L: float, dstar: int) -> SmoothnessReport:
    """Per-coordinate Sobolev sums and relevances, with class membership flags."""
    sob = np.zeros(f.d)
    rel = np.zeros(f.d)
    for k, v in f.coefficients.items():
        v2 = v * v
        for j in support(k):
            sob[j] += k[j] * k[j] * v2
            rel[j] += v2
    supp = frozenset(int(j) for j in np.flatnonzero(rel > 0))
    sigma_member = bool(np.all(sob <= L))
    c1 = (
        sigma_member
        and len(supp) <= dstar
        and len(supp) > 0
        and bool(min(rel[j] for j in supp) >= kappa)
    )
    return SmoothnessReport(sob, rel, supp, sigma_member, bool(c1))


def truncated_relevance(f: SparseFourierFunction, j: int, m: float, subset) -> float:
    """Energy of ``f`` on ``{k : ||k|| <= m, j in supp(k) <= subset}``."""
    subset = set(subset)
    if j not in subset:
        raise ValueError(f"coordinate {j} not in subset")
    bound = lattice.floor_bound(m * m)
    total = 0.0
    for k, v in f.coefficients.items():
        supp = support(k)
        if k[j] != 0 and set(supp) <= subset and norm2(k) <= bound:
            total += v * v
    return total


def relevance_lower_bound(kappa: float, L: float, s: int, m: float) -> float:
    """Guaranteed floor ``kappa - L s / m^2`` on the truncated relevance."""
    return kappa - L * s / (m * m)


# --------------------------------------------------------------------------
# instance generators
# --------------------------------------------------------------------------


def make_single_frequency_instance(d: int, J, amplitude: float) -> SparseFourierFunction:
    """``sum_{j in J} a sqrt(2) cos(2 pi x_j)``; each relevance equals ``a^2``."""
    if amplitude == 0:
        raise ValueError("amplitude must be nonzero")
    coefs = {}
    for j in J:
        k = [0] * d
        k[j] = 1
        coefs[tuple(k)] = amplitude
    return SparseFourierFunction(d, coefs)


def make_pair_frequency_instance(d: int, pair, amplitude: float) -> SparseFourierFunction:
    """``a sqrt(2) cos(2 pi (x_a + x_b))``: a pure two-way interaction."""
    a, b = pair
    if a == b:
        raise ValueError("pair coordinates must differ")
    k = [0] * d
    k[a] = 1
    k[b] = 1
    return SparseFourierFunction(d, {tuple(k): amplitude})


def hard_instance_support(dstar: int, gamma_int: int) -> list[tuple[int, ...]]:
    return lattice.enumerate_ball(lattice.BallCountQuery.from_gamma(dstar, gamma_int), dim_limit=dstar)


def make_hard_instance(d: int, J, gamma_int: int, omega, A: float | None = None) -> SparseFourierFunction:
    """Signed flat coefficients ``A * omega_k`` on the ball ``||k||^2 <= gamma |J|`` over ``J``.

    ``omega`` holds one sign per lattice point of the ball, in lexicographic
    order.  The default amplitude ``N(|J|, gamma)^(-1/2)`` gives every
    coordinate of ``J`` relevance exactly one.
    """
    J = sorted(J)
    dstar = len(J)
    pts = hard_instance_support(dstar, gamma_int)
    omega = np.asarray(omega)
    if omega.shape != (len(pts),):
        raise ValueError(f"need {len(pts)} signs, got shape {omega.shape}")
    if not np.all(np.isin(omega, (-1, 1))):
        raise ValueError("omega entries must be +1 or -1")
    if A is None:
        A = lattice.count_points(dstar, gamma_int, "N") ** -0.5
    if not A > 0:
        raise ValueError("A must be positive")
    coefs = {}
    for p, w in zip(pts, omega):
        coefs[lattice.embed(d, J, p)] = A * float(w)
    return SparseFourierFunction(d, coefs)


# --------------------------------------------------------------------------
# counter-based Gaussian noise
# --------------------------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def index_normals(seed: int, indices: np.ndarray) -> np.ndarray:
    """Standard normals keyed by ``(seed, k)``: one value per row of ``indices``.

    Each multi-index is hashed with the splitmix64 finaliser chained over its
    entries; two further mixes give 53-bit uniforms fed to Box-Muller.  The
    value attached to ``k`` does not depend on which other indices are drawn
    or their order.
    """
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    with np.errstate(over="ignore"):
        h = np.full(idx.shape[0], _mix(np.array([seed], dtype=np.uint64) + _GOLDEN)[0], dtype=np.uint64)
        for c in range(idx.shape[1]):
            h = _mix(h + _GOLDEN + idx[:, c].astype(np.uint64))
        u1 = ((_mix(h ^ np.uint64(1)) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        u2 = ((_mix(h ^ np.uint64(2)) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


@dataclass
class WhiteNoiseSample:
    """Noisy coefficients ``y_k = theta_k + xi_k / sqrt(n)`` on a finite index set."""

    n: int
    indices: np.ndarray  # (N, d) int
    values: np.ndarray  # (N,)
    _lookup: dict | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        self.indices = np.atleast_2d(np.asarray(self.indices, dtype=np.int64))
        self.values = np.asarray(self.values, dtype=float)
        if self.indices.shape[0] != self.values.shape[0]:
            raise ValueError("indices and values lengths differ")

    @property
    def d(self) -> int:
        return self.indices.shape[1]

    def lookup(self) -> dict:
        if self._lookup is None:
            self._lookup = {tuple(int(c) for c in k): i for i, k in enumerate(self.indices)}
        return self._lookup

    def __getitem__(self, k) -> float:
        try:
            return float(self.values[self.lookup()[tuple(k)]])
        except KeyError:
            raise MissingObservationError(f"coefficient {tuple(k)} was not observed") from None

    def values_at(self, indices: np.ndarray) -> np.ndarray:
        """Observations for the given rows of multi-indices, in that order."""
        indices = np.atleast_2d(np.asarray(indices, dtype=np.int64))
        if indices.shape == self.indices.shape and np.array_equal(indices, self.indices):
            return self.values
        table = self.lookup()
        try:
            pos = np.fromiter((table[tuple(k)] for k in indices.tolist()), dtype=np.int64, count=len(indices))
        except KeyError as exc:
            raise MissingObservationError(f"coefficient {exc.args[0]} was not observed") from None
        return self.values[pos]

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "observations": [{"k": k, "y": float(v)} for k, v in zip(self.indices.tolist(), self.values)],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "WhiteNoiseSample":
        obs = data["observations"]
        if not obs:
            raise ValueError("sample has no observations")
        d = int(data["d"])
        idx = np.array([o["k"] for o in obs], dtype=np.int64).reshape(len(obs), d)
        return cls(int(data["n"]), idx, np.array([float(o["y"]) for o in obs]))


def sample_white_noise(f: SparseFourierFunction, n: int, index_set, seed: int) -> WhiteNoiseSample:
    """Draw ``y_k = theta_k[f] + n^(-1/2) xi_k`` for every ``k`` in ``index_set``."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    idx = np.asarray(index_set, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("index set is empty")
    idx = np.atleast_2d(idx)
    if idx.shape[1] != f.d:
        raise ValueError(f"index dimension {idx.shape[1]} differs from function dimension {f.d}")
    theta = np.array([f.coefficients.get(k, 0.0) for k in map(tuple, idx.tolist())])
    y = theta + index_normals(seed, idx) / math.sqrt(n)
    return WhiteNoiseSample(n, idx, y)


def random_sigma_member(d: int, J, kappa: float, L: float, rng, max_norm: int = 3, n_terms: int = 6) -> SparseFourierFunction:
    """A random function supported on ``J`` with relevances >= ``kappa`` and Sobolev sums <= ``L``.

    Coefficients are drawn on random multi-indices over ``J`` and then rescaled;
    draws that cannot meet both constraints are retried.
    """
    J = sorted(J)
    rng = np.random.default_rng(rng)
    pts = [
        p
        for p in itertools.product(range(-max_norm, max_norm + 1), repeat=len(J))
        if any(p) and norm2(p) <= max_norm * max_norm
    ]
    for _ in range(1000):
        chosen = rng.choice(len(pts), size=min(n_terms, len(pts)), replace=False)
        coefs = {lattice.embed(d, J, pts[c]): float(rng.normal()) for c in chosen}
        f = SparseFourierFunction(d, coefs)
        rep = analyze(f, 0.0, math.inf, len(J))
        if set(rep.support) != set(J):
            continue
        scale = kappa / min(rep.relevance[j] for j in J)
        if scale * rep.sobolev_sums.max() <= L:
            return SparseFourierFunction(d, {k: v * math.sqrt(scale) for k, v in coefs.items()})
    raise RuntimeError("could not draw a member of the requested class; increase L / kappa")
