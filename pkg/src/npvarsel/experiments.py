"""Seeded Monte Carlo harness, figure data and frontier sweeps."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import binomtest

from . import feasibility, fourier, regression, saddle, selection

GENERATORS = ("zero", "single_frequency", "pair_frequency", "hard")


def trial_seed(base_seed: int, t: int) -> int:
    """Seed of trial ``t``; depends only on ``(base_seed, t)``."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(t,))
    return int(ss.generate_state(1, np.uint64)[0])


def build_instance(spec: dict, d: int | None = None) -> fourier.SparseFourierFunction:
    """Instantiate a test function from a JSON-style specification.

    ``spec`` holds either ``"function"`` (an inline coefficient dictionary),
    ``"path"`` (a file with one), or ``"generator"`` with parameters:

    - ``zero``: ``f = 0``;
    - ``single_frequency``: ``J`` plus ``amplitude`` or ``kappa``;
    - ``pair_frequency``: ``pair`` plus ``amplitude`` or ``kappa``;
    - ``hard``: ``J``, ``gamma`` (integer), ``signs`` and optional ``A``.
    """
    if "function" in spec:
        f = fourier.SparseFourierFunction.from_json_dict(spec["function"])
    elif "path" in spec:
        f = fourier.SparseFourierFunction.loads(Path(spec["path"]).read_text())
    elif "generator" in spec:
        if d is None:
            raise ValueError("generator instances need the ambient dimension d")
        f = _generate(spec, d)
    else:
        raise ValueError("instance spec needs one of 'function', 'path' or 'generator'")
    if d is not None and f.d != d:
        raise ValueError(f"instance dimension {f.d} differs from configured d={d}")
    return f


def _amplitude(spec: dict) -> float:
    if "amplitude" in spec:
        return float(spec["amplitude"])
    if "kappa" in spec:
        return math.sqrt(float(spec["kappa"]))
    raise ValueError("generator needs 'amplitude' or 'kappa'")


def _generate(spec: dict, d: int) -> fourier.SparseFourierFunction:
    name = spec["generator"]
    if name == "zero":
        return fourier.SparseFourierFunction(d, {})
    if name == "single_frequency":
        return fourier.make_single_frequency_instance(d, spec["J"], _amplitude(spec))
    if name == "pair_frequency":
        return fourier.make_pair_frequency_instance(d, tuple(spec["pair"]), _amplitude(spec))
    if name == "hard":
        J = spec["J"]
        signs = spec.get("signs")
        if signs is None:
            signs = [1] * len(fourier.hard_instance_support(len(J), int(spec["gamma"])))
        return fourier.make_hard_instance(d, J, int(spec["gamma"]), signs, spec.get("A"))
    raise ValueError(f"unknown generator {name!r}; expected one of {GENERATORS}")


@dataclass
class ExperimentConfig:
    """Monte Carlo configuration.

    ``grid`` switches the white-noise selector to the adaptive union over
    ``vartheta`` values.  For regression, ``m`` and ``lam`` default to the
    calibrated plan and ``compare_stepwise`` also runs the stepwise scan.
    """

    model: str = "gwn"
    instance: dict = field(default_factory=lambda: {"generator": "zero"})
    n: int = 100
    d: int = 12
    dstar: int = 2
    A: float = 2.0
    vartheta: float = 2.0
    grid: list | None = None
    tau: float = 1.0
    variant: str = "full"
    sigma: float = 1.0
    L2: float = 1.0
    density: str = "uniform"
    m: float | None = None
    lam: float | None = None
    compare_stepwise: bool = True
    trials: int = 100
    base_seed: int = 0
    jobs: int = 1

    def __post_init__(self):
        if self.model not in ("gwn", "regression"):
            raise ValueError(f"model must be 'gwn' or 'regression', got {self.model!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 1 <= self.dstar <= self.d:
            raise ValueError("need 1 <= dstar <= d")
        if "path" in self.instance and not Path(self.instance["path"]).exists():
            raise FileNotFoundError(self.instance["path"])

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        path = Path(path)
        data = json.loads(path.read_text())
        inst = data.get("instance", {})
        if "path" in inst and not Path(inst["path"]).is_absolute():
            inst["path"] = str(path.parent / inst["path"])
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)


def make_density(name: str) -> regression.DesignDensity:
    """``"uniform"`` or ``"cosine:<c>"`` (tilted along coordinate 0)."""
    if name == "uniform":
        return regression.uniform_density()
    if name.startswith("cosine:"):
        return regression.cosine_tilt_density(float(name.split(":", 1)[1]))
    raise ValueError(f"unknown density {name!r}")


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(k, n).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass
class ErrorRates:
    trials: int
    type1_count: int
    type2_count: int
    exact_count: int

    @property
    def type1(self) -> float:
        return self.type1_count / self.trials

    @property
    def type2(self) -> float:
        return self.type2_count / self.trials

    @property
    def exact(self) -> float:
        return self.exact_count / self.trials

    def interval(self, which: str) -> tuple[float, float]:
        return wilson_interval(getattr(self, f"{which}_count"), self.trials)

    def to_dict(self) -> dict:
        out = {"trials": self.trials}
        for name in ("type1", "type2", "exact"):
            out[name] = getattr(self, name)
            out[f"{name}_ci95"] = list(self.interval(name))
        return out


@dataclass
class BoundCheck:
    """Empirical success rate against ``1 - bound``.

    Passes when the upper Wilson endpoint of the success rate reaches
    ``1 - bound``, i.e. the data do not reject the guarantee.
    """

    name: str
    bound: float
    successes: int
    trials: int

    @property
    def upper(self) -> float:
        return wilson_interval(self.successes, self.trials)[1]

    @property
    def passed(self) -> bool:
        return self.upper >= 1.0 - self.bound

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "bound": self.bound,
            "success_rate": self.successes / self.trials,
            "success_upper_ci95": self.upper,
            "passed": self.passed,
        }


@dataclass
class MonteCarloResult:
    config: ExperimentConfig
    rates: ErrorRates
    checks: list
    log: list

    def to_dict(self, include_log: bool = False) -> dict:
        out = {
            # parallelism is not part of the experiment's identity
            "config": {k: v for k, v in self.config.to_dict().items() if k != "jobs"},
            "rates": self.rates.to_dict(),
            "checks": [c.to_dict() for c in self.checks],
        }
        if include_log:
            out["log"] = self.log
        return out

    def dumps(self, include_log: bool = False) -> str:
        return json.dumps(self.to_dict(include_log), sort_keys=True, indent=2)


def _gwn_trial(f, plan, grid, variant, seed):
    sample = selection.simulate_for_plan(f, plan, seed)
    if grid is None:
        res = selection.select(sample, plan, variant)
    else:
        res = selection.select_adaptive(sample, grid, plan.dstar)
    return {"selected": sorted(res.selected)}


def _reg_trial(f, cfg, g, m, lam, seed):
    sample = regression.simulate_regression(f, cfg.n, cfg.sigma, g, seed)
    res = regression.select_regression(sample, g, m, lam, cfg.dstar, "exhaustive")
    out = {"selected": sorted(res.selected)}
    if cfg.compare_stepwise:
        step = regression.select_regression(sample, g, m, lam, cfg.dstar, "stepwise")
        out["stepwise_agrees"] = step.selected == res.selected
        out["early_stop"] = step.early_stop
    return out


def run_monte_carlo(config: ExperimentConfig) -> MonteCarloResult:
    """Run ``config.trials`` independent selections and tabulate error rates.

    Trial ``t`` is seeded by :func:`trial_seed`, so results do not depend on
    ``config.jobs``.  Bound checks compare the success rates with the
    guarantees for the configured procedure.
    """
    cfg = config
    f = build_instance(cfg.instance, cfg.d)
    J = f.relevant_variables
    seeds = [trial_seed(cfg.base_seed, t) for t in range(cfg.trials)]

    if cfg.model == "gwn":
        grid = None if cfg.grid is None else sorted(float(v) for v in cfg.grid)
        # the largest vartheta of the grid observes every coefficient the union needs
        vt = cfg.vartheta if grid is None else grid[-1]
        A = cfg.A if grid is None else 2.0
        plan = selection.plan_thresholds(cfg.n, cfg.d, cfg.dstar, A, vt)
        task = lambda s: _gwn_trial(f, plan, grid, cfg.variant, s)  # noqa: E731
    else:
        g = make_density(cfg.density)
        m, lam = regression.plan_regression(cfg.n, cfg.d, cfg.dstar, cfg.vartheta, cfg.sigma, cfg.L2, g.g_min)
        m = cfg.m if cfg.m is not None else m
        lam = cfg.lam if cfg.lam is not None else lam
        # uniform design needs no reweighting
        g_used = None if cfg.density == "uniform" else g
        task = lambda s: _reg_trial(f, cfg, g_used, m, lam, s)  # noqa: E731

    if cfg.jobs == 1:
        outs = [task(s) for s in seeds]
    else:
        outs = Parallel(n_jobs=cfg.jobs)(delayed(task)(s) for s in seeds)

    log = []
    t1 = t2 = ex = 0
    for t, (seed, o) in enumerate(zip(seeds, outs)):
        sel = frozenset(o["selected"])
        e1, e2 = not sel <= J, not J <= sel
        t1 += e1
        t2 += e2
        ex += sel == J
        log.append({"trial": t, "seed": seed, **o, "type1": e1, "type2": e2, "exact": sel == J})
    rates = ErrorRates(cfg.trials, t1, t2, ex)
    return MonteCarloResult(cfg, rates, _bound_checks(cfg, J, rates, log), log)


def _bound_checks(cfg: ExperimentConfig, J, rates: ErrorRates, log) -> list:
    n = rates.trials
    checks = []
    if cfg.model == "gwn" and cfg.grid is None:
        checks.append(BoundCheck("type1", selection.type1_bound(cfg.d, cfg.dstar, cfg.A), n - rates.type1_count, n))
        if J:
            checks.append(
                BoundCheck("exact", selection.consistency_error_bound(cfg.d, cfg.dstar, cfg.A), rates.exact_count, n)
            )
    elif cfg.model == "gwn":
        bound = selection.adaptive_error_bound(cfg.d, cfg.dstar, len(cfg.grid))
        checks.append(BoundCheck("exact", bound, rates.exact_count, n))
    else:
        checks.append(BoundCheck("exact", regression.regression_error_bound(cfg.d, cfg.dstar), rates.exact_count, n))
        if cfg.compare_stepwise:
            agree = sum(bool(r["stepwise_agrees"]) and not r["early_stop"] for r in log)
            checks.append(BoundCheck("stepwise_agrees", 0.0, agree, n))
    return checks


# --------------------------------------------------------------------------
# figure data
# --------------------------------------------------------------------------

DEFAULT_GRIDS = {
    "fig1": np.linspace(0.1, 20.0, 200),
    "fig2": np.linspace(2.0, 50.0, 193),
    "fig4": np.linspace(2.0, 50.0, 193),
}

CURVE_HEADERS = {
    "fig1": ("gamma", "z_gamma", "l_gamma"),
    "fig2": ("vartheta", "gamma_bar", "bisector"),
    "fig4": ("L", "l_L", "gamma_bar", "l_gamma_bar", "relative_gap"),
}


class MonotonicityError(AssertionError):
    """Curve data violate the expected ordering; nothing is written."""


def curve_rows(which: str, grid=None) -> list[tuple]:
    """Rows of one figure, checked for the expected monotonicity."""
    if which not in CURVE_HEADERS:
        raise ValueError(f"unknown curve {which!r}; expected one of {sorted(CURVE_HEADERS)}")
    grid = np.asarray(DEFAULT_GRIDS[which] if grid is None else grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be nonempty and strictly increasing")
    rows = []
    if which == "fig1":
        for g in grid:
            s = saddle.solve_saddle(float(g))
            rows.append((float(g), s.z_gamma, s.l_value))
        z = np.array([r[1] for r in rows])
        lv = np.array([r[2] for r in rows])
        if np.any(np.diff(z) <= 0) or np.any(np.diff(lv) <= 0):
            raise MonotonicityError("z_gamma and l_gamma must increase strictly in gamma")
    elif which == "fig2":
        for v in grid:
            gb = saddle.gamma_bar(float(v))
            rows.append((float(v), gb, float(v)))
        vals = [r[1] for r in rows if r[1] is not None]
        if any(r[1] is not None and r[1] > r[0] for r in rows) or np.any(np.diff(vals) < 0):
            raise MonotonicityError("gamma_bar must be nondecreasing and below the bisector")
    else:
        for L in grid:
            blue = saddle.solve_saddle(float(L)).l_value
            gb = saddle.gamma_bar(float(L))
            red = saddle.solve_saddle(gb).l_value if gb is not None else None
            gap = (blue - red) / blue if red is not None else None
            rows.append((float(L), blue, gb, red, gap))
        if any(r[3] is not None and r[3] > r[1] for r in rows):
            raise MonotonicityError("l at gamma_bar must not exceed l at L")
    return rows


def write_csv(path, header, rows):
    """Write rows with a header; ``None`` becomes an empty field."""
    def fmt(v):
        if v is None:
            return ""
        if isinstance(v, float):
            return repr(v)
        return str(v)

    target = open(path, "w", newline="") if path is not None and not hasattr(path, "write") else path
    try:
        w = csv.writer(target, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    finally:
        if target is not path:
            target.close()


def emit_curves(which: str, grid=None, path=None) -> list[tuple]:
    """Compute a figure's rows and, if ``path`` is given, write them as CSV."""
    rows = curve_rows(which, grid)
    if path is not None:
        write_csv(path, CURVE_HEADERS[which], rows)
    return rows


def max_gap_by_window(rows, edges) -> list[float]:
    """Largest fig4 relative gap within each window ``[edges[i], edges[i+1])``.

    The gap is a step function of ``L`` (``gamma_bar`` is an integer), so the
    shrinking trend shows on the window envelope rather than pointwise.
    """
    out = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        gaps = [r[4] for r in rows if r[4] is not None and lo <= r[0] < hi]
        out.append(max(gaps) if gaps else math.nan)
    return out


# --------------------------------------------------------------------------
# frontier sweep
# --------------------------------------------------------------------------

PHASE_HEADER = (
    "n", "d", "dstar", "kappa", "L", "tau", "alpha",
    "ordre2_margin", "ordre3_margin", "ordre4_margin",
    "consistent", "impossible", "classification",
)  # fmt: skip


def phase_point(n, d, dstar, kappa, L, tau=1.0, alpha=0.25, A=2.0) -> tuple:
    """Finite-sample conditions at one grid point.

    ``consistent`` means the recovery condition holds for ``s = dstar``;
    ``impossible`` means either lower-bound condition holds.
    """
    plan = selection.plan_thresholds(n, d, dstar, A, L * (1.0 + tau) / kappa)
    ok = selection.consistency_check(kappa, L, tau, plan, dstar, "ordre2")
    q = feasibility.RegimeQuery(n, d, dstar, kappa, L, alpha, tau)
    c4 = feasibility.impossibility_check(q, "ordre4")
    try:
        c3 = feasibility.impossibility_check(q, "ordre3")
        m3, imp3 = c3.margin, c3.impossible
    except feasibility.NotApplicableError:
        m3, imp3 = None, False
    impossible = imp3 or c4.impossible
    if ok.holds and impossible:
        label = "both"
    elif ok.holds:
        label = "consistent"
    elif impossible:
        label = "impossible"
    else:
        label = "undetermined"
    return (n, d, dstar, kappa, L, tau, alpha, ok.margin, m3, c4.margin, ok.holds, impossible, label)


def phase_sweep(ns, kappas, dstars, d, L, tau=1.0, alpha=0.25, A=2.0) -> list[tuple]:
    return [phase_point(n, d, s, k, L, tau, alpha, A) for n in ns for k in kappas for s in dstars]
