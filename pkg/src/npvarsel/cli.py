"""Command-line interface: ``npvarsel <command> [options]``.

Exit status is 0 on success, 2 on invalid input and 1 on runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import experiments, fourier, lattice, regression, saddle, selection

JOBS_ENV = "NPVARSEL_JOBS"


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    """``"a,b,c"`` or ``"start:stop:num"`` (inclusive linspace)."""
    try:
        if ":" in text:
            a, b, k = text.split(":")
            return [float(v) for v in np.linspace(float(a), float(b), int(k))]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse grid {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(float(v)) for v in _float_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse integer list {text!r}") from None


def _default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None


def _global_flags() -> argparse.ArgumentParser:
    # shared so the flags may appear before or after the command name
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="base random seed (default 0)")
    p.add_argument("--jobs", type=int, default=argparse.SUPPRESS, help=f"parallel workers (default ${JOBS_ENV} or 1)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS, help="output format")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="npvarsel", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("count", parents=[common], help="exact lattice point counts")
    p.add_argument("--dim", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--gamma", type=float, help="squared radius is gamma * dim")
    g.add_argument("--sq-bound", type=float, help="squared radius given directly")
    p.add_argument("--constraint", choices=("all", "k1-nonzero"), default="k1-nonzero")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("saddle", parents=[common], help="saddle point of log h(z) - gamma log z")
    p.add_argument("--gamma", type=_float_list, required=True, help="value or grid")
    p.add_argument("--tol", type=float, default=1e-12)
    p.set_defaults(func=cmd_saddle)

    p = sub.add_parser("curves", parents=[common], help="figure data as CSV")
    p.add_argument("--which", choices=sorted(experiments.CURVE_HEADERS), required=True)
    p.add_argument("--grid", type=_float_list, default=None)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("thresholds", parents=[common], help="cut-offs and thresholds of the selector")
    _plan_args(p)
    p.set_defaults(func=cmd_thresholds)

    p = sub.add_parser("select", parents=[common], help="select variables from a white-noise sample")
    p.add_argument("--sample", required=True, help="sample JSON")
    p.add_argument("--dstar", type=int, required=True)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--vartheta", type=float, default=2.0)
    p.add_argument("--variant", choices=("full", "simple"), default="full")
    p.add_argument("--grid", type=_float_list, default=None, help="vartheta grid; enables the adaptive union")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("simulate-gwn", parents=[common], help="simulate white-noise observations")
    _instance_args(p)
    _plan_args(p)
    p.set_defaults(func=cmd_simulate_gwn)

    p = sub.add_parser("simulate-reg", parents=[common], help="simulate a regression sample")
    _instance_args(p)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--density", default="uniform", help="'uniform' or 'cosine:<c>'")
    p.set_defaults(func=cmd_simulate_reg)

    p = sub.add_parser("select-reg", parents=[common], help="select covariates from a regression sample")
    p.add_argument("--data", required=True, help="CSV with columns x0..x{d-1}, y")
    p.add_argument("--dstar", type=int, required=True)
    p.add_argument("--vartheta", type=float, default=2.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--L2", type=float, default=1.0)
    p.add_argument("--density", default="uniform")
    p.add_argument("--strategy", choices=("exhaustive", "stepwise"), default="exhaustive")
    p.add_argument("--m", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.set_defaults(func=cmd_select_reg)

    p = sub.add_parser("phase-diagram", parents=[common], help="sweep the possible/impossible frontier")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--L", type=float, required=True)
    p.add_argument("--n-grid", type=_float_list, required=True)
    p.add_argument("--kappa-grid", type=_float_list, required=True)
    p.add_argument("--dstar-grid", type=_int_list, required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--A", type=float, default=2.0)
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("montecarlo", parents=[common], help="error rates over seeded trials")
    p.add_argument("--config", required=True, help="ExperimentConfig JSON")
    p.add_argument("--trials", type=int, default=None, help="override the configured trial count")
    p.add_argument("--log", action="store_true", help="include per-trial records")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def _plan_args(p):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--dstar", type=int, required=True)
    p.add_argument("--A", type=float, default=2.0)
    p.add_argument("--vartheta", type=float, default=2.0)


def _instance_args(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--function", help="function JSON file")
    g.add_argument("--generator", choices=experiments.GENERATORS)
    p.add_argument("--J", type=_int_list, default=None, help="relevant coordinates for generators")
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--radius", type=int, default=1, help="integer gamma of the hard instance")


def _instance(args, d) -> fourier.SparseFourierFunction:
    if args.function:
        return experiments.build_instance({"path": args.function}, d)
    if d is None:
        raise UsageError("--d is required with --generator")
    spec = {"generator": args.generator}
    if args.generator == "pair_frequency":
        spec["pair"] = args.J
    elif args.generator != "zero":
        spec["J"] = args.J
    if args.generator == "hard":
        spec["gamma"] = args.radius
    if args.amplitude is not None:
        spec["amplitude"] = args.amplitude
    if args.kappa is not None:
        spec["kappa"] = args.kappa
    if args.generator != "zero" and args.J is None:
        raise UsageError("--J is required for this generator")
    return experiments.build_instance(spec, d)


# --------------------------------------------------------------------------
# commands: each returns (payload, default format)
# --------------------------------------------------------------------------


def cmd_count(args):
    q = lattice.BallCountQuery.from_gamma(args.dim, args.gamma, args.sq_bound, args.constraint)
    return lattice.count_query(q), "text"


def cmd_saddle(args):
    rows = [saddle.solve_saddle(g, args.tol).to_dict() for g in args.gamma]
    if args.format == "csv":
        header = list(rows[0])
        return (header, [[r[h] for h in header] for r in rows]), "csv"
    return (rows[0] if len(rows) == 1 else rows), "json"


def cmd_curves(args):
    rows = experiments.curve_rows(args.which, args.grid)
    if args.format == "json":
        header = experiments.CURVE_HEADERS[args.which]
        return [dict(zip(header, r)) for r in rows], "json"
    return (experiments.CURVE_HEADERS[args.which], rows), "csv"


def cmd_thresholds(args):
    if args.d is None:
        raise UsageError("--d is required")
    return selection.plan_thresholds(args.n, args.d, args.dstar, args.A, args.vartheta).to_dict(), "json"


def cmd_select(args):
    sample = fourier.WhiteNoiseSample.from_json_dict(json.loads(Path(args.sample).read_text()))
    if args.grid:
        res = selection.select_adaptive(sample, args.grid, args.dstar)
    else:
        plan = selection.plan_thresholds(sample.n, sample.d, args.dstar, args.A, args.vartheta)
        res = selection.select(sample, plan, args.variant)
    return res.to_dict(), "json"


def cmd_simulate_gwn(args):
    f = _instance(args, args.d)
    plan = selection.plan_thresholds(args.n, f.d, args.dstar, args.A, args.vartheta)
    return selection.simulate_for_plan(f, plan, args.seed).to_json_dict(), "json"


def cmd_simulate_reg(args):
    f = _instance(args, args.d)
    g = experiments.make_density(args.density)
    s = regression.simulate_regression(f, args.n, args.sigma, g, args.seed)
    header = [f"x{j}" for j in range(s.d)] + ["y"]
    rows = np.column_stack([s.X, s.Y]).tolist()
    if args.format == "json":
        return {"sigma": s.sigma, "X": s.X.tolist(), "Y": s.Y.tolist()}, "json"
    return (header, rows), "csv"


def _read_regression(path: str):
    text = Path(path).read_text()
    if path.endswith(".json"):
        data = json.loads(text)
        return np.asarray(data["X"], dtype=float), np.asarray(data["Y"], dtype=float)
    arr = np.loadtxt(io.StringIO(text), delimiter=",", skiprows=1, ndmin=2)
    return arr[:, :-1], arr[:, -1]


def cmd_select_reg(args):
    X, Y = _read_regression(args.data)
    est = regression.FourierScreeningSelector(
        dstar=args.dstar,
        vartheta=args.vartheta,
        sigma=args.sigma,
        L2=args.L2,
        density=experiments.make_density(args.density),
        strategy=args.strategy,
        m=args.m,
        lam=args.lam,
    ).fit(X, Y)
    res = est.result_
    return {
        "selected": [int(j) for j in est.support_],
        "m": est.m_,
        "lambda": est.lam_,
        "early_stop": res.early_stop,
        "levels_scanned": res.levels_scanned,
    }, "json"


def cmd_phase(args):
    rows = experiments.phase_sweep(
        args.n_grid, args.kappa_grid, args.dstar_grid, args.d, args.L, args.tau, args.alpha, args.A
    )
    if args.format == "json":
        return [dict(zip(experiments.PHASE_HEADER, r)) for r in rows], "json"
    return (experiments.PHASE_HEADER, rows), "csv"


def cmd_montecarlo(args):
    cfg = experiments.ExperimentConfig.from_json(args.config)
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    if "seed" in args.explicit:
        overrides["base_seed"] = args.seed
    if "jobs" in args.explicit or os.environ.get(JOBS_ENV):
        overrides["jobs"] = args.jobs
    cfg = dataclasses.replace(cfg, **overrides)
    return experiments.run_monte_carlo(cfg).to_dict(include_log=args.log), "json"


# --------------------------------------------------------------------------


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _render(payload, kind, fmt, stream):
    if kind == "text":
        if fmt == "json":
            json.dump(payload, stream)
        else:
            stream.write(str(payload))
        stream.write("\n")
    elif kind == "csv":
        header, rows = payload
        experiments.write_csv(stream, header, rows)
    else:
        json.dump(payload, stream, sort_keys=True, indent=2, default=_json_default)
        stream.write("\n")


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.explicit = {k for k in ("seed", "jobs", "out", "format") if hasattr(args, k)}
    try:
        args.seed = getattr(args, "seed", 0)
        args.jobs = getattr(args, "jobs", None) or _default_jobs()
        args.out = getattr(args, "out", None)
        args.format = getattr(args, "format", None)
        payload, kind = args.func(args)
    except (UsageError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"npvarsel {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"npvarsel {args.command}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            _render(payload, kind, args.format, fh)
    else:
        _render(payload, kind, args.format, sys.stdout)
    return 0


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
