"""Command-line entry point: ``zosmooth <subcommand> [options]``.

Every subcommand prints a JSON document on stdout.  ``sweep`` additionally
writes its table to ``--out`` (default: ``$ZOSMOOTH_OUTPUT_DIR/sweep.<fmt>``).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import diagnostics
from .harness import (COLUMNS, SweepSpec, default_output_dir, emit_results, fit_loglog,
                      load_config, parse_T_values, read_results, run_sweep)
from .kernels import build_legendre_kernel, check_kernel, moment_table
from .optimizer import run
from .problems import make_noise

# (flag, SweepSpec field, type)
_SPEC_FLAGS = [
    ("--objective", "objective", str),
    ("--d", "d", int),
    ("--alpha", "alpha", float),
    ("--beta", "beta", float),
    ("--c4", "c4", float),
    ("--radius", "radius", float),
    ("--noise", "noise", str),
    ("--sigma", "sigma", float),
    ("--pattern", "pattern", str),
    ("--schedule", "schedule", str),
    ("--estimator", "estimator", str),
    ("--averaging", "averaging", str),
    ("--minvalue", "minvalue", str),
    ("--sigma3", "sigma3", float),
    ("--x1-offset", "x1_offset", float),
]


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=None, help="base seed")
    p.add_argument("--reps", type=int, default=None, help="replications")
    p.add_argument("--config", type=Path, default=None, help="key = value file of sweep fields")


def _spec_flags(p: argparse.ArgumentParser, with_grid: bool = True):
    for flag, _, typ in _SPEC_FLAGS:
        p.add_argument(flag, type=typ, default=None)
    if with_grid:
        p.add_argument("--T-values", type=parse_T_values, default=None,
                       help="comma list or 2^a..2^b")


def _build_spec(args, **base) -> SweepSpec:
    """Defaults, then ``base``, then the config file, then explicit flags."""
    values = dict(base)
    if args.config is not None:
        values.update(load_config(args.config))
    for _, name, _ in _SPEC_FLAGS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if getattr(args, "T_values", None) is not None:
        values["T_values"] = args.T_values
    if getattr(args, "T", None) is not None:
        values["T_values"] = [args.T]
    if args.seed is not None:
        values["seed"] = args.seed
    if args.reps is not None:
        values["replications"] = args.reps
    known = {f.name for f in fields(SweepSpec)}
    return SweepSpec(**{k: v for k, v in values.items() if k in known})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _print(doc):
    json.dump(_jsonable(doc), sys.stdout, indent=1)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------

def cmd_kernel(args):
    k = build_legendre_kernel(args.beta)
    _print({"beta": k.beta, "ell": k.ell, "coefficients": list(k.coeffs),
            "kappa": k.kappa, "kappa_beta": k.kappa_beta,
            "moments_ok": check_kernel(k), "moments": moment_table(k)})


def cmd_run(args):
    spec = _build_spec(args)
    spec.validate()
    obj = spec.build_objective()
    T = spec.T_values[0]
    cfg = spec.build_config(obj, T)
    cfg.stream_id = args.stream
    cfg.record_values = False
    traj = run(cfg, obj, make_noise(spec.noise, spec.sigma, spec.pattern))
    xb = traj.averaged_point
    _print({
        "objective": obj.name, "d": obj.dim, "T": T, "T0": traj.T0, "seed": spec.seed,
        "stream": args.stream, "schedule": spec.schedule, "estimator": spec.estimator,
        "averaging": spec.averaging, "averaged_point": xb, "final_point": traj.final_point,
        "opt_error": float(obj(xb)) - obj.fmin,
        "sq_dist": float(np.sum((xb - obj.minimizer) ** 2)),
        "regret": traj.value_sum - T * obj.fmin,
        "queries_used": traj.queries_used, "feasible": traj.feasible, "warnings": traj.warnings,
    })


def cmd_sweep(args):
    spec = _build_spec(args)
    rows = run_sweep(spec, workers=args.workers)
    out = args.out or spec.output or default_output_dir() / f"sweep.{args.format}"
    emit_results(rows, args.format, out)
    doc = {"output": str(out), "rows": len(rows)}
    if len(rows) >= 3:
        for col in ("mean_opt_error", "mean_regret"):
            if all(r[col] > 0 for r in rows):
                doc[f"slope_{col}"] = fit_loglog([(r["T"], r[col]) for r in rows]).slope
    _print(doc)


def cmd_rates(args):
    rows = read_results(args.input)
    keys = ("d", "alpha", "beta", "sigma", "schedule", "estimator")
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(r)
    fits = []
    for key, grp in groups.items():
        pts = [(r["T"], r[args.column]) for r in grp if r[args.column] is not None]
        entry = dict(zip(keys, key))
        try:
            fit = fit_loglog(pts)
            entry.update(slope=fit.slope, intercept=fit.intercept,
                         stderr_slope=fit.stderr_slope, r_squared=fit.r_squared)
        except ValueError as exc:
            entry["error"] = str(exc)
        fits.append(entry)
    _print({"input": str(args.input), "column": args.column, "fits": fits})


def cmd_validate_bias(args):
    spec = _build_spec(args, objective="quartic_one_sided", d=2, beta=4.0, estimator="kernel")
    obj = spec.build_objective()
    kernel = build_legendre_kernel(spec.beta) if spec.estimator == "kernel" else None
    _print(diagnostics.bias_report(obj, obj.minimizer, _floats(args.hs), kernel,
                                   n=args.n, seed=spec.seed))


def cmd_validate_variance(args):
    spec = _build_spec(args, objective="quadratic", d=3, beta=2.0, estimator="kernel")
    obj = spec.build_objective()
    kernel = build_legendre_kernel(spec.beta) if spec.estimator == "kernel" else None
    x = obj.minimizer.copy()
    x[0] += spec.x1_offset * obj.domain_radius
    _print(diagnostics.variance_report(obj, [x], _floats(args.hs), _floats(args.sigmas),
                                       kernel, n=args.n, seed=spec.seed))


def cmd_minvalue(args):
    spec = _build_spec(args, objective="quadratic", d=3, minvalue="third")
    _print(diagnostics.minvalue_table(spec, frozen=args.frozen))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zosmooth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kernel", help="kernel coefficients, constants and moments")
    _common(p)
    p.add_argument("--beta", type=float, required=True)
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("run", help="one optimizer run, JSON summary")
    _common(p)
    _spec_flags(p, with_grid=False)
    p.add_argument("--T", type=int, default=None)
    p.add_argument("--stream", type=int, default=0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="replicated sweep over a T grid")
    _common(p)
    _spec_flags(p)
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("rates", help="log-log fits from an existing result file")
    _common(p)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--column", choices=[c for c in COLUMNS if c.startswith("mean_")],
                   default="mean_opt_error")
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("validate-bias", help="zero-noise bias vs h")
    _common(p)
    _spec_flags(p, with_grid=False)
    p.add_argument("--hs", default="0.4,0.2,0.1,0.05")
    p.add_argument("--n", type=int, default=100_000)
    p.set_defaults(func=cmd_validate_bias)

    p = sub.add_parser("validate-variance", help="second moment vs closed-form bounds")
    _common(p)
    _spec_flags(p, with_grid=False)
    p.add_argument("--hs", default="0.05,0.2,0.5")
    p.add_argument("--sigmas", default="0,0.5,1")
    p.add_argument("--n", type=int, default=20_000)
    p.set_defaults(func=cmd_validate_variance)

    p = sub.add_parser("minvalue", help="min-value error per T")
    _common(p)
    _spec_flags(p)
    p.add_argument("--frozen", action="store_true", help="keep iterates at the minimizer")
    p.set_defaults(func=cmd_minvalue)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"zosmooth: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
