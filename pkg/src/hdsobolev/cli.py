"""Command-line interface.

Exit codes: 0 success, 1 computation error, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from . import montecarlo
from .radial import BootstrapConfig, parse_null
from .sampling import RngStream
from .sobolev import SphereSample, parse_scheme, statistic
from .specfun import DomainError
from .symmetry import gof_composite, gof_simple, rotsym_test

__all__ = ["main", "build_parser", "read_matrix", "UsageError"]

log = logging.getLogger("hdsobolev")

SPHERE_MODELS = {"uniform", "vmf", "integrated_vmf", "tangent_vmf", "integrated_tangent_vmf"}


class UsageError(Exception):
    """Bad arguments or unreadable input; exit code 2."""


def read_matrix(path, delimiter=",", header=False) -> np.ndarray:
    """Numeric CSV as an ``n x p`` array, with row/column-indexed errors.

    Rows and columns in messages are 1-based and count the header line.
    """
    try:
        handle = open(path, newline="")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    rows = []
    with handle:
        for lineno, fields in enumerate(csv.reader(handle, delimiter=delimiter), start=1):
            if header and lineno == 1:
                continue
            if not fields or all(not f.strip() for f in fields):
                continue
            try:
                values = [float(f) for f in fields]
            except ValueError:
                col = next(i for i, f in enumerate(fields, 1) if not _is_float(f))
                raise UsageError(f"{path}: row {lineno}, column {col}: not a number: {fields[col - 1]!r}") from None
            if rows and len(values) != len(rows[0]):
                raise UsageError(f"{path}: row {lineno} has {len(values)} columns, expected {len(rows[0])}")
            if not all(np.isfinite(values)):
                col = next(i for i, v in enumerate(values, 1) if not np.isfinite(v))
                raise UsageError(f"{path}: row {lineno}, column {col}: value is not finite")
            rows.append(values)
    if not rows:
        raise UsageError(f"{path}: no data rows")
    return np.array(rows)


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def _sphere_sample(x, normalize):
    if normalize:
        return SphereSample.from_points(x, normalize=True)
    try:
        return SphereSample(x)
    except ValueError as exc:
        raise UsageError(f"{exc}; pass --normalize to project rows onto the sphere") from None


def _theta(text, delimiter, dim):
    if Path(text).exists():
        theta = read_matrix(text, delimiter).ravel()
    elif text == "e1":
        theta = np.eye(dim)[0]
    else:
        try:
            theta = np.array([float(v) for v in text.split(",")])
        except ValueError:
            raise UsageError(f"--theta: {text!r} is neither a file, 'e1', nor a list of numbers") from None
    if theta.size != dim:
        raise UsageError(f"--theta has {theta.size} entries, data have {dim} columns")
    norm = np.linalg.norm(theta)
    if abs(norm - 1.0) > 1e-9:
        raise UsageError(f"--theta must be a unit vector (norm {norm:.12g})")
    return theta / norm


def _emit(report: dict, args, order=None):
    if args.json:
        print(json.dumps(report, indent=2, default=float))
        return
    keys = order or list(report)
    width = max(len(k) for k in keys)
    for k in keys:
        v = report[k]
        print(f"{k:<{width}}  {v!r}" if isinstance(v, float) else f"{k:<{width}}  {v}")


def _decision(report: dict, level: float) -> dict:
    report["level"] = level
    report["reject"] = bool(report["p_value"] < level)
    return report


# ---------------------------------------------------------------------------
# subcommands


def cmd_uniformity(args):
    x = read_matrix(args.input, args.delim, args.header)
    sample = _sphere_sample(x, args.normalize)
    report = statistic(sample, parse_scheme(args.scheme)).to_dict()
    _emit(_decision(report, args.level), args)
    return 0


def cmd_rotsym(args):
    x = read_matrix(args.input, args.delim, args.header)
    sample = _sphere_sample(x, args.normalize)
    theta = _theta(args.theta, args.delim, x.shape[1])
    report = rotsym_test(sample, theta, parse_scheme(args.scheme)).to_dict()
    _emit(_decision(report, args.level), args)
    return 0


def cmd_gof(args):
    x = read_matrix(args.input, args.delim, args.header)
    try:
        null = parse_null(args.family, x.shape[1])
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scheme = parse_scheme(args.scheme)
    if null.composite:
        cfg = BootstrapConfig(args.bootstrap or 200, RngStream(args.seed))
        report = gof_composite(x, null, scheme, cfg)
    else:
        if args.bootstrap:
            raise UsageError(f"--bootstrap needs a family with estimated parameters, got {args.family!r}")
        report = gof_simple(x, null, scheme)
    _emit(_decision(report.to_dict(), args.level), args)
    return 0


def cmd_simulate(args):
    if args.list:
        for name in montecarlo.bundled_scenarios():
            print(name)
        return 0
    if not args.scenario:
        raise UsageError("simulate needs --scenario (or --list)")
    try:
        cells = montecarlo.load_scenarios(args.scenario, M=args.M, B=args.B, base_seed=args.seed)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    except (yaml.YAMLError, jsonschema.ValidationError, ValueError) as exc:
        raise UsageError(f"invalid scenario {args.scenario}: {exc}") from None
    if args.n:
        cells = [c for c in cells if c.n in args.n]
    if args.d:
        cells = [c for c in cells if c.d in args.d]
    if not cells:
        raise UsageError("no scenario cell matches the --n/--d filters")
    workers = args.workers or montecarlo.default_workers()
    rows = [montecarlo.run_scenario(c, workers) for c in cells]
    text = montecarlo.rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.json_out:
        Path(args.json_out).write_text(montecarlo.rows_to_json(rows) + "\n")
    return 0


def _key_values(text):
    out = {}
    for item in filter(None, (text or "").split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"expected key=value, got {item!r}")
        try:
            out[key.strip()] = float(value) if value.strip() != "d" else "d"
        except ValueError:
            out[key.strip()] = value.strip()
    return out


def cmd_dist(args):
    kind, _, params = args.model.partition(":")
    spec = {"type": kind, **_key_values(params)}
    if args.radius:
        family, _, rparams = args.radius.partition(":")
        spec = {"type": "product", "base": spec, "radius": {"family": family, **_key_values(rparams)}}
    try:
        jsonschema.validate(spec, montecarlo.SCENARIO_SCHEMA["definitions"]["model"]
                                       | {"definitions": montecarlo.SCENARIO_SCHEMA["definitions"]})
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid model: {exc.message}") from None
    sphere = kind in SPHERE_MODELS and not args.radius
    dim = args.d + 1 if sphere else args.d
    try:
        model = montecarlo.build_model(spec, dim, args.n)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"invalid model parameters: {exc}") from None
    x = model.sample(RngStream(args.seed), args.n)
    x = x.data if isinstance(x, SphereSample) else x
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, delimiter=args.delim, lineterminator="\n")
        for row in x:
            w.writerow([repr(float(v)) for v in row])
    finally:
        if args.out:
            out.close()
    return 0


def cmd_selftest(args):
    from .oracles import run_oracles

    results = run_oracles()
    if args.json:
        print(json.dumps([{"name": r.name, "value": r.value, "threshold": r.threshold, "passed": r.passed}
                          for r in results], indent=2))
    else:
        for r in results:
            print(r.line())
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed for all randomness (default 0)")
    common.add_argument("--json", action="store_true", help="print a JSON document instead of text")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="CSV file, one observation per row")
    data.add_argument("--header", action="store_true", help="skip the first line of the CSV")
    data.add_argument("--delim", default=",", help="CSV delimiter (default ',')")
    data.add_argument("--level", type=float, default=0.05, help="significance level (default 0.05)")
    data.add_argument("--scheme", default="rayleigh",
                      help="rayleigh, bingham, k:K, finite:K, hybrid[:K1,K2,...] or decay:K")

    parser = argparse.ArgumentParser(prog="hdsobolev", description="Sobolev tests of uniformity and symmetry.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("uniformity", parents=[common, data], help="test uniformity on the sphere")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit norm instead of checking them")
    p.set_defaults(func=cmd_uniformity)

    p = sub.add_parser("rotsym", parents=[common, data], help="test rotational symmetry about an axis")
    p.add_argument("--theta", required=True, help="axis: CSV file, comma list, or 'e1'")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit norm instead of checking them")
    p.set_defaults(func=cmd_rotsym)

    p = sub.add_parser("gof", parents=[common, data], help="test spherical symmetry with a radial null")
    p.add_argument("--family", required=True,
                   help="normal, student:NU, student-est, stable:BETA, gamma:SHAPE,SCALE or gamma-est "
                        "(append :radius to model the radius rather than its square)")
    p.add_argument("--bootstrap", type=int, metavar="B", help="bootstrap size for estimated families (default 200)")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo scenario")
    p.add_argument("--scenario", help="scenario YAML file or bundled scenario id")
    p.add_argument("--list", action="store_true", help="list bundled scenarios")
    p.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.add_argument("--json-out", help="also write a JSON report, including wall times")
    p.add_argument("--M", type=int, help="override the replicate count")
    p.add_argument("--B", type=int, help="override the bootstrap size")
    p.add_argument("--n", type=int, nargs="+", help="only run cells with these sample sizes")
    p.add_argument("--d", type=int, nargs="+", help="only run cells with these dimensions")
    p.set_defaults(func=cmd_simulate, seed=None)

    p = sub.add_parser("dist", parents=[common], help="draw a sample and print it as CSV")
    p.add_argument("--model", required=True,
                   help="TYPE[:key=value,...], e.g. uniform, vmf:kappa=4, t:nu=5,scale=0.8, dmn:rho=0.5")
    p.add_argument("--radius", help="FAMILY[:key=value,...]; multiplies the model by this radius")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True,
                   help="sphere dimension for sphere models (d+1 columns), otherwise number of columns")
    p.add_argument("--out")
    p.add_argument("--delim", default=",")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("selftest", parents=[common], help="run the numerical oracle suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    for name in ("n", "d", "M", "B", "workers", "bootstrap"):
        value = getattr(args, name, None)
        values = value if isinstance(value, list) else [value]
        if any(v is not None and v < 1 for v in values):
            parser.print_usage(sys.stderr)
            print(f"hdsobolev: error: --{name} must be positive", file=sys.stderr)
            return 2
    level = getattr(args, "level", 0.05)
    if not 0 < level < 1:
        print("hdsobolev: error: --level must lie in (0, 1)", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"hdsobolev: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"hdsobolev: computation failed: {exc}", file=sys.stderr)
        return 1
