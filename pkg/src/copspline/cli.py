"""Command line interface: ``copspline {fit,simulate,evaluate,benchmark}``.

Exit codes: 0 success, 2 parse/input errors, 3 configuration errors,
4 numerical failures.
"""
import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .copulas import CopulaModel
from .estimator import SCHEMA_VERSION, CopulaDensityEstimate, fit_copula_density
from .exceptions import (ConfigurationError, ConvergenceError, DimensionError, DomainError,
                         EvaluationError, ParseError, UnsupportedOperationError)
from .io import (file_digest, load_marginals, load_model, read_json, read_samples_csv,
                 write_samples_csv)
from .simulation import default_workers, run_benchmark

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_CONFIG = 3
EXIT_NUMERIC = 4

logger = logging.getLogger("copspline")


class _JsonFormatter(logging.Formatter):
    def format(self, record):
        return json.dumps({"level": record.levelname, "logger": record.name,
                           "message": record.getMessage(), "time": record.created})


def _setup_logging(quiet, json_logs):
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonFormatter() if json_logs
                         else logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    root = logging.getLogger("copspline")
    root.handlers[:] = [handler]
    root.setLevel(logging.WARNING if quiet else logging.INFO)
    root.propagate = False


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got %r" % text)
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)


def _dump_json(path, data):
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=2) + "\n")


def _write_manifest(path, command, config, inputs, seed, started):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "duration_seconds": time.perf_counter() - started,
    }
    _dump_json(path, manifest)


def _expand_grid(grid, d):
    if grid is None:
        return None
    if len(grid) == 1:
        return tuple(grid) * d
    if len(grid) != d:
        raise ConfigurationError("--grid has %d entries but the data has %d columns"
                                 % (len(grid), d))
    return tuple(grid)


# -- subcommands -------------------------------------------------------------


def cmd_fit(args):
    started = time.perf_counter()
    data = read_samples_csv(args.data)
    grid = _expand_grid(args.grid, data.shape[1])
    if args.lam > 0 and args.marginals is None:
        raise ConfigurationError("--marginals is required when --lambda > 0")
    marginals = load_marginals(args.marginals) if args.marginals is not None else None
    estimate = fit_copula_density(data, grid=grid, lam=args.lam, marginals=marginals,
                                  tol=args.tol, max_iter=args.max_iter)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "estimate.json").write_text(estimate.to_json())
    if args.export_grid:
        _export_density_grid(out / "density.csv", estimate, args.export_grid)
    inputs = [args.data] + ([args.marginals] if args.marginals else [])
    config = {"grid": list(estimate.grid.intervals), "lambda": args.lam,
              "marginals": str(args.marginals) if args.marginals else None,
              "tol": args.tol, "max_iter": args.max_iter, "export_grid": args.export_grid}
    _write_manifest(out / "manifest.json", "fit", config, inputs, None, started)
    logger.info("fit: n=%d grid=%s objective=%.6g", data.shape[0],
                estimate.grid.intervals, estimate.diagnostics["objective"])
    return EXIT_OK


def _export_density_grid(path, estimate, resolution):
    x = (np.arange(resolution) + 0.5) / resolution
    mesh = np.meshgrid(*([x] * estimate.dims), indexing="ij")
    points = np.column_stack([g.ravel() for g in mesh])
    values = estimate.evaluate(points)
    header = ["u%d" % (i + 1) for i in range(estimate.dims)] + ["density"]
    write_samples_csv(path, np.column_stack([points, values]), header=header)


def cmd_simulate(args):
    started = time.perf_counter()
    model = load_model(args.model)
    if args.n < 1:
        raise ConfigurationError("--n must be >= 1")
    X = model.sample(args.n, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_samples_csv(out, X)
    config = {"model": model.to_dict(), "n": args.n}
    _write_manifest(out.with_name(out.name + ".manifest.json"), "simulate", config,
                    [args.model], args.seed, started)
    return EXIT_OK


def cmd_evaluate(args):
    started = time.perf_counter()
    if args.truth is None and args.points is None:
        raise ConfigurationError("give --truth and/or --points")
    estimate = CopulaDensityEstimate.from_dict(read_json(args.estimate))
    report = {"schema_version": SCHEMA_VERSION, "grid": list(estimate.grid.intervals)}
    inputs = [args.estimate]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.truth is not None:
        truth = load_model(args.truth)
        if truth.d != estimate.dims:
            raise DimensionError("truth has d=%d but the estimate has d=%d"
                                 % (truth.d, estimate.dims))
        report["l2_error"] = estimate.error_report(truth)
        report["truth"] = truth.to_dict()
        inputs.append(args.truth)
    if args.points is not None:
        points = read_samples_csv(args.points)
        if points.shape[1] != estimate.dims:
            raise DimensionError("points have %d columns but the estimate has d=%d"
                                 % (points.shape[1], estimate.dims))
        values = estimate.evaluate(points)
        dens_path = out.with_name(out.stem + ".densities.csv")
        header = ["u%d" % (i + 1) for i in range(estimate.dims)] + ["density"]
        write_samples_csv(dens_path, np.column_stack([points, values]), header=header)
        report["densities"] = [float(v) for v in values]
        report["densities_csv"] = dens_path.name
        inputs.append(args.points)
    _dump_json(out, report)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "evaluate",
                    {"truth": str(args.truth), "points": str(args.points)}, inputs,
                    None, started)
    return EXIT_OK


def cmd_benchmark(args):
    started = time.perf_counter()
    if args.seed is None:
        raise ConfigurationError("--seed is required in benchmark mode")
    if args.reps < 1:
        raise ConfigurationError("--reps must be >= 1")
    model = load_model(args.model)
    grid = _expand_grid(args.grid, model.d)
    marginals = load_marginals(args.marginals) if args.marginals else None
    workers = args.workers or default_workers()
    errors, moments = run_benchmark(model, args.ns, args.reps, args.lambdas, args.seed,
                                    grid=grid, marginals=marginals, n_jobs=workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "errors.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "lambda", "rep", "l2_error", "runtime", "status"])
        for r in errors:
            writer.writerow([r.n, repr(r.lam), r.rep, repr(r.l2_error),
                             "%.6f" % r.runtime, r.status])
    with (out / "moment-error.csv").open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "rep", "t", "sq_error"])
        for r in moments:
            writer.writerow([r.n, r.rep, r.t, repr(r.sq_error)])
    config = {"model": model.to_dict(), "ns": args.ns, "reps": args.reps,
              "grid": list(grid) if grid else None, "lambdas": args.lambdas,
              "marginals": str(args.marginals) if args.marginals else None,
              "workers": workers}
    inputs = [args.model] + ([args.marginals] if args.marginals else [])
    _write_manifest(out / "manifest.json", "benchmark", config, inputs, args.seed, started)
    failed = sum(r.status != "ok" for r in errors)
    if failed:
        logger.warning("benchmark: %d of %d fits failed", failed, len(errors))
    return EXIT_OK


# -- entry point -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    parser = _Parser(prog="copspline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    parser.add_argument("--json-logs", action="store_true", help="log JSON lines to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit a copula density to a sample CSV")
    p.add_argument("data", help="CSV with n rows and d numeric columns")
    p.add_argument("--grid", type=_int_list,
                   help="cells per dimension, e.g. 4,4 (one value applies to all)")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="penalty weight (default 1.0)")
    p.add_argument("--marginals", help="model JSON, pairs JSON or directory of grid CSVs")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--export-grid", type=int, default=0, metavar="R",
                   help="also write density.csv on an R^d midpoint grid")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", help="draw a sample from a copula model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="L2 error against a model and/or pointwise densities")
    p.add_argument("--estimate", required=True)
    p.add_argument("--truth", help="model JSON")
    p.add_argument("--points", help="CSV of points in [0,1]^d")
    p.add_argument("--out", required=True, help="report JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark", help="error versus n Monte Carlo sweep")
    p.add_argument("--model", required=True)
    p.add_argument("--ns", type=_int_list, required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--grid", type=_int_list)
    p.add_argument("--lambdas", type=_float_list, default=[0.0, 1.0])
    p.add_argument("--marginals", help="known marginals; defaults to the model's own")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(args.quiet, args.json_logs)
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        logger.error("%s", exc)
        return EXIT_PARSE
    except (ConfigurationError, DomainError, DimensionError,
            UnsupportedOperationError) as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except (ConvergenceError, EvaluationError) as exc:
        logger.error("%s", exc)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
