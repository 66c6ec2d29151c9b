"""Command-line entry point: ``fit``, ``simulate`` and ``diagnose``.

Exit codes: 0 success, 2 invalid input, 3 convergence failure, 1 other I/O errors.
"""

import argparse
import logging
import math
import os
import sys

from . import __version__
from .bootstrap import bootstrap_estimates, bootstrap_table
from .diagnostics import condition_number, correlation_scan, ks_goodness_of_fit
from .dataio import RunConfig, emit_report, load_csv, write_manifest, write_plot_data
from .errors import BetaShrinkError, ConvergenceFailure, DataValidationError, DegenerateFit
from .estimators import LassoConfig
from .pipeline import EstimatorSpec, fit_estimators, parse_estimators
from .report import Cell, ReportTable
from .simulation import SimDesign, run_experiment, write_sim_csv

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_CONVERGENCE = 0, 1, 2, 3

log = logging.getLogger("betashrink")


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _floats(text):
    try:
        return [float(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in _csv_list(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _fit_specs(args):
    specs = []
    for method in _csv_list(args.method):
        method = method.lower()
        if method == "ml":
            specs.append(EstimatorSpec.parse("ml"))
        elif method == "ridge":
            specs.append(EstimatorSpec.parse(f"ridge:{args.ridge_k}"))
        elif method == "lasso":
            specs.append(EstimatorSpec.parse(f"lasso:{args.lasso_k}"))
        else:
            raise DataValidationError(f"unknown method {method!r}; use ml, ridge or lasso")
    if not specs:
        raise DataValidationError("no estimation method given")
    return specs


def _estimates_table(ds, fits, names):
    rows = []
    for j, coef in enumerate(ds.predictor_names):
        rows.append([coef] + [Cell(float(fits[n].coef.beta[j])) for n in names])
    rows.append(["phi"] + [Cell(fits[n].coef.phi) for n in names])
    rows.append(["loglik"] + [Cell(fits[n].loglik) for n in names])
    rows.append(["k"] + [Cell(fits[n].penalty_k) for n in names])
    rows.append(["iterations"] + [fits[n].iterations for n in names])
    return ReportTable("estimates", ("parameter",) + tuple(names), rows)


def cmd_fit(args):
    predictors = _csv_list(args.predictors) if args.predictors else None
    specs = _fit_specs(args)
    cfg = RunConfig(
        mode="fit",
        input_path=args.input,
        response_column=args.response,
        predictor_columns=predictors,
        response_scale=args.scale,
        estimators=tuple(s.name for s in specs),
        bootstrap_B=args.bootstrap,
        seed=args.seed,
        output_dir=args.out,
        extra={"ridge_k": args.ridge_k, "lasso_k": args.lasso_k},
    )
    ds = load_csv(cfg)
    lasso_cfg = LassoConfig(cv_seed=args.seed)
    names = [s.name for s in specs]
    fits = fit_estimators(ds, specs, lasso_cfg)
    bad = [n for n in names if fits[n] is None or not fits[n].converged]
    if bad:
        raise ConvergenceFailure(f"fit did not converge for {', '.join(bad)}")
    tables = [_estimates_table(ds, fits, names)]
    if args.bootstrap > 0:
        summary = bootstrap_estimates(ds, specs, args.bootstrap, args.seed, lasso_cfg)
        tables.append(bootstrap_table(summary))
    paths = emit_report(tables, args.out)
    paths.append(write_manifest(cfg, args.out, paths, __version__))
    for t in tables:
        print(t.text())
    return EXIT_OK


def cmd_simulate(args):
    specs = parse_estimators(args.estimators)
    cfg = RunConfig(
        mode="simulate",
        estimators=tuple(s.name for s in specs),
        seed=args.seed,
        output_dir=args.out,
        extra={
            "n": args.n,
            "p_slopes": args.p_slopes,
            "zero_tail": args.zero_tail,
            "phi": args.phi,
            "rho_grid": args.rho_grid,
            "reps": args.reps,
        },
    )
    try:
        designs = [
            [
                SimDesign(
                    n=n, p_slopes=args.p_slopes, zero_tail=args.zero_tail, phi=phi,
                    rho=rho, n_reps=args.reps, seed=args.seed, estimators=specs,
                )
                for rho in args.rho_grid
            ]
            for n in args.n
            for phi in args.phi
        ]
    except ValueError as exc:
        raise DataValidationError(str(exc)) from exc

    names = [s.name for s in specs]
    all_results, tables, plot_paths = [], [], []
    single = len(designs) == 1
    for group in designs:
        results = []
        for d in group:
            log.info("simulating n=%d phi=%g rho=%g (%d reps)", d.n, d.phi, d.rho, d.n_reps)
            results.append(run_experiment(d))
        all_results.extend(results)
        d0 = group[0]
        label = f"n{d0.n}_phi{d0.phi:g}"
        rows = []
        for res in results:
            row = [float(res.design.rho)] + [Cell(res.tmse[n]) for n in names]
            row.append(max(res.failures.values()))
            if d0.zero_tail > 0:
                row.append(Cell(res.selection_rate) if res.selection_rate is not None else "")
                row.append(Cell(res.selection_rate_any) if res.selection_rate_any is not None else "")
            rows.append(row)
        cols = ["rho"] + names + ["max_failures"]
        if d0.zero_tail > 0:
            cols += ["selection_all_pct", "selection_any_pct"]
        notes = [f"TMSE over {d0.n_reps} replications, n={d0.n}, phi={d0.phi:g}, "
                 f"{d0.p_slopes} slopes ({d0.zero_tail} zero), seed {d0.seed}."]
        tables.append(ReportTable(f"tmse_{label}", cols, rows, notes))
        plot_rows = [(res.design.rho, n, res.tmse[n]) for n in names for res in results]
        fname = "plot_data.csv" if single else f"plot_data_{label}.csv"
        plot_paths.append(write_plot_data(plot_rows, os.path.join(args.out, fname)))

    paths = emit_report(tables, args.out)
    paths.append(write_sim_csv(all_results, os.path.join(args.out, "simulation.csv")))
    paths.extend(plot_paths)
    paths.append(write_manifest(cfg, args.out, paths, __version__))
    for t in tables:
        print(t.text())
    return EXIT_OK


def cmd_diagnose(args):
    predictors = _csv_list(args.predictors) if args.predictors else None
    cfg = RunConfig(
        mode="diagnose",
        input_path=args.input,
        response_column=args.response,
        predictor_columns=predictors,
        response_scale=args.scale,
        estimators=(),
        seed=args.seed,
        output_dir=args.out,
        extra={"ks_bootstrap": args.ks_bootstrap},
    )
    ds = load_csv(cfg)

    def cond(value):
        return value if math.isfinite(value) else "inf (singular X'X)"

    collin = ReportTable(
        "collinearity",
        ("quantity", "value"),
        [
            ("condition number, predictors", cond(condition_number(ds))),
            ("condition number, with intercept", cond(condition_number(ds, include_intercept=True))),
        ],
        ("sqrt(max/min eigenvalue) of X'X on the raw (unstandardized) design.",),
    )
    ks_rows = []
    for family in ("normal", "beta"):
        r = ks_goodness_of_fit(ds.response, family, bootstrap=args.ks_bootstrap, seed=args.seed)
        ks_rows.append((family, ", ".join(f"{p:.6g}" for p in r.params), r.statistic, r.p_value, r.method))
    ks = ReportTable("ks_goodness_of_fit", ("family", "fitted parameters", "statistic", "p_value", "p_value method"), ks_rows)
    tables = [collin, correlation_scan(ds), ks]
    paths = emit_report(tables, args.out)
    paths.append(write_manifest(cfg, args.out, paths, __version__))
    for t in tables:
        print(t.text())
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="betashrink", description="Beta regression with ridge and LASSO shrinkage.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="fit estimators to a CSV file")
    f.add_argument("--input", required=True)
    f.add_argument("--response", required=True)
    f.add_argument("--predictors", help="comma-separated column names (default: all others)")
    f.add_argument("--scale", choices=("none", "percent"), default="none")
    f.add_argument("--method", default="ml", help="ml, ridge, lasso, or a comma-separated list")
    f.add_argument("--ridge-k", default="med", help="hk, med, max, min, or a number")
    f.add_argument("--lasso-k", default="cv", help="cv or a number")
    f.add_argument("--bootstrap", type=int, default=0, metavar="B")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate", help="Monte Carlo comparison of the estimators")
    s.add_argument("--n", type=_ints, required=True, help="sample size(s), comma-separated")
    s.add_argument("--p-slopes", type=int, required=True)
    s.add_argument("--zero-tail", type=int, default=0)
    s.add_argument("--phi", type=_floats, default=[1.0], help="precision value(s), comma-separated")
    s.add_argument("--rho-grid", type=_floats, required=True)
    s.add_argument("--reps", type=int, default=500)
    s.add_argument("--estimators", default="ml,ridge:med,lasso:cv")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("diagnose", help="collinearity and distribution diagnostics")
    d.add_argument("--input", required=True)
    d.add_argument("--response", required=True)
    d.add_argument("--predictors")
    d.add_argument("--scale", choices=("none", "percent"), default="none")
    d.add_argument("--ks-bootstrap", type=int, default=0, metavar="B", help="parametric bootstrap KS p-values")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (DataValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ConvergenceFailure, DegenerateFit) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except BetaShrinkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
