"""Pairs bootstrap for coefficient t-values and a sample-centred TMSE."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DataValidationError, RedrawCapExceeded
from .pipeline import EstimatorSpec, fit_estimators
from .report import Cell, ReportTable

__all__ = ["BootstrapSummary", "bootstrap_estimates", "bootstrap_metrics", "bootstrap_table"]


@dataclass
class BootstrapSummary:
    names: tuple  # estimator display names, in request order
    coef_names: tuple
    estimates: dict  # name -> full-sample coefficients (original scale)
    phi: dict  # name -> full-sample precision
    sd: dict  # name -> bootstrap sd per coefficient
    t_values: dict  # name -> estimate / sd (inf where sd is 0, nan for exact zeros)
    tmse: dict  # name -> sum_j mean_b (beta_j^(b) - beta_j^(full))^2
    penalty_k: dict  # name -> k used on every resample (None for ML / data-driven selectors)
    B: int
    attempts: int
    seed: int


def _frozen_specs(specs, full):
    # CV-selected LASSO keeps its full-sample k on every resample; ridge
    # selectors are deterministic functions of the data and are recomputed
    out = []
    for spec in specs:
        if spec.method == "lasso" and spec.lasso_k == "cv":
            out.append(EstimatorSpec("lasso", lasso_k=full[spec.name].penalty_k))
        else:
            out.append(spec)
    return out


def _t_value(est, sd):
    if est == 0:
        return math.nan  # exact LASSO zero
    if sd > 0:
        return est / sd
    return math.copysign(math.inf, est)


def bootstrap_estimates(ds, specs, B, seed, lasso_cfg=None):
    """Resample rows with replacement ``B`` times and refit every estimator.

    A resample on which any estimator fails is discarded and redrawn, so
    every estimator sees the same accepted resamples. At most ``2 B``
    resamples are drawn.
    """
    if B < 2:
        raise DataValidationError("bootstrap needs B >= 2")
    specs = [s if isinstance(s, EstimatorSpec) else EstimatorSpec.parse(s) for s in specs]
    names = tuple(s.name for s in specs)
    full = fit_estimators(ds, specs, lasso_cfg)
    bad = [n for n in names if full[n] is None or not full[n].converged]
    if bad:
        raise ConvergenceFailure(f"full-sample fit failed for {', '.join(bad)}")
    resample_specs = _frozen_specs(specs, full)
    keys = [s.name for s in resample_specs]

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed)])))
    draws = {n: [] for n in names}
    attempts = 0
    while len(draws[names[0]]) < B:
        if attempts >= 2 * B:
            raise RedrawCapExceeded(
                f"only {len(draws[names[0]])} of {B} resamples converged in {attempts} attempts"
            )
        attempts += 1
        idx = rng.integers(0, ds.n, ds.n)
        try:
            fits = fit_estimators(ds.subset(idx), resample_specs, lasso_cfg)
        except DataValidationError:
            continue  # e.g. a resample with a constant predictor
        if any(fits[k] is None or not fits[k].converged for k in keys):
            continue
        for name, key in zip(names, keys):
            draws[name].append(fits[key].coef.beta)

    summary = BootstrapSummary(
        names=names,
        coef_names=ds.predictor_names,
        estimates={},
        phi={},
        sd={},
        t_values={},
        tmse={},
        penalty_k={},
        B=int(B),
        attempts=attempts,
        seed=int(seed),
    )
    for spec in specs:
        name = spec.name
        est = np.asarray(full[name].coef.beta)
        D = np.asarray(draws[name])
        sd = D.std(axis=0, ddof=1)
        summary.estimates[name] = est
        summary.phi[name] = full[name].coef.phi
        summary.sd[name] = sd
        summary.t_values[name] = np.array([_t_value(e, s) for e, s in zip(est, sd)])
        summary.tmse[name] = float(np.sum(np.mean((D - est) ** 2, axis=0)))
        summary.penalty_k[name] = full[name].penalty_k if spec.method != "ml" else None
    return summary


def bootstrap_table(summary):
    """Estimates with bootstrap t-values in parentheses, plus a TMSE row."""
    rows = []
    any_inf = False
    for j, coef in enumerate(summary.coef_names):
        row = [coef]
        for name in summary.names:
            est = float(summary.estimates[name][j])
            t = float(summary.t_values[name][j])
            if math.isnan(t):
                row.append(Cell(est))
            else:
                any_inf = any_inf or math.isinf(t)
                row.append(Cell(est, t))
        rows.append(row)
    rows.append(["phi"] + [Cell(summary.phi[n]) for n in summary.names])
    rows.append(["TMSE"] + [Cell(summary.tmse[n]) for n in summary.names])
    rows.append(["k"] + [("" if summary.penalty_k[n] is None else Cell(summary.penalty_k[n])) for n in summary.names])
    notes = [
        f"t-values in parentheses: estimate / bootstrap sd over {summary.B} pairs resamples "
        f"(seed {summary.seed}, {summary.attempts} drawn).",
        "TMSE: sum over coefficients of the mean squared deviation of resample estimates "
        "from the full-sample estimate.",
    ]
    if any_inf:
        notes.append("inf: the coefficient did not vary across resamples.")
    if any(math.isnan(t) for n in summary.names for t in summary.t_values[n]):
        notes.append("no t-value: the full-sample estimate is exactly 0.")
    return ReportTable("bootstrap estimates", ("parameter",) + summary.names, rows, tuple(notes))


def bootstrap_metrics(ds, specs, B, seed, lasso_cfg=None):
    """Run the pairs bootstrap and return the report table."""
    return bootstrap_table(bootstrap_estimates(ds, specs, B, seed, lasso_cfg))
