"""Monte Carlo comparison of ML, ridge and LASSO under collinear designs.

Each replication draws its own design and response from a substream keyed on
``(seed, replication)``, so results are reproducible and adding estimators
never perturbs the draws. All estimators in a replication see the same data.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryDraw, ConvergenceFailure, DomainError
from .estimators import LassoConfig
from .model import Dataset, mean_from_eta
from .pipeline import EstimatorSpec, fit_estimators

__all__ = [
    "SimDesign",
    "SimResult",
    "true_coefficients",
    "equicorrelation_cholesky",
    "generate_design",
    "generate_response",
    "replication_rng",
    "run_experiment",
    "selection_rate_summary",
    "write_sim_csv",
]

MAX_REDRAWS = 100

DEFAULT_ESTIMATORS = ("ml", "ridge:hk", "ridge:med", "ridge:max", "ridge:min", "lasso:cv")


@dataclass(frozen=True)
class SimDesign:
    n: int
    p_slopes: int
    zero_tail: int = 0
    phi: float = 1.0
    rho: float = 0.0
    n_reps: int = 100
    seed: int = 0
    estimators: tuple = DEFAULT_ESTIMATORS
    lasso: LassoConfig = field(default_factory=LassoConfig)

    def __post_init__(self):
        if self.p_slopes < 1 or self.n < 2:
            raise ValueError("need p_slopes >= 1 and n >= 2")
        if not 0 <= self.zero_tail < self.p_slopes:
            raise ValueError("zero_tail must satisfy 0 <= zero_tail < p_slopes")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")
        if self.phi <= 0:
            raise ValueError("phi must be > 0")
        if self.n_reps < 1:
            raise ValueError("n_reps must be >= 1")
        specs = tuple(s if isinstance(s, EstimatorSpec) else EstimatorSpec.parse(s) for s in self.estimators)
        object.__setattr__(self, "estimators", specs)


@dataclass
class SimResult:
    design: SimDesign
    mse_per_coef: dict
    tmse: dict
    failures: dict
    boundary_failures: int = 0  # replications whose response could not be drawn inside (0, 1)
    selection_rate: float = None  # % of replications with every zero-tail slope exactly 0
    selection_rate_any: float = None  # % with at least one of them exactly 0
    selection_estimator: str = None


def true_coefficients(p_slopes, zero_tail=0):
    """Intercept 0, equal non-zero slopes with unit squared norm, zero tail."""
    if not 0 <= zero_tail < p_slopes:
        raise ValueError("zero_tail must satisfy 0 <= zero_tail < p_slopes")
    m = p_slopes - zero_tail
    beta = np.zeros(p_slopes + 1)
    beta[1 : m + 1] = 1.0 / math.sqrt(m)
    return beta


def equicorrelation_cholesky(p, rho):
    """Lower Cholesky factor of the p x p matrix with unit diagonal and rho elsewhere."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("rho must lie in [0, 1)")
    C = np.full((p, p), float(rho))
    np.fill_diagonal(C, 1.0)
    return np.linalg.cholesky(C)


def replication_rng(seed, replication):
    """Independent PCG64 stream for one replication."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(replication)])))


def generate_design(n, p_slopes, rho, rng):
    """Intercept column plus equicorrelated standard-normal predictors."""
    L = equicorrelation_cholesky(p_slopes, rho)
    Z = rng.standard_normal((n, p_slopes))
    return np.column_stack([np.ones(n), Z @ L.T])


def generate_response(X, beta, phi, rng):
    """Beta responses with mean logistic(X beta) and precision phi.

    Drawn as G1 / (G1 + G2) with G1 ~ Gamma(mu phi), G2 ~ Gamma((1 - mu) phi).
    Draws that round to exactly 0 or 1 are redrawn.
    """
    if phi <= 0:
        raise DomainError("phi must be > 0")
    mu = mean_from_eta(np.asarray(X) @ np.asarray(beta))
    a, b = mu * phi, (1.0 - mu) * phi
    y = np.empty(mu.shape[0])
    todo = np.arange(mu.shape[0])
    for _ in range(MAX_REDRAWS):
        g1 = rng.standard_gamma(a[todo])
        g2 = rng.standard_gamma(b[todo])
        with np.errstate(invalid="ignore"):
            y[todo] = g1 / (g1 + g2)
        bad = ~((y[todo] > 0.0) & (y[todo] < 1.0))
        todo = todo[bad]
        if todo.size == 0:
            return y
    raise BoundaryDraw(f"{todo.size} beta draws stayed on the boundary after {MAX_REDRAWS} redraws")


def selection_rate_summary(zero_patterns):
    """Percentages of replications whose zero-tail slopes are all / any exactly 0.

    ``zero_patterns`` is a (replications x zero_tail) boolean array. Returns
    ``(conjunction_percent, disjunction_percent)``.
    """
    pats = np.asarray(zero_patterns, dtype=bool)
    if pats.ndim != 2 or pats.shape[1] < 1:
        raise ValueError("zero patterns need shape (replications, zero_tail >= 1)")
    if pats.shape[0] == 0:
        return float("nan"), float("nan")
    return 100.0 * pats.all(axis=1).mean(), 100.0 * pats.any(axis=1).mean()


def _default_fitters(design):
    specs = design.estimators

    def fit(ds):
        results = fit_estimators(ds, specs, design.lasso)
        out = {}
        for spec in specs:
            res = results.get(spec.name)
            out[spec.name] = res.coef.beta if res is not None and res.converged else None
        return out

    return [s.name for s in specs], fit


def run_experiment(design, fitter=None):
    """Run every replication and aggregate MSE, TMSE and LASSO selection rates.

    ``fitter`` optionally replaces the estimator set: a pair
    ``(names, fn)`` where ``fn(Dataset)`` returns ``{name: beta or None}``
    (``None`` marks a failed fit).
    """
    names, fit = fitter if fitter is not None else _default_fitters(design)
    beta_true = true_coefficients(design.p_slopes, design.zero_tail)
    n_coef = beta_true.size
    sq_err = {name: np.full((design.n_reps, n_coef), np.nan) for name in names}
    zero_tail = design.zero_tail
    lasso_names = [s.name for s in design.estimators if s.method == "lasso"] if fitter is None else []
    sel_name = lasso_names[0] if lasso_names else None
    patterns = []
    boundary = 0

    for r in range(design.n_reps):
        rng = replication_rng(design.seed, r)
        X = generate_design(design.n, design.p_slopes, design.rho, rng)
        try:
            y = generate_response(X, beta_true, design.phi, rng)
        except BoundaryDraw:
            # the replication is counted as failed for every estimator
            boundary += 1
            estimates = {}
        else:
            estimates = fit(Dataset(X, y))
        for name in names:
            est = estimates.get(name)
            if est is None:
                continue
            sq_err[name][r] = (np.asarray(est) - beta_true) ** 2
        if sel_name is not None and zero_tail > 0:
            est = estimates.get(sel_name)
            # a failed fit counts as a replication that did not select
            zeros = np.zeros(zero_tail, bool) if est is None else np.asarray(est)[-zero_tail:] == 0.0
            patterns.append(zeros)

    mse, tmse, failures = {}, {}, {}
    for name in names:
        ok = ~np.isnan(sq_err[name][:, 0])
        failures[name] = int(design.n_reps - ok.sum())
        if not ok.any():
            raise ConvergenceFailure(f"estimator {name} failed in every replication")
        # sequential column sums over replication slots keep the reduction order fixed
        m = np.sum(sq_err[name][ok], axis=0) / ok.sum()
        mse[name] = m
        tmse[name] = float(np.sum(m))

    result = SimResult(
        design=design, mse_per_coef=mse, tmse=tmse, failures=failures, boundary_failures=boundary
    )
    if patterns:
        conj, disj = selection_rate_summary(np.array(patterns))
        result.selection_rate = conj
        result.selection_rate_any = disj
        result.selection_estimator = sel_name
    return result


SIM_CSV_COLUMNS = (
    "n",
    "p_slopes",
    "zero_tail",
    "phi",
    "rho",
    "n_reps",
    "seed",
    "estimator",
    "coef_index",
    "mse",
    "tmse",
    "selection_rate",
    "selection_rate_any",
    "failures",
)


def sim_rows(result):
    d = result.design
    rows = []
    for name, mse in result.mse_per_coef.items():
        is_sel = name == result.selection_estimator
        for j, v in enumerate(mse):
            rows.append(
                (
                    d.n,
                    d.p_slopes,
                    d.zero_tail,
                    repr(float(d.phi)),
                    repr(float(d.rho)),
                    d.n_reps,
                    d.seed,
                    name,
                    j,
                    repr(float(v)),
                    repr(result.tmse[name]),
                    repr(result.selection_rate) if is_sel else "",
                    repr(result.selection_rate_any) if is_sel else "",
                    result.failures[name],
                )
            )
    return rows


def write_sim_csv(results, path):
    """Write one flat table covering every result in ``results``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIM_CSV_COLUMNS)
        for res in results:
            w.writerows(sim_rows(res))
    return path
