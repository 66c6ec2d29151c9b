"""Collinearity and distributional diagnostics for a Dataset or a response."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataValidationError, DegenerateFit, ZeroVariance
from .report import ReportTable
from .special import digamma, log_beta, regularized_incomplete_beta, trigamma

__all__ = [
    "condition_number",
    "correlation_matrix",
    "correlation_scan",
    "kolmogorov_sf",
    "ks_statistic",
    "fit_beta_shapes",
    "KSResult",
    "ks_goodness_of_fit",
]


def condition_number(ds, *, include_intercept=False):
    """sqrt(lambda_max / lambda_min) of X'X on the unstandardized design.

    The intercept column is left out unless ``include_intercept`` is set.
    Returns ``inf`` when X'X is singular to working precision.
    """
    X = ds.design if include_intercept else ds.design[:, 1:]
    if X.shape[1] == 0:
        raise DataValidationError("no predictor columns to assess")
    lam = np.linalg.eigvalsh(X.T @ X)
    top = lam[-1]
    if not top > 0:
        return math.inf
    if lam[0] <= 10 * X.shape[1] * np.finfo(float).eps * top:
        return math.inf
    return float(math.sqrt(top / lam[0]))


def correlation_matrix(ds):
    """Pearson correlations among predictors (intercept excluded)."""
    P = ds.design[:, 1:]
    if P.shape[1] < 2:
        raise DataValidationError("correlation scan needs at least two predictors")
    centered = P - P.mean(axis=0)
    norms = np.sqrt(np.sum(centered * centered, axis=0))
    flat = norms <= 1e-13 * np.maximum(np.abs(P).max(axis=0), 1.0)
    if flat.any():
        raise ZeroVariance([ds.predictor_names[1 + j] for j in np.flatnonzero(flat)])
    R = (centered.T @ centered) / np.outer(norms, norms)
    R = np.clip(0.5 * (R + R.T), -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    return R


def correlation_scan(ds):
    """Correlation table with the largest-magnitude off-diagonal pair noted."""
    R = correlation_matrix(ds)
    names = ds.predictor_names[1:]
    off = np.abs(R - np.eye(R.shape[0]))
    i, j = np.unravel_index(int(np.argmax(off)), off.shape)
    a, b = sorted((i, j))
    rows = [(names[r],) + tuple(float(v) for v in R[r]) for r in range(R.shape[0])]
    note = f"largest |r|: {names[a]} - {names[b]} = {R[a, b]:.4f}"
    return ReportTable(
        "correlations",
        ("",) + tuple(names),
        rows,
        (note,),
        meta={"extreme_pair": (names[a], names[b], float(R[a, b]))},
    )


def kolmogorov_sf(x):
    """P(K > x) for the limiting Kolmogorov distribution."""
    if x <= 0:
        return 1.0
    if x < 1.0:
        # theta-function form converges fast for small x
        s = 0.0
        for k in range(1, 20):
            s += math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * x * x))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / x * s))
    s = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * x * x)
        s += term if k % 2 else -term
        if term < 1e-300:
            break
    return min(1.0, max(0.0, 2.0 * s))


def ks_statistic(sample, cdf):
    """Two-sided one-sample KS distance between ``sample`` and the CDF callable."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.shape[0]
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def _normal_cdf(mean, sd):
    def cdf(x):
        return np.array([0.5 * math.erfc(-(v - mean) / (sd * math.sqrt(2.0))) for v in x])

    return cdf


def _beta_loglik(a, b, mean_log, mean_log1m):
    return (a - 1.0) * mean_log + (b - 1.0) * mean_log1m - log_beta(a, b)


def fit_beta_shapes(y, tol=1e-10, max_iter=200):
    """ML shapes (a, b) of a beta law by Newton's method with step halving.

    Starts from the method of moments. The per-observation log-likelihood
    is concave in (a, b), so halving only guards the positivity constraint
    and overshoot.
    """
    y = np.asarray(y, dtype=float)
    if np.any((y <= 0) | (y >= 1)):
        raise DataValidationError("beta fit needs every value inside (0, 1)")
    m, v = y.mean(), y.var()
    if not v > 0:
        raise DegenerateFit("beta fit needs a non-constant sample")
    common = m * (1 - m) / v - 1.0
    if common <= 0:
        common = 1.0
    theta = np.array([m * common, (1 - m) * common])
    ml, ml1 = np.mean(np.log(y)), np.mean(np.log1p(-y))
    ll = _beta_loglik(*theta, ml, ml1)
    for _ in range(max_iter):
        a, b = theta
        dab = digamma(a + b)
        grad = np.array([ml - digamma(a) + dab, ml1 - digamma(b) + dab])
        tab = trigamma(a + b)
        H = np.array([[tab - trigamma(a), tab], [tab, tab - trigamma(b)]])
        step = np.linalg.solve(H, -grad)
        t = 1.0
        for _h in range(60):
            cand = theta + t * step
            if np.all(cand > 0):
                cll = _beta_loglik(*cand, ml, ml1)
                if cll >= ll:
                    break
            t *= 0.5
        else:
            raise DegenerateFit("beta shape search stalled")
        change = np.max(np.abs(cand - theta) / np.maximum(theta, 1.0))
        theta, ll = cand, cll
        if change < tol:
            return float(theta[0]), float(theta[1])
    raise DegenerateFit("beta shape estimation did not converge")


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    family: str
    params: tuple
    method: str

    def __iter__(self):
        return iter((self.statistic, self.p_value))


def _fit_family(y, family):
    if family == "normal":
        sd = float(np.std(y))
        if not sd > 0:
            raise DegenerateFit("normal fit needs a non-constant sample")
        params = (float(np.mean(y)), sd)
        return params, _normal_cdf(*params)
    a, b = fit_beta_shapes(y)
    return (a, b), (lambda x: regularized_incomplete_beta(a, b, x))


def ks_goodness_of_fit(y, family, *, bootstrap=0, seed=0):
    """KS test of ``y`` against the ML-fitted normal or beta family.

    By default the p-value comes from the limiting Kolmogorov distribution,
    which ignores that parameters were estimated, so it is approximate.
    With ``bootstrap > 0`` the p-value is a parametric bootstrap that refits
    the family on every simulated sample.
    """
    family = family.lower()
    if family not in ("normal", "beta"):
        raise ValueError("family must be 'normal' or 'beta'")
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < 8:
        raise DataValidationError("KS test needs at least 8 observations")
    params, cdf = _fit_family(y, family)
    d = ks_statistic(y, cdf)
    if bootstrap <= 0:
        p = kolmogorov_sf(math.sqrt(n) * d)
        return KSResult(d, p, family, params, "approximate (asymptotic, estimated parameters)")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed)])))
    exceed = 0
    for _ in range(int(bootstrap)):
        if family == "normal":
            sim = rng.normal(params[0], params[1], n)
        else:
            sim = rng.beta(params[0], params[1], n)
            sim = np.clip(sim, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
        _, scdf = _fit_family(sim, family)
        exceed += ks_statistic(sim, scdf) >= d
    p = (1 + exceed) / (bootstrap + 1)
    return KSResult(d, p, family, params, f"parametric bootstrap ({int(bootstrap)} draws)")
