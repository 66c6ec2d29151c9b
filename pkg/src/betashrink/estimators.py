"""Maximum likelihood, ridge and LASSO estimation for beta regression.

Ridge and LASSO operate on a standardized design (see
:func:`betashrink.preprocess.standardize`) and leave the intercept
unpenalized by default; pass the ``Transform`` to get original-scale
coefficients in ``FitResult.coef``.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import sym_solve
from .errors import (
    BetaShrinkError,
    ConvergenceWarning,
    DataValidationError,
    DegenerateGamma,
    DomainError,
    ZeroCurvatureWarning,
)
from .model import (
    _logistic_pair,
    Coefficients,
    Dataset,
    fisher_information,
    log_likelihood,
    pointwise_log_likelihood,
    score,
    working_quantities,
)
from .preprocess import back_transform
from .special import psi_pair, soft_threshold

__all__ = [
    "FitResult",
    "RidgeSelector",
    "LassoConfig",
    "initial_values",
    "fit_ml",
    "select_ridge_k",
    "ridge_k_from_canonical",
    "fit_ridge",
    "working_response",
    "coordinate_update",
    "update_phi_penalized",
    "lasso_k_threshold",
    "lasso_k_universal",
    "default_k_grid",
    "fit_lasso",
    "select_lasso_k_cv",
]

ML, RIDGE, LASSO = "ML", "Ridge", "Lasso"

PHI_FLOOR = 0.1
MAX_HALVINGS = 20
POLISH_STEPS = 20


@dataclass(frozen=True, eq=False)
class FitResult:
    coef: Coefficients
    coef_standardized: Coefficients
    method: str
    penalty_k: float = 0.0
    iterations: int = 0
    converged: bool = True
    degenerate: bool = False
    loglik: float = float("nan")
    trace: tuple = ()
    selector: str = ""


@dataclass(frozen=True)
class RidgeSelector:
    """Shrinkage-parameter rule: ``hk``, ``med``, ``max``, ``min`` or ``fixed``."""

    kind: str
    k: float = None

    KINDS = ("hk", "med", "max", "min", "fixed")

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in self.KINDS:
            raise ValueError(f"unknown ridge selector {self.kind!r}")
        if kind == "fixed" and (self.k is None or not np.isfinite(self.k) or self.k < 0):
            raise ValueError("FIXED ridge selector requires a finite k >= 0")
        object.__setattr__(self, "kind", kind)

    @classmethod
    def fixed(cls, k):
        return cls("fixed", float(k))

    @classmethod
    def parse(cls, text):
        """``"hk"``, ``"med"``, ``"max"``, ``"min"`` or a number."""
        t = str(text).strip().lower()
        if t in cls.KINDS[:4]:
            return cls(t)
        return cls.fixed(float(t))

    @property
    def label(self):
        return f"k={self.k:g}" if self.kind == "fixed" else f"k_{self.kind}"


@dataclass(frozen=True)
class LassoConfig:
    """Coordinate-descent and cross-validation settings.

    ``k_grid=None`` means 50 log-spaced values from the universal threshold
    down to 1e-4 times it, computed per dataset.
    """

    k_grid: tuple = None
    cv_folds: int = 5
    tol: float = 1e-7
    max_sweeps: int = 1000
    penalize_intercept: bool = False
    cv_seed: int = 0
    grid_size: int = 50
    grid_ratio: float = 1e-4

    def __post_init__(self):
        if self.k_grid is not None:
            grid = tuple(float(k) for k in self.k_grid)
            if not grid:
                raise ValueError("k_grid is empty")
            if any(k <= 0 or not np.isfinite(k) for k in grid):
                raise ValueError("k_grid values must be finite and > 0")
            if any(a <= b for a, b in zip(grid, grid[1:])):
                raise ValueError("k_grid must be strictly descending")
            object.__setattr__(self, "k_grid", grid)
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.tol <= 0 or self.max_sweeps < 1:
            raise ValueError("tol must be > 0 and max_sweeps >= 1")


def _finish(ds, coef_std, transform):
    return back_transform(coef_std, transform) if transform is not None else coef_std


# ----------------------------------------------------------------- ML

def initial_values(ds):
    """Least squares of logit(y) on X, with a moment-based precision start."""
    X, y = ds.design, ds.response
    ystar = np.log(y) - np.log1p(-y)
    beta, degenerate = sym_solve(X.T @ X, X.T @ ystar)
    if degenerate:
        return Coefficients(np.zeros(ds.n_params), 1.0)
    eta = X @ beta
    mu, nu = _logistic_pair(eta)
    resid = ystar - eta
    dof = ds.n - ds.n_params
    sigma2 = resid @ resid / (dof if dof > 0 else ds.n)
    g = mu * nu
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.mean(g / (sigma2 * g * g) - 1.0)
    if not np.isfinite(phi):
        phi = 1.0
    phi = max(phi, PHI_FLOOR)
    # the moment formula explodes when fitted means sit near 0 or 1; the
    # likelihood is concave in phi, so polish the start along that axis
    best = _profile_phi(ds, beta, phi)
    if best is not None:
        phi = max(best, PHI_FLOOR)
    return Coefficients(beta, phi)


def _relative_change(old, new):
    # componentwise, so a large phi cannot mask movement in beta
    return float(np.max(np.abs(new - old) / np.maximum(np.abs(old), 1.0)))


def _polish_by_score(ds, theta, coef, U, step, tol, budget):
    # Near the optimum the gain of a scoring step falls below the rounding
    # noise of the summed log-likelihood while the score is still accurate,
    # so full steps are taken for as long as they shrink |U|.
    k = ds.n_params
    taken = 0
    norm = np.max(np.abs(U))
    while taken < min(budget, POLISH_STEPS) and norm >= tol:
        cand = theta + step
        if not (cand[k] > 0.0 and np.all(np.isfinite(cand))):
            break
        cand_coef = Coefficients(cand[:k], cand[k])
        try:
            wq = working_quantities(ds, cand_coef)
        except DomainError:
            break
        cand_U = score(ds, cand_coef, wq)
        cand_norm = np.max(np.abs(cand_U))
        if not cand_norm < norm:
            break
        taken += 1
        theta, coef, U, norm = cand, cand_coef, cand_U, cand_norm
        info = fisher_information(ds, coef, wq)
        if not np.all(np.isfinite(info)):
            break
        step, _ = sym_solve(info, U)
    return theta, coef, taken


def fit_ml(ds, tol=1e-8, max_iter=500, *, init=None, transform=None):
    """Fisher scoring over (beta, phi) jointly, with step halving.

    Stops when the relative parameter change or the sup-norm of the score
    drops below ``tol``. A step is halved (up to 20 times) while it lowers
    the log-likelihood or makes phi non-positive, so the log-likelihood
    trace is nondecreasing. After convergence up to 20 further full steps
    are taken while they shrink the score, since the last gains are below
    the rounding noise of the summed log-likelihood; those steps are not
    recorded in ``trace``.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    coef = init if init is not None else initial_values(ds)
    theta = coef.theta
    ll = log_likelihood(ds, coef)
    trace = [ll]
    degenerate = False
    converged = False
    iterations = 0
    k = ds.n_params

    for _ in range(max_iter):
        try:
            wq = working_quantities(ds, coef)
        except DomainError:
            # the iterate ran off to the boundary of the mean space
            break
        U = score(ds, coef, wq)
        if not np.all(np.isfinite(U)):
            break
        if np.max(np.abs(U)) < tol:
            converged = True
            break
        iterations += 1
        info = fisher_information(ds, coef, wq)
        if not np.all(np.isfinite(info)):
            break
        step, deg = sym_solve(info, U)
        degenerate = degenerate or deg
        t = 1.0
        accepted = None
        for _h in range(MAX_HALVINGS + 1):
            cand = theta + t * step
            if cand[k] > 0.0 and np.all(np.isfinite(cand)):
                cand_coef = Coefficients(cand[:k], cand[k])
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    cand_ll = log_likelihood(ds, cand_coef)
                if cand_ll >= ll:
                    accepted = (cand, cand_coef, cand_ll)
                    break
            t *= 0.5
        if accepted is None:
            # no ascent left at float resolution: accept only if the full
            # scoring step says the optimum is within sqrt(tol)
            converged = _relative_change(theta, theta + step) < np.sqrt(tol)
            if converged:
                theta, coef, polished = _polish_by_score(ds, theta, coef, U, step, tol, max_iter - iterations)
                iterations += polished
                ll = log_likelihood(ds, coef)
            break
        new_theta, coef, ll = accepted
        trace.append(ll)
        change = _relative_change(theta, new_theta)
        theta = new_theta
        if change < tol:
            converged = True
            try:
                wq = working_quantities(ds, coef)
            except DomainError:
                break
            U = score(ds, coef, wq)
            step, _ = sym_solve(fisher_information(ds, coef, wq), U)
            theta, coef, polished = _polish_by_score(ds, theta, coef, U, step, tol, max_iter - iterations)
            iterations += polished
            ll = log_likelihood(ds, coef)
            break

    if not converged:
        warnings.warn(
            f"Fisher scoring stopped after {iterations} iterations without converging",
            ConvergenceWarning,
            stacklevel=2,
        )
    return FitResult(
        coef=_finish(ds, coef, transform),
        coef_standardized=coef,
        method=ML,
        penalty_k=0.0,
        iterations=iterations,
        converged=converged,
        degenerate=degenerate,
        loglik=ll,
        trace=tuple(trace),
    )


# -------------------------------------------------------------- ridge

def ridge_k_from_canonical(kind, phi, eigenvalues, gamma):
    """Apply a selector formula to eigenvalues and canonical coefficients.

    ``gamma`` are the coordinates of the ML slopes in the eigenbasis of
    X'WX. Exact zeros are excluded where the formula divides by gamma_j².
    """
    kind = kind.lower()
    lam = np.asarray(eigenvalues, dtype=float)
    g2 = np.asarray(gamma, dtype=float) ** 2
    nonzero = g2 > 0.0
    if not nonzero.any():
        raise DegenerateGamma("all canonical coefficients are zero")
    g2max = g2.max()
    if kind == "hk":
        return 1.0 / (phi * g2max)
    if kind == "med":
        return float(np.median(np.sqrt(1.0 / (phi * g2[nonzero]))))
    if kind == "max":
        return float(lam.max() / (phi * g2max))
    if kind == "min":
        return float(lam.min() / (phi * g2[nonzero].min()))
    raise ValueError(f"no canonical formula for selector {kind!r}")


def _penalty_mask(n_params, penalize_intercept):
    mask = np.ones(n_params, dtype=bool)
    if not penalize_intercept:
        mask[0] = False
    return mask


def canonical_quantities(ds, ml):
    """Eigenvalues of Z'WZ over the slope columns and gamma = Q' beta_slopes."""
    coef = ml.coef_standardized
    wq = working_quantities(ds, coef)
    Z = ds.design[:, 1:]
    M = Z.T @ (wq.w_diag[:, None] * Z)
    lam, Q = np.linalg.eigh(0.5 * (M + M.T))
    return lam, Q.T @ coef.beta[1:]


def select_ridge_k(selector, ml, ds):
    """Shrinkage parameter for ``selector`` given an ML fit on ``ds``."""
    if selector.kind == "fixed":
        return float(selector.k)
    if ds.n_params < 2:
        raise DegenerateGamma("no slope coefficients to shrink")
    lam, gamma = canonical_quantities(ds, ml)
    return ridge_k_from_canonical(selector.kind, ml.coef_standardized.phi, lam, gamma)


def fit_ridge(ds, selector, ml, *, transform=None, penalize_intercept=False):
    """Ridge estimator (X'WX + kI)^-1 X'WX beta_ML with W and phi at the ML fit."""
    k = select_ridge_k(selector, ml, ds)
    coef_ml = ml.coef_standardized
    wq = working_quantities(ds, coef_ml)
    X = ds.design
    A = X.T @ (wq.w_diag[:, None] * X)
    penalty = np.diag(k * _penalty_mask(ds.n_params, penalize_intercept).astype(float))
    beta, deg = sym_solve(A + penalty, A @ coef_ml.beta)
    coef_std = Coefficients(beta, coef_ml.phi)
    return FitResult(
        coef=_finish(ds, coef_std, transform),
        coef_standardized=coef_std,
        method=RIDGE,
        penalty_k=k,
        iterations=1,
        converged=ml.converged,
        degenerate=bool(deg and k == 0.0),
        loglik=log_likelihood(ds, coef_std),
        selector=selector.label,
    )


# -------------------------------------------------------------- LASSO

def working_response(wq):
    """IRLS pseudo-response z = eta + W^-1 T (y* - mu*)."""
    return wq.eta + wq.t_diag * (wq.ystar - wq.mustar) / wq.w_diag


def _coordinate_step(numerator, curvature, k):
    if curvature == 0.0:
        warnings.warn("zero weighted curvature; coefficient set to 0", ZeroCurvatureWarning, stacklevel=3)
        return 0.0
    return soft_threshold(numerator, k) / curvature


def coordinate_update(j, beta, wq, ds, k, n, phi, *, penalized=True, z=None):
    """Minimizer in beta_j of the local quadratic approximation plus k|beta_j|.

    Returns S_k((phi/n) X_j'W r_j) / ((phi/n) X_j'W X_j) with partial
    residual r_j = z - X_{-j} beta_{-j}; ``penalized=False`` uses k = 0.
    """
    if z is None:
        z = working_response(wq)
    beta = np.asarray(beta, dtype=float)
    X = ds.design
    xj = X[:, j]
    partial = z - X @ beta + xj * beta[j]
    xw = wq.w_diag * xj
    scale = phi / n
    return _coordinate_step(float(scale * (xw @ partial)), float(scale * (xw @ xj)), float(k) if penalized else 0.0)


def _weights_and_response(X, y, ystar, beta, phi):
    # the subset of working_quantities a LASSO sweep needs: W and z
    eta = X @ beta
    mu, nu = _logistic_pair(eta)
    n = mu.shape[0]
    psi, tri = psi_pair(np.concatenate([mu * phi, nu * phi]))
    t = mu * nu
    w = phi * (tri[:n] + tri[n:]) * t * t
    z = eta + t * (ystar - (psi[:n] - psi[n:])) / w
    return w, z


def _phi_score_and_curvature(mu, nu, data_term, phi):
    n = mu.shape[0]
    psi, tri = psi_pair(np.concatenate([mu * phi, nu * phi, [phi]]))
    u = n * psi[-1] - mu @ psi[:n] - nu @ psi[n:-1] + data_term
    d = (mu * mu) @ tri[:n] + (nu * nu) @ tri[n:-1] - n * tri[-1]
    return u, d


def _maximize_phi(mu, nu, data_term, phi0, rtol=1e-10, max_iter=200):
    # l is strictly concave in phi with exact second derivative -sum(d_t),
    # so safeguarded Newton on the phi-score converges quickly
    lo, hi = 0.0, np.inf
    phi = phi0
    # quadratic convergence: once a Newton step is below sqrt(rtol) the
    # remaining error is below rtol
    step_tol = np.sqrt(rtol)
    for _ in range(max_iter):
        u, d = _phi_score_and_curvature(mu, nu, data_term, phi)
        if u == 0.0:
            return phi
        if u > 0:
            lo = phi
        else:
            hi = phi
        new = phi + u / d if d > 0 else np.nan
        if not (lo < new < hi) or not np.isfinite(new):
            new = 4.0 * phi if not np.isfinite(hi) else (0.25 * phi if lo == 0.0 else 0.5 * (lo + hi))
        if abs(new - phi) <= step_tol * phi and lo < new < hi:
            return new
        phi = new
        if phi > 1e12 or phi < 1e-12:
            return None
    return None


def _profile_phi(ds, beta, phi0):
    # phi maximizing l(beta, .), or None when it cannot be bracketed
    eta = ds.design @ np.asarray(beta, dtype=float)
    if not np.all(np.isfinite(eta)):
        return None
    mu, nu = _logistic_pair(eta)
    if not np.all((mu > 0.0) & (nu > 0.0)):
        return None
    y = ds.response
    data_term = mu @ np.log(y) + nu @ np.log1p(-y)
    return _maximize_phi(mu, nu, data_term, min(max(phi0, 1e-8), 1e8))


def update_phi_penalized(ds, beta, k, phi_current):
    """Precision minimizing -l(beta, phi)/n + k||beta||_1 for fixed beta.

    The penalty does not involve phi, so this is the phi maximizing the
    log-likelihood at ``beta``.
    """
    if k < 0:
        raise DomainError("penalty k must be >= 0")
    phi = None
    if phi_current > 0:
        phi = _profile_phi(ds, beta, float(phi_current))
    if phi is None:
        warnings.warn("precision update failed to bracket; keeping current phi", ConvergenceWarning, stacklevel=2)
        return float(phi_current)
    return float(phi)


def lasso_k_threshold(ds, coef, *, penalize_intercept=False):
    """max_j |(phi/n) X_j'W z| over penalized columns, with W and z at ``coef``.

    Evaluated at the LASSO starting point (the ML fit) this is the
    conventional threshold above which every penalized coefficient is 0.
    """
    wq = working_quantities(ds, coef)
    z = working_response(wq)
    mask = _penalty_mask(ds.n_params, penalize_intercept)
    if not mask.any():
        return 0.0
    proj = (coef.phi / ds.n) * (ds.design[:, mask].T @ (wq.w_diag * z))
    return float(np.max(np.abs(proj)))


def lasso_k_universal(ds, *, penalize_intercept=False):
    """Smallest k at which the all-zero slope vector is a stationary point.

    That point is the intercept-only ML fit, and the bound is
    max_j |U_j| / n over penalized columns, evaluated there (equivalently
    :func:`lasso_k_threshold` at the null fit, since standardized columns
    are orthogonal to the constant part of z). The profiled objective is
    not convex, so from another start a non-null minimum can still exist
    slightly above this k.
    """
    if penalize_intercept:
        beta0 = np.zeros(ds.n_params)
        phi0 = update_phi_penalized(ds, beta0, 0.0, 1.0)
        coef = Coefficients(beta0, phi0)
    else:
        null = fit_ml(Dataset(ds.design[:, :1], ds.response))
        beta0 = np.zeros(ds.n_params)
        beta0[0] = null.coef.beta[0]
        coef = Coefficients(beta0, null.coef.phi)
    U = score(ds, coef)[: ds.n_params]
    mask = _penalty_mask(ds.n_params, penalize_intercept)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(U[mask])) / ds.n)


def default_k_grid(ds, cfg=None):
    cfg = cfg or LassoConfig()
    if cfg.k_grid is not None:
        return cfg.k_grid
    top = lasso_k_universal(ds, penalize_intercept=cfg.penalize_intercept)
    if not top > 0:
        raise DataValidationError("universal LASSO threshold is zero; cannot build a k grid")
    return tuple(np.geomspace(top, top * cfg.grid_ratio, cfg.grid_size))


def fit_lasso(ds, k, cfg=None, ml=None, *, transform=None, init=None):
    """Coordinate-descent LASSO with a precision update after every sweep.

    Each sweep recomputes W and z at the current coefficients, updates
    columns 0..p in order (unpenalized ones with k = 0), then re-estimates
    phi. Starts from ``init`` if given, else from the ML fit.
    """
    cfg = cfg or LassoConfig()
    if k < 0:
        raise DomainError("penalty k must be >= 0")
    if init is None:
        if ml is None:
            ml = fit_ml(ds)
        init = ml.coef_standardized
    X = ds.design
    n = ds.n
    beta = np.array(init.beta, dtype=float)
    phi = init.phi
    penalties = [float(k) if m else 0.0 for m in _penalty_mask(ds.n_params, cfg.penalize_intercept)]
    cols = [np.ascontiguousarray(X[:, j]) for j in range(ds.n_params)]

    converged = False
    sweeps = 0
    y = ds.response
    ystar = np.log(y) - np.log1p(-y)
    for _ in range(cfg.max_sweeps):
        sweeps += 1
        with np.errstate(over="ignore"):
            w, z = _weights_and_response(X, y, ystar, beta, phi)
        if not np.all(np.isfinite(z)):
            raise DomainError("fitted mean reached 0 or 1 during the LASSO sweep")
        scale = phi / n
        resid = z - X @ beta
        old = beta.copy()
        for j, xj in enumerate(cols):
            xw = w * xj
            curvature = float(scale * (xw @ xj))
            numerator = float(scale * (xw @ resid)) + curvature * beta[j]
            new = _coordinate_step(numerator, curvature, penalties[j])
            if new != beta[j]:
                resid -= xj * (new - beta[j])
                beta[j] = new
        phi = update_phi_penalized(ds, beta, k, phi)
        if np.max(np.abs(beta - old)) < cfg.tol:
            converged = True
            break

    if not converged:
        warnings.warn(f"LASSO did not converge in {sweeps} sweeps", ConvergenceWarning, stacklevel=2)
    coef_std = Coefficients(beta, phi)
    return FitResult(
        coef=_finish(ds, coef_std, transform),
        coef_standardized=coef_std,
        method=LASSO,
        penalty_k=float(k),
        iterations=sweeps,
        converged=converged,
        loglik=log_likelihood(ds, coef_std),
    )


def _fold_indices(n, folds, seed):
    perm = np.random.default_rng(seed).permutation(n)
    return np.array_split(perm, folds)


def select_lasso_k_cv(ds, cfg=None, ml=None, *, return_curve=False):
    """Choose k by K-fold cross-validated out-of-fold negative log-likelihood.

    Each fold walks the k grid from largest to smallest, warm-starting every
    fit from the previous one. Held-out rows are scored with phi fixed at the
    full-data ML estimate. Ties go to the larger k.
    """
    cfg = cfg or LassoConfig()
    if cfg.cv_folds > ds.n:
        raise DataValidationError("cv_folds exceeds the number of observations")
    if ml is None:
        ml = fit_ml(ds)
    grid = default_k_grid(ds, cfg)
    if len(grid) == 1:
        return (grid[0], np.zeros(1)) if return_curve else grid[0]

    phi_fixed = ml.coef_standardized.phi
    losses = []
    for f, test in enumerate(_fold_indices(ds.n, cfg.cv_folds, cfg.cv_seed)):
        train = np.setdiff1d(np.arange(ds.n), test)
        try:
            train_ds = ds.subset(train)
            test_ds = ds.subset(test)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                fold_ml = fit_ml(train_ds)
                curve = []
                init = fold_ml.coef_standardized
                for k in grid:
                    fit = fit_lasso(train_ds, k, cfg, fold_ml, init=init)
                    init = fit.coef_standardized
                    held = pointwise_log_likelihood(test_ds, Coefficients(fit.coef_standardized.beta, phi_fixed))
                    curve.append(-np.mean(held))
        except BetaShrinkError as exc:
            warnings.warn(f"cross-validation fold {f} skipped: {exc}", RuntimeWarning, stacklevel=2)
            continue
        curve = np.asarray(curve)
        if not np.all(np.isfinite(curve)):
            warnings.warn(f"cross-validation fold {f} skipped: non-finite held-out loss", RuntimeWarning, stacklevel=2)
            continue
        losses.append(curve)
    if not losses:
        raise DataValidationError("every cross-validation fold was skipped")
    mean_loss = np.mean(losses, axis=0)
    best = float(grid[int(np.argmin(mean_loss))])
    return (best, mean_loss) if return_curve else best
