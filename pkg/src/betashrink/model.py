"""Beta regression with a logit link: data containers and likelihood quantities.

The response ``y_t`` follows a beta law with mean ``mu_t`` and precision
``phi``, i.e. shapes ``(mu_t * phi, (1 - mu_t) * phi)``, and
``logit(mu_t) = x_t' beta``.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, DomainError, ResponseOutOfRange
from .special import digamma, log_gamma, psi_pair

__all__ = [
    "Dataset",
    "Coefficients",
    "WorkingQuantities",
    "INTERCEPT",
    "mean_from_eta",
    "working_quantities",
    "log_likelihood",
    "score",
    "fisher_information",
]

INTERCEPT = "(Intercept)"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix (first column all ones) and a response inside (0, 1)."""

    design: np.ndarray
    response: np.ndarray
    predictor_names: tuple = field(default=None)

    def __post_init__(self):
        X = np.asarray(self.design, dtype=float)
        y = np.asarray(self.response, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataValidationError("design must be a non-empty 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataValidationError("response length must match design rows")
        if not np.all(np.isfinite(X)):
            raise DataValidationError("design contains non-finite values")
        if not np.all(X[:, 0] == 1.0):
            raise DataValidationError("first design column must be identically 1")
        bad = np.flatnonzero(~((y > 0.0) & (y < 1.0)))
        if bad.size:
            raise ResponseOutOfRange(bad.tolist())
        names = self.predictor_names
        if names is None:
            names = (INTERCEPT,) + tuple(f"x{j}" for j in range(1, X.shape[1]))
        names = tuple(str(n) for n in names)
        if len(names) != X.shape[1]:
            raise DataValidationError("predictor_names must have one label per design column")
        object.__setattr__(self, "design", _frozen(X))
        object.__setattr__(self, "response", _frozen(y))
        object.__setattr__(self, "predictor_names", names)

    @classmethod
    def from_predictors(cls, predictors, response, names=None):
        """Build a Dataset by prepending an intercept column to ``predictors``."""
        P = np.asarray(predictors, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        X = np.column_stack([np.ones(P.shape[0]), P])
        if names is not None:
            names = (INTERCEPT,) + tuple(names)
        return cls(X, response, names)

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def n_params(self):
        """Number of regression coefficients including the intercept."""
        return self.design.shape[1]

    def subset(self, rows):
        rows = np.asarray(rows)
        return Dataset(self.design[rows], self.response[rows], self.predictor_names)


@dataclass(frozen=True, eq=False)
class Coefficients:
    """Regression coefficients on the link scale plus the precision."""

    beta: np.ndarray
    phi: float

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=float).ravel()
        phi = float(self.phi)
        if not np.all(np.isfinite(b)) or not np.isfinite(phi):
            raise DomainError("coefficients must be finite")
        if phi <= 0.0:
            raise DomainError(f"precision phi must be > 0, got {phi}")
        object.__setattr__(self, "beta", _frozen(b))
        object.__setattr__(self, "phi", phi)

    @property
    def theta(self):
        """Full parameter vector (beta_0, ..., beta_p, phi)."""
        return np.append(self.beta, self.phi)


@dataclass(frozen=True, eq=False)
class WorkingQuantities:
    """Per-observation quantities entering the score, information and IRLS steps.

    ``t_diag`` is ``1/g'(mu) = mu (1 - mu)``; ``w_diag`` is the weight ``w_t``;
    ``c_vec`` and ``d_diag`` feed the beta/phi and phi/phi information entries.
    """

    eta: np.ndarray
    mu: np.ndarray
    ystar: np.ndarray
    mustar: np.ndarray
    t_diag: np.ndarray
    w_diag: np.ndarray
    c_vec: np.ndarray
    d_diag: np.ndarray
    phi: float


def _logistic_pair(eta):
    """Return (mu, 1 - mu) without cancellation for large |eta|."""
    e = np.exp(-np.abs(eta))
    big = 1.0 / (1.0 + e)
    small = e / (1.0 + e)
    pos = eta >= 0
    return np.where(pos, big, small), np.where(pos, small, big)


def mean_from_eta(eta):
    """Inverse logit link, stable for large |eta|."""
    arr = np.asarray(eta, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("eta must be finite")
    mu, _ = _logistic_pair(arr)
    return float(mu) if arr.ndim == 0 else mu


def _check_shapes(ds, coef):
    if coef.beta.shape[0] != ds.n_params:
        raise DataValidationError(
            f"coefficient length {coef.beta.shape[0]} does not match {ds.n_params} design columns"
        )


def working_quantities(ds, coef):
    """Evaluate eta, mu, y*, mu*, T, W, c and D at ``coef``."""
    _check_shapes(ds, coef)
    phi = coef.phi
    y = ds.response
    eta = ds.design @ coef.beta
    mu, one_minus_mu = _logistic_pair(eta)
    a, b = mu * phi, one_minus_mu * phi
    if not (np.all(a > 0.0) and np.all(b > 0.0)):
        bad = np.flatnonzero((a <= 0.0) | (b <= 0.0))
        raise DomainError(f"fitted mean reached 0 or 1 at observation(s) {bad.tolist()[:10]}")
    n = ds.n
    with np.errstate(over="ignore", invalid="ignore"):
        psi, tri = psi_pair(np.concatenate([a, b, [phi]]))
    if not (np.all(np.isfinite(tri)) and np.all(np.isfinite(psi))):
        raise DomainError("fitted mean too close to 0 or 1 for finite working weights")
    tg_a, tg_b, tg_phi = tri[:n], tri[n : 2 * n], tri[2 * n]
    t = mu * one_minus_mu
    return WorkingQuantities(
        eta=eta,
        mu=mu,
        ystar=np.log(y) - np.log1p(-y),
        mustar=psi[:n] - psi[n : 2 * n],
        t_diag=t,
        w_diag=phi * (tg_a + tg_b) * t * t,
        c_vec=phi * (tg_a * mu - tg_b * one_minus_mu),
        d_diag=mu * mu * tg_a + tg_b * one_minus_mu * one_minus_mu - tg_phi,
        phi=phi,
    )


def _loglik_terms(y, eta, phi):
    mu, one_minus_mu = _logistic_pair(eta)
    bad = np.flatnonzero((mu * phi <= 0.0) | (one_minus_mu * phi <= 0.0))
    if bad.size:
        warnings.warn(
            f"fitted mean reached the boundary at observation(s) {bad.tolist()[:10]}; "
            "log-likelihood is -inf",
            RuntimeWarning,
            stacklevel=3,
        )
        return None
    a, b = mu * phi, one_minus_mu * phi
    n = a.shape[0]
    lg = log_gamma(np.concatenate([a, b, [phi]]))
    return lg[2 * n] - lg[:n] - lg[n : 2 * n] + (a - 1.0) * np.log(y) + (b - 1.0) * np.log1p(-y)


def log_likelihood(ds, coef):
    """Beta regression log-likelihood summed over observations."""
    _check_shapes(ds, coef)
    terms = _loglik_terms(ds.response, ds.design @ coef.beta, coef.phi)
    if terms is None:
        return -np.inf
    return float(np.sum(terms))


def pointwise_log_likelihood(ds, coef):
    """Per-observation log density values (length n)."""
    _check_shapes(ds, coef)
    terms = _loglik_terms(ds.response, ds.design @ coef.beta, coef.phi)
    if terms is None:
        return np.full(ds.n, -np.inf)
    return terms


def score(ds, coef, wq=None):
    """Gradient of the log-likelihood in (beta, phi); length p + 2."""
    if wq is None:
        wq = working_quantities(ds, coef)
    phi = coef.phi
    resid = wq.ystar - wq.mustar
    u_beta = phi * (ds.design.T @ (wq.t_diag * resid))
    _, one_minus_mu = _logistic_pair(wq.eta)
    u_phi = np.sum(
        digamma(phi)
        - digamma(one_minus_mu * phi)
        + wq.mu * resid
        + np.log1p(-ds.response)
    )
    return np.append(u_beta, u_phi)


def fisher_information(ds, coef, wq=None):
    """Expected information matrix for (beta, phi); symmetric (p + 2) square."""
    if wq is None:
        wq = working_quantities(ds, coef)
    X = ds.design
    k = X.shape[1]
    info = np.empty((k + 1, k + 1))
    info[:k, :k] = coef.phi * (X.T @ (wq.w_diag[:, None] * X))
    cross = X.T @ (wq.t_diag * wq.c_vec)
    info[:k, k] = cross
    info[k, :k] = cross
    info[k, k] = np.sum(wq.d_diag)
    info[:k, :k] = 0.5 * (info[:k, :k] + info[:k, :k].T)
    return info
