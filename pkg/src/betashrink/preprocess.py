"""Centering/scaling of predictors and mapping coefficients between scales."""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVariance
from .model import Coefficients, Dataset

__all__ = ["Transform", "standardize", "back_transform", "forward_transform"]


@dataclass(frozen=True, eq=False)
class Transform:
    """Column means and standard deviations of the non-intercept predictors."""

    means: np.ndarray
    sds: np.ndarray

    @classmethod
    def identity(cls, n_slopes):
        return cls(np.zeros(n_slopes), np.ones(n_slopes))


def standardize(ds):
    """Center and scale every non-intercept column to mean 0, sd 1 (ddof=1).

    Returns the standardized Dataset and the Transform needed to map
    coefficients back to the original scale.
    """
    P = ds.design[:, 1:]
    means = P.mean(axis=0)
    if ds.n > 1:
        sds = P.std(axis=0, ddof=1)
    else:
        sds = np.zeros(P.shape[1])
    # relative test so that large-magnitude constant columns are still caught
    scale = np.maximum(np.abs(means), 1.0)
    zero = sds <= 1e-13 * scale
    if np.any(zero):
        names = [ds.predictor_names[j + 1] for j in np.flatnonzero(zero)]
        raise ZeroVariance(names)
    Z = (P - means) / sds
    X = np.column_stack([np.ones(ds.n), Z])
    return Dataset(X, ds.response, ds.predictor_names), Transform(means, sds)


def back_transform(coef_std, transform):
    """Map standardized-scale coefficients to the original predictor scale."""
    b = coef_std.beta
    slopes = b[1:] / transform.sds
    intercept = b[0] - np.sum(b[1:] * transform.means / transform.sds)
    return Coefficients(np.concatenate([[intercept], slopes]), coef_std.phi)


def forward_transform(coef, transform):
    """Inverse of :func:`back_transform`."""
    b = coef.beta
    slopes = b[1:] * transform.sds
    intercept = b[0] + np.sum(b[1:] * transform.means)
    return Coefficients(np.concatenate([[intercept], slopes]), coef.phi)
