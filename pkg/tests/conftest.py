import os
from pathlib import Path

import numpy as np
import pytest

from betashrink.model import Coefficients, Dataset

REPO = Path(__file__).resolve().parents[1]

BOSTON_PREDICTORS = ("crim", "zn", "indus", "nox", "rm", "age", "dis", "tax", "ptratio", "black", "medv")


def boston_csv_path():
    env = os.environ.get("BETASHRINK_BOSTON_CSV")
    path = Path(env) if env else REPO / "data" / "boston.csv"
    return path if path.is_file() else None


@pytest.fixture(scope="session")
def boston_path():
    path = boston_csv_path()
    if path is None:
        pytest.skip("Boston CSV not found; run scripts/fetch_boston.py or set BETASHRINK_BOSTON_CSV")
    return path


@pytest.fixture(scope="session")
def boston(boston_path):
    from betashrink.dataio import RunConfig, load_csv

    cfg = RunConfig(
        mode="fit",
        input_path=str(boston_path),
        response_column="lstat",
        predictor_columns=BOSTON_PREDICTORS,
        response_scale="percent",
    )
    return load_csv(cfg)


def random_dataset(rng, n, p, *, beta_scale=0.5, phi=None):
    """Gaussian predictors, beta responses from a random logit-linear model."""
    P = rng.standard_normal((n, p))
    X = np.column_stack([np.ones(n), P])
    beta = rng.normal(0.0, beta_scale, p + 1)
    phi = float(rng.uniform(2.0, 30.0)) if phi is None else phi
    mu = 1.0 / (1.0 + np.exp(-(X @ beta)))
    y = rng.beta(mu * phi, (1 - mu) * phi)
    y = np.clip(y, 1e-6, 1 - 1e-6)
    return Dataset(X, y), Coefficients(beta, phi)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
