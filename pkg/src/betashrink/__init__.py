"""Beta regression under multicollinearity: ML, ridge and LASSO estimators.

The public API covers special functions, the logit-link beta regression
model, the three estimators with their penalty selectors, a Monte Carlo
harness and the CSV/report pipeline behind the ``betashrink`` command.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import (
    BetaShrinkError,
    BoundaryDraw,
    ConvergenceFailure,
    ConvergenceWarning,
    DataValidationError,
    DegenerateFit,
    DegenerateGamma,
    DomainError,
    MissingColumn,
    NonNumericCell,
    RedrawCapExceeded,
    ResponseOutOfRange,
    ZeroCurvatureWarning,
    ZeroVariance,
)
from .special import (
    digamma,
    log_beta,
    log_gamma,
    regularized_incomplete_beta,
    soft_threshold,
    trigamma,
)
from .model import (
    Coefficients,
    Dataset,
    WorkingQuantities,
    fisher_information,
    log_likelihood,
    mean_from_eta,
    score,
    working_quantities,
)
from .preprocess import Transform, back_transform, standardize
from .estimators import (
    FitResult,
    LassoConfig,
    RidgeSelector,
    coordinate_update,
    fit_lasso,
    fit_ml,
    fit_ridge,
    initial_values,
    lasso_k_threshold,
    lasso_k_universal,
    select_lasso_k_cv,
    select_ridge_k,
    update_phi_penalized,
)
from .pipeline import EstimatorSpec, fit_estimators, parse_estimators
from .simulation import (
    SimDesign,
    SimResult,
    generate_design,
    generate_response,
    run_experiment,
    selection_rate_summary,
    true_coefficients,
)
from .diagnostics import condition_number, correlation_scan, ks_goodness_of_fit
from .bootstrap import bootstrap_estimates, bootstrap_metrics
from .report import Cell, ReportTable
from .dataio import RunConfig, emit_report, load_csv
