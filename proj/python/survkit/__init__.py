"""Survival analysis toolkit backed by a C++ core."""

from ._survkit import (
    ConvergenceError,
    CoxModel,
    CoxSummaryRow,
    DataError,
    NumericError,
    SurvivalForest,
    SurvkitError,
    concordance_index,
    fit_cox,
    fit_rsf,
    kaplan_meier,
    roc_at_horizon,
    run_report,
)

__all__ = [
    "ConvergenceError",
    "CoxModel",
    "CoxSummaryRow",
    "DataError",
    "NumericError",
    "SurvivalForest",
    "SurvkitError",
    "concordance_index",
    "fit_cox",
    "fit_rsf",
    "kaplan_meier",
    "roc_at_horizon",
    "run_report",
]
