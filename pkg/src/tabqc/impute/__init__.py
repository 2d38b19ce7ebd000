"""Imputation-aware QC: missingness profiling, a routed portfolio of
imputers, and post-imputation residual checks."""

from .mice import impute_mice
from .missforest import impute_missforest
from .profile import (MAR, MCAR, MNAR_SUSPECT, UNDETERMINED, ColumnMissingness,
                      MissingnessProfile, QcThresholds, profile_missingness)
from .report import ImputationReport
from .residual import residual_uncertainty_check
from .routing import impute_dataset, select_method
from .simple import impute_simple
from .softimpute import impute_softimpute

__all__ = [
    "MAR", "MCAR", "MNAR_SUSPECT", "UNDETERMINED",
    "ColumnMissingness", "ImputationReport", "MissingnessProfile", "QcThresholds",
    "impute_dataset", "impute_mice", "impute_missforest", "impute_simple",
    "impute_softimpute", "profile_missingness", "residual_uncertainty_check",
    "select_method",
]
