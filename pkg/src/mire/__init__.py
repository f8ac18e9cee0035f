"""Matching on inverse-regression-reduced covariates for causal effect estimation."""

from .data import (CovarianceModel, DataError, NumericalError, ObservationalDataset,
                   covariance, load_csv, standardize, write_csv)
from .sdr_ire import (IreProblem, SdrBasis, SliceStats, Slices, build_problem,
                      discrepancy, estimate_basis, fit_ire, helmert_contrasts,
                      inverse_regression_moments, make_slices, solve_C,
                      update_direction)
from .matching import (MatchResult, ReducedCovariates, balance_diagnostics,
                       mahalanobis, match, reduce)
from .effects import EffectEstimate, MetricReport, ate, att, ite, pehe, rmse, sd
from .baselines import PropensityModel, fit_propensity, nnm_match, psm_match
from .pipeline import EstimatorOptions, run_method, summarize
from .subspace import largest_principal_angle, principal_angles

__version__ = "0.1.0"
