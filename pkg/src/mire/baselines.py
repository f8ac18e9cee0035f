"""Reference matchers: raw-covariate Mahalanobis matching (NNM) and
propensity score matching (PSM) with a main-effects logistic model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import CovarianceModel, NumericalError, ObservationalDataset, covariance
from .matching import BOTH, MatchResult, match_on_features, reduce

SCORE_CLIP = (1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class PropensityModel:
    """Logistic model for P(T=1 | X): intercept first, then p slopes."""

    coefficients: np.ndarray  # length p+1
    converged: bool
    iterations: int

    def scores(self, X: np.ndarray) -> np.ndarray:
        eta = self.coefficients[0] + X @ self.coefficients[1:]
        return np.clip(1.0 / (1.0 + np.exp(-eta)), *SCORE_CLIP)

    def linear_index(self, X: np.ndarray) -> np.ndarray:
        return self.coefficients[0] + X @ self.coefficients[1:]


def fit_propensity(ds: ObservationalDataset, max_iter: int = 100,
                   grad_tol: float = 1e-8) -> PropensityModel:
    """Maximum-likelihood logistic fit by iteratively reweighted least squares.

    Covariates are centered internally; the Newton step uses a minimum-norm
    solve, so degenerate (constant) columns get slope exactly 0.  Divergence
    (coefficient norm above 1e4) is reported as separation.
    """
    X = ds.X
    T = ds.T.astype(float)
    mu = X.mean(axis=0)
    Xc = X - mu
    n, p = Xc.shape
    D = np.hstack([np.ones((n, 1)), Xc])
    beta = np.zeros(p + 1)
    beta[0] = np.log(T.mean() / (1.0 - T.mean()))
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        eta = D @ beta
        mu_hat = 1.0 / (1.0 + np.exp(-eta))
        grad = D.T @ (T - mu_hat)
        if np.linalg.norm(grad) < grad_tol:
            converged = True
            break
        w = np.sqrt(np.maximum(mu_hat * (1.0 - mu_hat), 1e-12))
        # weighted least squares for the Newton step
        step, *_ = np.linalg.lstsq(D * w[:, None], (T - mu_hat) / w, rcond=None)
        beta = beta + step
        if np.linalg.norm(beta) > 1e4:
            raise NumericalError("propensity fit diverged (perfect separation?)")
    # back to the raw-covariate parameterization
    coef = beta.copy()
    coef[0] = beta[0] - mu @ beta[1:]
    return PropensityModel(coefficients=coef, converged=converged, iterations=it)


def nnm_match(ds: ObservationalDataset, num_neighbors: int = 1,
              with_replacement: bool = True, direction: str = BOTH,
              ridge: Optional[float] = None) -> MatchResult:
    """Mahalanobis matching on the full raw covariates (basis = identity)."""
    red = reduce(ds, np.eye(ds.p), ridge=ridge)
    return match_on_features(red.Z, ds, red.sigma_z, num_neighbors=num_neighbors,
                             with_replacement=with_replacement, direction=direction)


def psm_match(ds: ObservationalDataset, model: Optional[PropensityModel] = None,
              num_neighbors: int = 1, with_replacement: bool = True,
              direction: str = BOTH, on_logit: bool = False) -> MatchResult:
    """1-d nearest-neighbor matching on |e(x_i) - e(x_j)|.

    on_logit matches on logit(e) instead; rankings coincide when scores do
    not hit the clipping bounds.
    """
    if model is None:
        model = fit_propensity(ds)
    scores = model.scores(ds.X)
    feat = np.log(scores / (1.0 - scores)) if on_logit else scores
    Z = feat.reshape(-1, 1)
    # unit variance keeps the 1-d Mahalanobis form a pure squared difference
    sigma = CovarianceModel(sigma=np.eye(1), ridge=0.0, mean=np.array([feat.mean()]),
                            cho=(np.eye(1), True))
    return match_on_features(Z, ds, sigma, num_neighbors=num_neighbors,
                             with_replacement=with_replacement, direction=direction)
