"""Causal estimands (ITE/ATE/ATT) and evaluation metrics from matched results."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .data import ObservationalDataset
from .matching import MatchResult, TREATED


@dataclass(frozen=True)
class EffectEstimate:
    kind: str  # "ATE" | "ATT" | "ITE"
    value: Union[float, np.ndarray]
    sd: float  # dispersion of the unit-level effects entering the estimate
    n_used: int


@dataclass(frozen=True)
class MetricReport:
    pehe: float
    rmse: float
    sd: float
    bias: float

    def as_dict(self) -> dict:
        return {"pehe": self.pehe, "rmse": self.rmse, "sd": self.sd, "bias": self.bias}


def ite(result: MatchResult) -> np.ndarray:
    """Unit-level effect: imputed y1 minus imputed y0.

    In treated-only (ATT) mode the control entries are NaN.
    """
    return result.y1_hat - result.y0_hat


def _dispersion(values: np.ndarray) -> float:
    return float(values.std(ddof=1)) if len(values) >= 2 else 0.0


def ate(result: MatchResult) -> EffectEstimate:
    """Average effect over all units (mean of the ITE vector)."""
    if result.direction == TREATED:
        raise ValueError("ATE needs both-direction matching; result is treated-only")
    effects = ite(result)
    return EffectEstimate(kind="ATE", value=float(effects.mean()),
                          sd=_dispersion(effects), n_used=len(effects))


def att(result: MatchResult, ds: ObservationalDataset) -> EffectEstimate:
    """Average effect over treated units only."""
    effects = ite(result)[ds.treated]
    return EffectEstimate(kind="ATT", value=float(effects.mean()),
                          sd=_dispersion(effects), n_used=len(effects))


def pehe(ite_hat: np.ndarray, y1_true: np.ndarray, y0_true: np.ndarray) -> float:
    """Mean squared error of the unit-level effects (no square root)."""
    true_effects = np.asarray(y1_true, float) - np.asarray(y0_true, float)
    err = np.asarray(ite_hat, float) - true_effects
    return float(np.mean(err ** 2))


def rmse(estimates: np.ndarray, truths: np.ndarray) -> float:
    """Root-mean-square error between estimates and truths."""
    estimates = np.asarray(estimates, float)
    truths = np.asarray(truths, float)
    if estimates.shape != truths.shape:
        raise ValueError("estimates and truths must have equal length")
    return float(np.sqrt(np.mean((estimates - truths) ** 2)))


def sd(values: np.ndarray) -> float:
    """Sample standard deviation, n-1 denominator."""
    values = np.asarray(values, float)
    if len(values) < 2:
        raise ValueError("sd needs at least 2 values")
    return float(values.std(ddof=1))
