"""Covariate reduction, Mahalanobis nearest-neighbor matching and imputation.

Units are matched across treatment groups on the reduced covariates
Z = X @ beta using the squared Mahalanobis distance
(z_i - z_j)' Sigma_z^-1 (z_i - z_j), with Sigma_z estimated from all units.
Counterfactual outcomes are imputed as the mean outcome of the matched set.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .data import CovarianceModel, NumericalError, ObservationalDataset, covariance
from .sdr_ire import SdrBasis

BOTH = "both"
TREATED = "treated"


@dataclass(frozen=True)
class ReducedCovariates:
    """Z = X @ beta plus the covariance of Z used in the distance."""

    Z: np.ndarray  # n x k
    source_basis: Optional[SdrBasis]
    sigma_z: CovarianceModel

    @property
    def k(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class MatchResult:
    """Matched index sets, distances and imputed potential outcomes."""

    pairs: dict  # unit index -> tuple of matched opposite-group indices
    distances: dict  # unit index -> tuple of matched squared distances
    y1_hat: np.ndarray
    y0_hat: np.ndarray
    with_replacement: bool
    num_neighbors: int
    direction: str


def reduce(ds: ObservationalDataset, basis, ridge: Optional[float] = None) -> ReducedCovariates:
    """Project covariates onto the basis and estimate the reduced covariance."""
    beta = basis.beta if isinstance(basis, SdrBasis) else np.asarray(basis, float)
    if beta.ndim == 1:
        beta = beta.reshape(-1, 1)
    if beta.shape[0] != ds.p:
        raise ValueError(f"basis has {beta.shape[0]} rows, dataset has p={ds.p}")
    Z = ds.X @ beta
    sigma_z = covariance(Z, ridge=ridge)
    src = basis if isinstance(basis, SdrBasis) else None
    return ReducedCovariates(Z=Z, source_basis=src, sigma_z=sigma_z)


def mahalanobis(zi: np.ndarray, zj: np.ndarray, sigma_z: CovarianceModel) -> float:
    """Squared Mahalanobis distance (no square root)."""
    d = np.asarray(zi, float) - np.asarray(zj, float)
    return float(d @ sigma_z.solve(d))


def _pairwise_sq_mahalanobis(Za: np.ndarray, Zb: np.ndarray,
                             sigma_z: CovarianceModel) -> np.ndarray:
    """All squared distances between rows of Za and rows of Zb."""
    # (a-b)' S^-1 (a-b) via the whitened representation
    Wa = sigma_z.solve(Za.T).T  # Sigma^-1 applied rowwise
    qa = np.einsum("ij,ij->i", Za, Wa)
    Wb = sigma_z.solve(Zb.T).T
    qb = np.einsum("ij,ij->i", Zb, Wb)
    cross = Za @ Wb.T
    D = qa[:, None] + qb[None, :] - 2.0 * cross
    return np.maximum(D, 0.0)


def match_on_features(Z: np.ndarray, ds: ObservationalDataset, sigma_z: CovarianceModel,
                      num_neighbors: int = 1, with_replacement: bool = True,
                      direction: str = BOTH) -> MatchResult:
    """Nearest-neighbor matching on an arbitrary feature matrix Z.

    direction 'both' matches every unit against the opposite group (ATE/ITE);
    'treated' matches treated units only (ATT).  Ties break to the lowest
    unit index; without replacement each matched unit is removed greedily in
    ascending query-index order.
    """
    m = num_neighbors
    if m < 1:
        raise ValueError("num_neighbors must be >= 1")
    treated = ds.treated
    controls = ds.controls
    if m > len(controls) or (direction == BOTH and m > len(treated)):
        raise ValueError(f"num_neighbors={m} exceeds an opposite-group size "
                         f"({len(treated)} treated, {len(controls)} controls)")

    y1_hat = np.full(ds.n, np.nan)
    y0_hat = np.full(ds.n, np.nan)
    y1_hat[treated] = ds.Y[treated]
    y0_hat[controls] = ds.Y[controls]

    pairs: dict = {}
    dists: dict = {}

    def run_side(queries: np.ndarray, pool: np.ndarray, impute: np.ndarray):
        D = _pairwise_sq_mahalanobis(Z[queries], Z[pool], sigma_z)
        available = np.ones(len(pool), dtype=bool)
        for qi, i in enumerate(queries):
            cand_mask = available if not with_replacement else np.ones(len(pool), bool)
            cand_pos = np.flatnonzero(cand_mask)
            if len(cand_pos) < m:
                raise ValueError(f"not enough unmatched candidates left for unit {i}")
            order = np.argsort(D[qi, cand_pos], kind="stable")[:m]
            chosen_pos = cand_pos[order]
            chosen = pool[chosen_pos]
            pairs[int(i)] = tuple(int(j) for j in chosen)
            dists[int(i)] = tuple(float(D[qi, cp]) for cp in chosen_pos)
            impute[i] = ds.Y[chosen].mean()
            if not with_replacement:
                available[chosen_pos] = False

    run_side(treated, controls, y0_hat)
    if direction == BOTH:
        run_side(controls, treated, y1_hat)
    elif direction != TREATED:
        raise ValueError(f"unknown direction {direction!r}")

    return MatchResult(pairs=pairs, distances=dists, y1_hat=y1_hat, y0_hat=y0_hat,
                       with_replacement=with_replacement, num_neighbors=m,
                       direction=direction)


def match(red: ReducedCovariates, ds: ObservationalDataset, num_neighbors: int = 1,
          with_replacement: bool = True, direction: str = BOTH) -> MatchResult:
    """Mahalanobis nearest-neighbor matching on reduced covariates."""
    return match_on_features(red.Z, ds, red.sigma_z, num_neighbors=num_neighbors,
                             with_replacement=with_replacement, direction=direction)


def _smd(x_t: np.ndarray, x_c: np.ndarray, pooled_sd: float) -> float:
    if pooled_sd <= 0 or not np.isfinite(pooled_sd):
        return float("nan")
    return float((x_t.mean() - x_c.mean()) / pooled_sd)


def balance_diagnostics(ds: ObservationalDataset, red: ReducedCovariates,
                        result: MatchResult) -> dict:
    """Standardized mean differences before/after matching.

    Post-match SMDs compare treated units against their matched controls
    (with multiplicity).  Pooled sd comes from the pre-match groups so the
    before/after numbers share a scale.  Returned dict has keys
    'covariates' and 'reduced', each mapping name -> (before, after).
    """
    treated = ds.treated
    matched_controls = np.array(
        [j for i in treated for j in result.pairs.get(int(i), ())], dtype=int)

    def table(M: np.ndarray, names) -> dict:
        out = {}
        for j, name in enumerate(names):
            xt, xc = M[treated, j], M[ds.controls, j]
            pooled = np.sqrt((xt.var(ddof=1) + xc.var(ddof=1)) / 2.0)
            before = _smd(xt, xc, pooled)
            after = _smd(xt, M[matched_controls, j], pooled) if len(matched_controls) else float("nan")
            out[name] = (before, after)
        return out

    return {
        "covariates": table(ds.X, ds.column_names),
        "reduced": table(red.Z, [f"z{j + 1}" for j in range(red.k)]),
    }


def export_csv(result: MatchResult, ds: ObservationalDataset, path) -> None:
    """Write one row per unit: group, matched indices, distance, outcomes."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["unit", "group", "matched_indices", "distance",
                         "y_obs", "y1_hat", "y0_hat"])
        for i in range(ds.n):
            matched = result.pairs.get(i, ())
            dist = result.distances.get(i, ())
            writer.writerow([
                i, int(ds.T[i]),
                ";".join(str(j) for j in matched),
                ";".join(repr(d) for d in dist),
                repr(float(ds.Y[i])),
                repr(float(result.y1_hat[i])),
                repr(float(result.y0_hat[i])),
            ])
