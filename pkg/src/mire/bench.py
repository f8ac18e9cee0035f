"""Semi-synthetic benchmark generators and the seeded replication runner.

Ships stand-in covariate generators with the same shapes as the public
benchmark files (24-column infant-health layout, 40-column twins layout),
so every pipeline runs without external data; real CSVs can be supplied
through the same entry points.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import effects as effects_mod
from . import pipeline
from .data import BINARY, CONTINUOUS, ObservationalDataset

JOBS_ATT_CRITERION = 886.0
JOBS_ATT_CRITERION_SE = 448.0

IHDP_N_CONTINUOUS = 6
IHDP_N_BINARY = 18
TWINS_N_COVARIATES = 40

_BETA_SUPPORT = np.array([0.0, 0.1, 0.2, 0.3, 0.4])
_BETA_PROBS_CONTINUOUS = np.array([0.5, 0.125, 0.125, 0.125, 0.125])
_BETA_PROBS_BINARY = np.array([0.6, 0.1, 0.1, 0.1, 0.1])


@dataclass(frozen=True)
class IhdpSurfaceB:
    """Sampled coefficients and calibrated offset of response surface B."""

    beta_B: np.ndarray
    omega_B: float
    W: float
    seed: int


@dataclass(frozen=True)
class TwinsConfounder:
    """Confounded-assignment parameters for the twins-style benchmark."""

    w: np.ndarray
    noise_sd: float
    seed: int


@dataclass(frozen=True)
class ReplicationReport:
    rows: tuple  # one dict per (replication, method)
    aggregates: dict  # method -> metric -> {"mean": .., "sd": ..}
    seeds: tuple

    def methods(self) -> list:
        return sorted({r["method"] for r in self.rows if "error" not in r})


def sample_surface_b_coefficients(column_kinds: Sequence[str],
                                  rng: np.random.Generator) -> np.ndarray:
    """Coefficient per covariate from the 5-point support, by column kind."""
    beta = np.empty(len(column_kinds))
    for j, kind in enumerate(column_kinds):
        probs = _BETA_PROBS_BINARY if kind == BINARY else _BETA_PROBS_CONTINUOUS
        beta[j] = rng.choice(_BETA_SUPPORT, p=probs)
    return beta


def simulate_ihdp_b(X: np.ndarray, T: np.ndarray, seed: int,
                    column_kinds: Optional[Sequence[str]] = None,
                    beta_B: Optional[np.ndarray] = None
                    ) -> tuple[ObservationalDataset, IhdpSurfaceB]:
    """Response surface B: Y(0) ~ N(exp((X+0.5) beta), 1), Y(1) ~ N(X beta - omega, 1).

    The offset omega is calibrated on the sample so that the treated-group
    mean of the noiseless effects mu1 - mu0 is exactly 4.
    """
    X = np.asarray(X, float)
    T = np.asarray(T, int)
    rng = np.random.default_rng(seed)
    if column_kinds is None:
        from .data import infer_column_kinds
        column_kinds = infer_column_kinds(X)
    if beta_B is None:
        beta_B = sample_surface_b_coefficients(column_kinds, rng)
    index = X @ beta_B
    mu0 = np.exp((X + 0.5) @ beta_B)
    if not np.all(np.isfinite(mu0)):
        raise OverflowError("exp overflow in the control surface; standardize X first")
    treated = T == 1
    if not treated.any():
        raise ValueError("need at least one treated unit to calibrate the offset")
    omega = float(np.mean(index[treated] - mu0[treated])) - 4.0
    mu1 = index - omega
    y0 = mu0 + rng.standard_normal(len(T))
    y1 = mu1 + rng.standard_normal(len(T))
    Y = np.where(T == 1, y1, y0)
    ds = ObservationalDataset(X=X, T=T, Y=Y, y1_true=y1, y0_true=y0,
                              column_kinds=tuple(column_kinds))
    return ds, IhdpSurfaceB(beta_B=beta_B, omega_B=omega, W=0.5, seed=seed)


def standin_ihdp(n: int, seed: int) -> tuple[ObservationalDataset, IhdpSurfaceB]:
    """Stand-in benchmark with the 6-continuous + 18-binary covariate layout.

    Treatment is confounded through a logistic index in a few covariates so
    the raw groups are imbalanced.
    """
    rng = np.random.default_rng(seed)
    Xc = rng.standard_normal((n, IHDP_N_CONTINUOUS))
    Xb = (rng.random((n, IHDP_N_BINARY)) < 0.3).astype(float)
    X = np.hstack([Xc, Xb])
    kinds = (CONTINUOUS,) * IHDP_N_CONTINUOUS + (BINARY,) * IHDP_N_BINARY
    logit = -0.8 + 0.8 * Xc[:, 0] + 0.5 * Xc[:, 1] + 0.6 * Xb[:, 0]
    T = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(int)
    if T.sum() < 2:
        T[:2] = 1
    if T.sum() > n - 2:
        T[-2:] = 0
    return simulate_ihdp_b(X, T, seed=seed + 1, column_kinds=kinds)


def simulate_twins(X: np.ndarray, y0: np.ndarray, y1: np.ndarray, seed: int
                   ) -> tuple[ObservationalDataset, TwinsConfounder]:
    """Confounded assignment: T_i ~ Bern(clamp(sigmoid(w'x_i) + n_i, 0, 1)).

    w ~ U(-0.1, 0.1)^40 and n_i ~ N(0, 0.1); clamping keeps the Bernoulli
    probability valid.
    """
    X = np.asarray(X, float)
    if X.shape[1] != TWINS_N_COVARIATES:
        raise ValueError(f"expected {TWINS_N_COVARIATES} covariate columns, got {X.shape[1]}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(-0.1, 0.1, size=TWINS_N_COVARIATES)
    noise = rng.normal(0.0, 0.1, size=X.shape[0])
    probs = np.clip(1.0 / (1.0 + np.exp(-(X @ w))) + noise, 0.0, 1.0)
    T = (rng.random(X.shape[0]) < probs).astype(int)
    if T.sum() < 2:
        T[np.argsort(probs)[-2:]] = 1
    if T.sum() > X.shape[0] - 2:
        T[np.argsort(probs)[:2]] = 0
    Y = np.where(T == 1, y1, y0)
    ds = ObservationalDataset(X=X, T=T, Y=Y, y1_true=np.asarray(y1, float),
                              y0_true=np.asarray(y0, float))
    return ds, TwinsConfounder(w=w, noise_sd=0.1, seed=seed)


def standin_twins(n: int, seed: int, true_ate: float = -0.025
                  ) -> tuple[ObservationalDataset, TwinsConfounder]:
    """Stand-in twins-style data: 40 covariates, outcomes through a 2-d index.

    The heterogeneous effects are recentered so the sample mean of
    y1 - y0 equals true_ate exactly.
    """
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, TWINS_N_COVARIATES))
    b1 = np.zeros(TWINS_N_COVARIATES)
    b1[:3] = (0.6, 0.5, 0.4)
    b2 = np.zeros(TWINS_N_COVARIATES)
    b2[3:5] = (0.6, -0.5)
    idx1 = X @ b1
    idx2 = X @ b2
    y0 = 0.2 * idx1 + 0.1 * np.tanh(idx2) + 0.02 * rng.standard_normal(n)
    tau = 0.01 * np.tanh(idx1)
    tau = tau - tau.mean() + true_ate
    y1 = y0 + tau
    return simulate_twins(X, y0, y1, seed=seed + 1)


def standin_null(n: int, p: int, seed: int) -> ObservationalDataset:
    """Zero-effect data: Y independent of T given X (in fact of T entirely)."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    T = (rng.random(n) < 0.5).astype(int)
    if T.sum() < 2:
        T[:2] = 1
    if T.sum() > n - 2:
        T[-2:] = 0
    y = X[:, 0] + 0.5 * rng.standard_normal(n)
    return ObservationalDataset(X=X, T=T, Y=y, y1_true=y.copy(), y0_true=y.copy())


_GENERATORS = {
    "ihdp-b": lambda n, seed: standin_ihdp(n, seed)[0],
    "twins": lambda n, seed: standin_twins(n, seed)[0],
    "null": lambda n, seed: standin_null(n, 10, seed),
}


def run_replications(config: dict) -> ReplicationReport:
    """Seeded replication loop over generators and methods.

    Config keys: generator (ihdp-b | twins | null), n, methods, replications,
    seed, plus estimator options (k, h, weighting, m).  Failures are recorded
    per row and the run continues.
    """
    generator = config.get("generator", "ihdp-b")
    if generator not in _GENERATORS:
        raise ValueError(f"unknown generator {generator!r}")
    methods = list(config.get("methods", ["mire", "nnm", "psm"]))
    R = int(config.get("replications", 10))
    base_seed = int(config.get("seed", 0))
    n = int(config.get("n", 300))
    opts = pipeline.EstimatorOptions(
        k=int(config.get("k", 2)),
        h=int(config.get("h", 5)),
        weighting=config.get("weighting", "identity"),
        num_neighbors=int(config.get("m", 1)),
        seed=base_seed,
    )

    rows = []
    seeds = []
    for r in range(1, R + 1):
        seed = base_seed + r
        seeds.append(seed)
        ds = _GENERATORS[generator](n, seed)
        for method in methods:
            rec = {"replication": r, "seed": seed}
            try:
                run = pipeline.run_method(ds, method, opts)
                rec.update(pipeline.summarize(run))
            except Exception as exc:  # recorded, run continues
                rec.update({"method": method, "error": str(exc)})
            rows.append(rec)

    metrics = sorted({key for row in rows for key in row
                      if key not in ("replication", "seed", "method", "error")})
    aggregates: dict = {}
    for method in methods:
        vals = {m: [row[m] for row in rows
                    if row.get("method") == method and m in row] for m in metrics}
        aggregates[method] = {
            m: {"mean": float(np.mean(v)),
                "sd": float(np.std(v, ddof=1)) if len(v) >= 2 else 0.0}
            for m, v in vals.items() if v
        }
    return ReplicationReport(rows=tuple(rows), aggregates=aggregates, seeds=tuple(seeds))


def write_report(report: ReplicationReport, csv_path, json_path,
                 plot_csv_path=None, header_extra: Optional[dict] = None) -> None:
    """Per-replication CSV, aggregate JSON, optional method-vs-metric plot data."""
    fieldnames = ["replication", "seed", "method"]
    other = sorted({k for row in report.rows for k in row if k not in fieldnames})
    fieldnames += other
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in report.rows:
            writer.writerow(row)
    payload = {"aggregates": report.aggregates, "seeds": list(report.seeds)}
    if header_extra:
        payload.update(header_extra)
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if plot_csv_path:
        with open(plot_csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method", "metric", "mean", "sd"])
            for method in sorted(report.aggregates):
                for metric in sorted(report.aggregates[method]):
                    agg = report.aggregates[method][metric]
                    writer.writerow([method, metric, repr(agg["mean"]), repr(agg["sd"])])


def jobs_att_eval(ds: ObservationalDataset, methods: Sequence[str] = ("mire", "nnm", "psm"),
                  opts: pipeline.EstimatorOptions = pipeline.EstimatorOptions()) -> dict:
    """ATT per method with deviation from the published $886 criterion."""
    att_opts = pipeline.EstimatorOptions(
        k=opts.k, h=opts.h, weighting=opts.weighting,
        num_neighbors=opts.num_neighbors, with_replacement=opts.with_replacement,
        ridge=opts.ridge, seed=opts.seed, direction="treated",
        psm_on_logit=opts.psm_on_logit)
    rows = []
    for method in methods:
        run = pipeline.run_method(ds, method, att_opts)
        est = effects_mod.att(run.result, run.dataset)
        rows.append({"method": method, "att": est.value,
                     "deviation_from_criterion": est.value - JOBS_ATT_CRITERION,
                     "att_unit_sd": est.sd})
    return {"criterion_att": JOBS_ATT_CRITERION,
            "criterion_se": JOBS_ATT_CRITERION_SE,
            "rows": rows}
