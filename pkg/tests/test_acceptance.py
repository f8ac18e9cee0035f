"""Acceptance gate: one test per release criterion, each printing pass/fail."""

import json
import time

import numpy as np
import pytest

from mire import bench, effects, pipeline
from mire.cli import EXIT_OK, main
from mire.data import ObservationalDataset, covariance
from mire.matching import match, match_on_features, reduce
from mire.sdr_ire import (IreProblem, estimate_basis, fit_ire, helmert_contrasts,
                          inverse_regression_moments, make_slices)
from mire.subspace import largest_principal_angle


def report(name, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def test_criterion_1_svd_oracle_equivalence():
    # identity weighting: ALS subspace == rank-k truncated SVD subspace
    rng = np.random.default_rng(0)
    t0 = time.time()
    worst = 0.0
    for _ in range(50):
        p = int(rng.integers(2, 9))
        h = int(rng.integers(3, 7))
        k = int(min(p, h - 1, rng.integers(1, 4)))
        zeta = rng.standard_normal((p, h - 1))
        prob = IreProblem(zeta=zeta, A=helmert_contrasts(h),
                          f_hat=np.full(h, 1.0 / h), weighting_kind="identity")
        basis = fit_ire(prob, k, restarts=1, seed=0)
        U, _, _ = np.linalg.svd(zeta)
        worst = max(worst, largest_principal_angle(basis.beta, U[:, :k]))
    elapsed = time.time() - t0
    report("1 SVD-oracle equivalence", worst < 1e-6 and elapsed < 10.0,
           f"max angle {worst:.2e}, {elapsed:.1f}s")


def test_criterion_2_discrepancy_monotonicity():
    rng = np.random.default_rng(1)
    violations = 0
    for i in range(100):
        p = int(rng.integers(3, 9))
        h = int(rng.integers(3, 7))
        k = int(min(p, h - 1, rng.integers(1, 4)))
        zeta = rng.standard_normal((p, h - 1))
        prob = IreProblem(zeta=zeta, A=helmert_contrasts(h),
                          f_hat=np.full(h, 1.0 / h), weighting_kind="identity")
        basis = fit_ire(prob, k, restarts=2, seed=i)
        trace = basis.e_trace
        violations += sum(1 for a, b in zip(trace, trace[1:]) if b > a)
    report("2 discrepancy monotonicity", violations == 0,
           f"{violations} violations over 100 fits")


def test_criterion_3_subspace_recovery():
    t0 = time.time()
    angles = []
    for seed in range(100):
        rng = np.random.default_rng(seed)
        n, p = 500, 10
        X = rng.standard_normal((n, p))
        B, _ = np.linalg.qr(rng.standard_normal((p, 2)))
        y = (X @ B[:, 0]) * np.exp(X @ B[:, 1]) + 0.2 * rng.standard_normal(n)
        T = (rng.random(n) < 0.5).astype(int)
        T[:2] = (0, 1)
        ds = ObservationalDataset(X=X, T=T, Y=y)
        basis = estimate_basis(ds, covariance(ds), k=2, h=5)
        angles.append(largest_principal_angle(basis.beta, B))
    mean_angle = float(np.mean(angles))
    elapsed = time.time() - t0
    report("3 subspace recovery", mean_angle < 0.2 and elapsed < 60.0,
           f"mean largest angle {mean_angle:.3f} rad, {elapsed:.1f}s")


def test_criterion_4_exact_identities():
    rng = np.random.default_rng(2)
    ok = True
    details = []
    for h in (2, 3, 5, 7):
        A = helmert_contrasts(h)
        ok &= np.abs(A.T @ A - np.eye(h - 1)).max() <= 1e-12
        ok &= np.abs(A.T @ np.ones(h)).max() <= 1e-12
    details.append("contrasts")

    n = 300
    X = rng.standard_normal((n, 4))
    T = (rng.random(n) < 0.5).astype(int)
    T[:2] = (0, 1)
    y = X @ np.array([1.0, 0.5, 0, 0]) + 0.3 * rng.standard_normal(n)
    ds = ObservationalDataset(X=X, T=T, Y=y)
    stats = inverse_regression_moments(ds, covariance(ds), make_slices(ds.Y, 5))
    ok &= np.abs(stats.xi_hat @ stats.f_hat).max() <= 1e-10
    details.append("weighted-mean")

    result = match(reduce(ds, np.eye(4)), ds)
    ok &= np.array_equal(result.y1_hat[ds.treated], ds.Y[ds.treated])
    ok &= np.array_equal(result.y0_hat[ds.controls], ds.Y[ds.controls])
    details.append("factual consistency")

    ok &= effects.ate(result).value == effects.ite(result).mean()
    details.append("ate = mean(ite)")
    report("4 exact identities", ok, ", ".join(details))


def test_criterion_5_ihdp_calibration_and_ordering():
    worst = 0.0
    for seed in range(20):
        ds, surface = bench.standin_ihdp(200, seed)
        mu0 = np.exp((ds.X + surface.W) @ surface.beta_B)
        mu1 = ds.X @ surface.beta_B - surface.omega_B
        worst = max(worst, abs(np.mean((mu1 - mu0)[ds.T == 1]) - 4.0))
    calibration_ok = worst < 1e-10

    t0 = time.time()
    rep = bench.run_replications({"generator": "ihdp-b", "n": 300,
                                  "replications": 100, "seed": 0,
                                  "methods": ["mire", "nnm", "psm"]})
    elapsed = time.time() - t0
    pehe = {m: rep.aggregates[m]["pehe"]["mean"] for m in ("mire", "nnm", "psm")}
    ordering_ok = pehe["mire"] < pehe["nnm"] and pehe["mire"] < pehe["psm"]
    report("5 IHDP-B calibration + PEHE ordering",
           calibration_ok and ordering_ok and elapsed < 300.0,
           f"max |ATT-4| {worst:.1e}; PEHE mire {pehe['mire']:.1f} "
           f"< nnm {pehe['nnm']:.1f}, psm {pehe['psm']:.1f}; {elapsed:.0f}s")


def test_criterion_6_twins_known_and_null_effect():
    estimates = []
    for r in range(50):
        ds, _ = bench.standin_twins(500, 100 + r, true_ate=-0.025)
        run = pipeline.run_method(ds, "mire")
        estimates.append(effects.ate(run.result).value)
    mean_est = float(np.mean(estimates))
    known_ok = abs(mean_est - (-0.025)) < 0.01 and -0.05 <= mean_est <= 0.0

    ds = bench.standin_null(2000, 10, seed=7)
    est = effects.ate(pipeline.run_method(ds, "mire").result)
    null_ok = abs(est.value) < 3 * est.sd / np.sqrt(est.n_used)
    report("6 TWINS-style known/null effect", known_ok and null_ok,
           f"mean ATE {mean_est:.4f} vs -0.025; null ATE {est.value:.4f}")


def test_criterion_7_jobs_protocol(tmp_path):
    rng = np.random.default_rng(3)
    n = 250
    lines = ["educ,age,re74,re75,black,hisp,married,nodegree,t,y"]
    for i in range(n):
        x = np.r_[rng.standard_normal(4), (rng.random(4) < 0.5).astype(float)]
        t = int(rng.random() < 0.4) if i >= 2 else i % 2
        y = 5000 + 2000 * x[0] + 800 * t + 500 * rng.standard_normal()
        lines.append(",".join(repr(float(v)) for v in x) + f",{t},{float(y)!r}")
    data = tmp_path / "jobs.csv"
    data.write_text("\n".join(lines) + "\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"protocol": "jobs", "dataset": str(data),
                               "schema": {"t": "t", "y": "y"},
                               "methods": ["mire", "nnm", "psm"],
                               "output": str(tmp_path / "jobs")}))
    code = main(["bench", "--config", str(cfg)])
    table = json.loads((tmp_path / "jobs_jobs.json").read_text())
    header_line = (tmp_path / "jobs_jobs.csv").read_text().splitlines()[0]
    constants_ok = (table["criterion_att"] == 886.0
                    and table["criterion_se"] == 448.0
                    and "886" in header_line and "448" in header_line)
    finite_ok = all(np.isfinite(r["att"]) for r in table["rows"])
    report("7 Jobs protocol", code == EXIT_OK and constants_ok and finite_ok,
           f"exit {code}, ATTs " + ", ".join(f"{r['att']:.0f}" for r in table["rows"]))


def test_criterion_8_affine_invariance_of_matching():
    rng = np.random.default_rng(4)
    mismatches = 0
    for t in range(20):
        n, k = 40, 3
        Z = np.random.default_rng(200 + t).standard_normal((n, k))
        T = np.zeros(n, dtype=int)
        T[: n // 2] = 1
        ds = ObservationalDataset(X=Z, T=T, Y=np.arange(float(n)))
        base = match_on_features(Z, ds, covariance(Z, ridge=0.0))
        M = rng.standard_normal((k, k)) + 2 * np.eye(k)
        Z2 = Z @ M
        other = match_on_features(Z2, ds, covariance(Z2, ridge=0.0))
        if base.pairs != other.pairs:
            mismatches += 1
    report("8 affine invariance of matching", mismatches == 0,
           f"{mismatches} mismatching pair maps over 20 transforms")


def test_criterion_9_bench_determinism(tmp_path):
    outputs = []
    for tag in ("a", "b"):
        cfg = tmp_path / f"{tag}.json"
        cfg.write_text(json.dumps({"generator": "ihdp-b", "n": 80,
                                   "replications": 3, "seed": 11,
                                   "methods": ["mire", "nnm"],
                                   "output": str(tmp_path / tag)}))
        assert main(["bench", "--config", str(cfg)]) == EXIT_OK
        outputs.append(tuple((tmp_path / f"{tag}{suffix}").read_bytes()
                             for suffix in ("_rows.csv", "_summary.json", "_plot.csv")))
    report("9 bench determinism", outputs[0] == outputs[1],
           "byte-identical rows/summary/plot files")
