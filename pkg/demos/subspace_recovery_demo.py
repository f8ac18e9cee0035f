#!/usr/bin/env python3
"""Walkthrough: recover a 2-d reduction subspace and use it for matching.

Generates a double-index response, estimates the reduction basis from sliced
inverse-regression moments, reports the recovery angle, then compares the
matching estimators on a confounded version of the data.
"""

import numpy as np

from mire import effects, pipeline
from mire.data import ObservationalDataset, covariance
from mire.sdr_ire import estimate_basis
from mire.subspace import largest_principal_angle

rng = np.random.default_rng(42)
n, p = 800, 10

# response depends on X only through two linear indices
X = rng.standard_normal((n, p))
B, _ = np.linalg.qr(rng.standard_normal((p, 2)))
u, v = X @ B[:, 0], X @ B[:, 1]
y = u * np.exp(v) + 0.2 * rng.standard_normal(n)

# confounded treatment: assignment leans on the first index
T = (rng.random(n) < 1 / (1 + np.exp(-u))).astype(int)
T[:2] = (0, 1)
ds = ObservationalDataset(X=X, T=T, Y=y)

basis = estimate_basis(ds, covariance(ds), k=2, h=5)
angle = largest_principal_angle(basis.beta, B)
print(f"largest principal angle to the true subspace: {angle:.3f} rad")
print(f"final discrepancy: {basis.final_discrepancy:.4g} "
      f"(converged: {basis.converged})")

# effect of matching in the reduced space vs raw covariates vs propensity
for method in ("mire", "nnm", "psm"):
    run = pipeline.run_method(ds, method)
    est = effects.ate(run.result)
    print(f"{method:>4}: ATE {est.value:+.3f}  (true effect is 0, unit sd {est.sd:.2f})")
