"""Central-subspace estimation via the inverse regression estimator.

Pipeline: slice the response into h groups, form the inverse-regression
directions xi_y = Sigma^-1 (E[X|Y=y] - E[X]), reduce them to the target
matrix zeta = xi * D_f * A (A a Helmert contrast basis), then minimize the
weighted quadratic discrepancy between zeta and a rank-k factorization S*C
by alternating least squares over the columns of S.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .data import CovarianceModel, NumericalError, ObservationalDataset

IDENTITY = "identity"
IRE_FULL = "ire_full"


class SlicingError(ValueError):
    """Raised when the response cannot be split into valid slices."""


@dataclass(frozen=True)
class Slices:
    """Index sets of the response slices, in ascending response order."""

    index_sets: tuple
    f_hat: np.ndarray
    boundaries: np.ndarray  # h-1 upper edges on Y
    assignments: np.ndarray  # length-n slice index per unit

    @property
    def h(self) -> int:
        return len(self.index_sets)


@dataclass(frozen=True)
class SliceStats:
    """Slice proportions, slice means and inverse-regression directions."""

    slices: Slices
    mean: np.ndarray  # overall covariate mean, length p
    slice_means: np.ndarray  # h x p
    xi_hat: np.ndarray  # p x h, column y solves Sigma xi = (mean_y - mean)

    @property
    def h(self) -> int:
        return self.slices.h

    @property
    def f_hat(self) -> np.ndarray:
        return self.slices.f_hat


@dataclass(frozen=True)
class IreProblem:
    """Reduced target zeta = xi * D_f * A plus the discrepancy weighting."""

    zeta: np.ndarray  # p x (h-1)
    A: np.ndarray  # h x (h-1) Helmert contrasts
    f_hat: np.ndarray
    weighting_kind: str
    V: Optional[np.ndarray] = None  # None means identity

    @property
    def p(self) -> int:
        return self.zeta.shape[0]

    @property
    def h(self) -> int:
        return self.zeta.shape[1] + 1

    def weight_matrix(self) -> np.ndarray:
        if self.V is None:
            return np.eye(self.p * (self.h - 1))
        return self.V


@dataclass(frozen=True)
class SdrBasis:
    """Ordered orthonormal basis of the estimated reduction subspace."""

    beta: np.ndarray  # p x k
    k: int
    final_discrepancy: float
    converged: bool = True
    e_trace: tuple = field(default=(), repr=False)


def make_slices(y: np.ndarray, h: int) -> Slices:
    """Equal-frequency slices of y; tied values never split across slices.

    If y has at most h distinct values, each distinct value becomes its own
    slice.  When a tie group straddles a boundary the whole group goes to
    the lower slice.  Slices that end up with fewer than 2 units are merged
    into their lower neighbor.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if h < 2:
        raise SlicingError("need h >= 2")
    if h > n / 2:
        raise SlicingError(f"h={h} too large for n={n} (need n >= 2h)")
    order = np.argsort(y, kind="stable")
    ys = y[order]
    if ys[0] == ys[-1]:
        raise SlicingError("degenerate response: all values identical")

    # tie groups in sorted order
    starts = np.flatnonzero(np.r_[True, np.diff(ys) != 0])
    ends = np.r_[starts[1:], n]
    groups = [order[s:e] for s, e in zip(starts, ends)]

    if len(groups) <= h:
        sets = groups
    else:
        sets = []
        cur: list = []
        assigned = 0
        for g in groups:
            cur.extend(g)
            assigned += len(g)
            if len(sets) < h - 1 and assigned >= n * (len(sets) + 1) / h - 1e-9:
                sets.append(np.array(cur, dtype=int))
                cur = []
        if cur:
            sets.append(np.array(cur, dtype=int))

    # merge undersized slices downward (upward for the first slice)
    merged = []
    for s in sets:
        if merged and (len(s) < 2 or len(merged[-1]) < 2):
            merged[-1] = np.concatenate([merged[-1], s])
        else:
            merged.append(np.asarray(s, dtype=int))
    sets = merged
    if len(sets) < 2:
        raise SlicingError("slicing collapsed to a single slice")

    f_hat = np.array([len(s) for s in sets], dtype=float) / n
    boundaries = np.array([y[s].max() for s in sets[:-1]])
    assignments = np.empty(n, dtype=int)
    for si, s in enumerate(sets):
        assignments[s] = si
    return Slices(index_sets=tuple(np.sort(s) for s in sets), f_hat=f_hat,
                  boundaries=boundaries, assignments=assignments)


def default_slice_count(y: np.ndarray, h: int = 5) -> int:
    """h for continuous y, number of categories for discrete y, capped at n//2."""
    n = len(y)
    n_distinct = len(np.unique(y))
    target = n_distinct if n_distinct <= h else h
    return max(2, min(target, n // 2))


def inverse_regression_moments(ds: ObservationalDataset, cov: CovarianceModel,
                               slices: Slices) -> SliceStats:
    """Per-slice means and directions xi_y solving Sigma xi_y = mean_y - mean."""
    h = slices.h
    slice_means = np.vstack([ds.X[s].mean(axis=0) for s in slices.index_sets])
    deltas = slice_means - cov.mean  # h x p
    xi = cov.solve(deltas.T)  # p x h
    return SliceStats(slices=slices, mean=cov.mean, slice_means=slice_means, xi_hat=xi)


def helmert_contrasts(h: int) -> np.ndarray:
    """h x (h-1) orthonormal contrasts: A'A = I, A'1 = 0."""
    A = np.zeros((h, h - 1))
    for j in range(1, h):
        norm = np.sqrt(j * (j + 1))
        A[:j, j - 1] = 1.0 / norm
        A[j, j - 1] = -j / norm
    return A


def build_problem(stats: SliceStats, weighting_kind: str = IDENTITY,
                  ds: Optional[ObservationalDataset] = None,
                  cov: Optional[CovarianceModel] = None,
                  gamma_ridge_scale: float = 1e-6) -> IreProblem:
    """Assemble zeta = xi * D_f * A and the weighting matrix V.

    Identity weighting uses V = I.  Full weighting estimates the asymptotic
    covariance of vec(zeta) from per-unit influence vectors (requires ds and
    cov), ridge-regularizes it and inverts.
    """
    h = stats.h
    A = helmert_contrasts(h)
    zeta = stats.xi_hat @ np.diag(stats.f_hat) @ A
    if weighting_kind == IDENTITY:
        return IreProblem(zeta=zeta, A=A, f_hat=stats.f_hat, weighting_kind=IDENTITY)
    if weighting_kind != IRE_FULL:
        raise ValueError(f"unknown weighting kind {weighting_kind!r}")
    if ds is None or cov is None:
        raise ValueError("full weighting needs the dataset and covariance model")

    # influence of unit i on vec(zeta): kron(A'(J_i - f), Sigma^-1 (x_i - mean))
    U = cov.solve((ds.X - cov.mean).T).T  # n x p
    J = np.zeros((ds.n, h))
    J[np.arange(ds.n), stats.slices.assignments] = 1.0
    Acoef = (J - stats.f_hat) @ A  # n x (h-1)
    G = np.einsum("ia,ij->iaj", Acoef, U).reshape(ds.n, -1)  # vec by column stacking
    gamma = np.cov(G, rowvar=False, ddof=1)
    dim = gamma.shape[0]
    eps = gamma_ridge_scale * np.trace(gamma) / dim
    try:
        cho = scipy.linalg.cho_factor(gamma + eps * np.eye(dim))
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        raise NumericalError("influence covariance not invertible after regularization") from None
    V = scipy.linalg.cho_solve(cho, np.eye(dim))
    V = 0.5 * (V + V.T)
    return IreProblem(zeta=zeta, A=A, f_hat=stats.f_hat, weighting_kind=IRE_FULL, V=V)


def _vec(M: np.ndarray) -> np.ndarray:
    return np.asarray(M).flatten(order="F")


def discrepancy(problem: IreProblem, S: np.ndarray, C: np.ndarray) -> float:
    """Weighted quadratic gap between zeta and the rank-k fit S @ C."""
    r = _vec(problem.zeta) - _vec(S @ C)
    if problem.V is None:
        return float(r @ r)
    return float(r @ problem.V @ r)


def solve_C(problem: IreProblem, S: np.ndarray) -> np.ndarray:
    """Coordinates minimizing the discrepancy for fixed S (GLS in vec form)."""
    k = S.shape[1]
    hm1 = problem.h - 1
    if problem.V is None:
        C, *_ = np.linalg.lstsq(S, problem.zeta, rcond=None)
        return C
    B = np.kron(np.eye(hm1), S)  # p(h-1) x k(h-1)
    M = B.T @ problem.V @ B
    rhs = B.T @ problem.V @ _vec(problem.zeta)
    try:
        c = scipy.linalg.solve(M, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        raise NumericalError("singular normal matrix in coordinate solve") from None
    return c.reshape((k, hm1), order="F")


def update_direction(problem: IreProblem, S: np.ndarray, C: np.ndarray,
                     d: int) -> tuple[np.ndarray, bool]:
    """GLS update of column d of S on the orthocomplement of the other columns.

    Returns the unit-norm candidate direction and a stall flag (True when the
    candidate degenerated, in which case the previous direction is returned).
    """
    p, k = S.shape
    keep = [j for j in range(k) if j != d]
    S_rest = S[:, keep]
    C_rest = C[keep, :]
    c_d = C[d, :]  # length h-1
    R = problem.zeta - S_rest @ C_rest
    alpha = _vec(R)
    if S_rest.shape[1] > 0:
        Qs = scipy.linalg.orth(S_rest)
        Q = np.eye(p) - Qs @ Qs.T
    else:
        Q = np.eye(p)
    Bd = np.kron(c_d.reshape(-1, 1), np.eye(p))  # p(h-1) x p
    V = problem.V
    if V is None:
        M = (c_d @ c_d) * Q  # Q Bd' Bd Q with Q idempotent
        rhs = Q @ (R @ c_d)
    else:
        BQ = Bd @ Q
        M = BQ.T @ V @ BQ
        rhs = BQ.T @ V @ alpha
    s, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    s = Q @ s
    norm = np.linalg.norm(s)
    if norm < 1e-12:
        return S[:, d].copy(), True
    return s / norm, False


def _ordered_basis(S: np.ndarray, C: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(S) ordered by explained fit, via SVD of S@C."""
    k = S.shape[1]
    U, svals, _ = np.linalg.svd(S @ C, full_matrices=False)
    rank = int(np.sum(svals > max(svals[0], 1e-300) * 1e-12)) if svals.size else 0
    if rank >= k:
        return U[:, :k]
    # rank-deficient fit: keep leading SVD directions, pad from span(S)
    stacked = np.hstack([U[:, :rank], S])
    Q, _ = np.linalg.qr(stacked)
    return Q[:, :k]


def fit_ire(problem: IreProblem, k: int, max_sweeps: int = 200, tol: float = 1e-8,
            restarts: int = 0, seed: int = 0) -> SdrBasis:
    """Alternating least squares for the rank-k minimum-discrepancy basis.

    Restart 0 starts from the top-k left singular vectors of zeta; additional
    restarts start from random orthonormal matrices.  Each direction update is
    accepted only if the discrepancy does not increase, so the accepted
    discrepancy sequence is non-increasing.  Returns the best restart.
    """
    p, hm1 = problem.zeta.shape
    if not (1 <= k <= min(p, hm1)):
        raise ValueError(f"need 1 <= k <= min(p, h-1) = {min(p, hm1)}, got k={k}")

    U0, _, _ = np.linalg.svd(problem.zeta, full_matrices=False)
    starts = [U0[:, :k]]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        Q, _ = np.linalg.qr(rng.standard_normal((p, k)))
        starts.append(Q[:, :k])

    best = None
    for S0 in starts:
        S = S0.copy()
        C = solve_C(problem, S)
        e = discrepancy(problem, S, C)
        trace = [e]
        converged = False
        for _ in range(max_sweeps):
            e_sweep_start = e
            any_accepted = False
            for d in range(k):
                s_new, stalled = update_direction(problem, S, C, d)
                if stalled:
                    continue
                S_cand = S.copy()
                S_cand[:, d] = s_new
                C_cand = solve_C(problem, S_cand)
                e_cand = discrepancy(problem, S_cand, C_cand)
                if e_cand <= e:
                    S, C, e = S_cand, C_cand, e_cand
                    trace.append(e)
                    any_accepted = True
            if not any_accepted:
                converged = True
                break
            if e_sweep_start - e <= tol * max(e_sweep_start, 1e-300):
                converged = True
                break
        result = (e, converged, S, C, trace)
        if best is None or e < best[0]:
            best = result

    e, converged, S, C, trace = best
    beta = _ordered_basis(S, C)
    return SdrBasis(beta=beta, k=k, final_discrepancy=e, converged=converged,
                    e_trace=tuple(trace))


def estimate_basis(ds: ObservationalDataset, cov: CovarianceModel, k: int = 2,
                   h: int = 5, weighting: str = IDENTITY, max_sweeps: int = 200,
                   tol: float = 1e-8, restarts: int = 0, seed: int = 0) -> SdrBasis:
    """End-to-end reduction basis: slice Y, form moments, fit the minimizer."""
    h_eff = default_slice_count(ds.Y, h)
    slices = make_slices(ds.Y, h_eff)
    stats = inverse_regression_moments(ds, cov, slices)
    problem = build_problem(stats, weighting, ds=ds, cov=cov)
    k_eff = min(k, problem.zeta.shape[1], ds.p)
    return fit_ire(problem, k_eff, max_sweeps=max_sweeps, tol=tol,
                   restarts=restarts, seed=seed)
