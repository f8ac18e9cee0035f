"""Principal angles between subspaces (used for recovery diagnostics)."""

from __future__ import annotations

import numpy as np
import scipy.linalg


def principal_angles(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Canonical angles (radians, ascending) between span(A) and span(B).

    A and B are matrices whose columns span the subspaces; they need not
    be orthonormal.
    """
    Qa = scipy.linalg.orth(np.atleast_2d(np.asarray(A, float)))
    Qb = scipy.linalg.orth(np.atleast_2d(np.asarray(B, float)))
    s = scipy.linalg.svd(Qa.T @ Qb, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    angles = np.arccos(s)
    return np.sort(angles)


def largest_principal_angle(A: np.ndarray, B: np.ndarray) -> float:
    return float(principal_angles(A, B)[-1])
