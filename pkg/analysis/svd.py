"""
Singular values of small dense matrices by one-sided (Hestenes) Jacobi.
"""
import logging

import numpy as np

from spectral.exceptions import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

JACOBI_TOL = 1e-15
MAX_SWEEPS = 60


def svd_small(m, tol: float = JACOBI_TOL, max_sweeps: int = MAX_SWEEPS) -> np.ndarray:
    """
    Singular values in descending order.

    Columns are orthogonalized pairwise by plane rotations until every pair
    is orthogonal to ``tol`` relative to its norms; the singular values are
    then the column norms.
    """
    a = np.array(m, dtype=np.float64, copy=True)
    if a.ndim != 2:
        raise ShapeError(f"svd_small needs a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("svd_small input contains non-finite entries")
    if a.shape[0] < a.shape[1]:
        a = np.ascontiguousarray(a.T)
    n = a.shape[1]
    if a.size == 0:
        return np.zeros(0)

    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                col_p = a[:, p]
                col_q = a[:, q]
                alpha = col_p @ col_p
                beta = col_q @ col_q
                gamma = col_p @ col_q
                if gamma == 0.0 or abs(gamma) <= tol * np.sqrt(alpha * beta):
                    continue
                rotated = True
                zeta = (beta - alpha) / (2.0 * gamma)
                t = (1.0 if zeta >= 0 else -1.0) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                new_p = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                a[:, p] = new_p
        if not rotated:
            break
    else:
        logger.warning(f"Jacobi SVD did not converge in {max_sweeps} sweeps for shape {a.shape}")

    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def numerical_rank(singular_values: np.ndarray, tau: float) -> int:
    """Count of singular values above tau * sigma_max."""
    if singular_values.size == 0 or singular_values[0] == 0.0:
        return 0
    return int(np.sum(singular_values > tau * singular_values[0]))
