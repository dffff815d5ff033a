"""
Jacobian-rank check of the operator-family dimension C(C-1)/2 + KC.

The map (theta, Lambda) -> {M(k)} uses the direct per-frequency table, with
every M(k) = U diag(lambda_k) U^T flattened to its upper triangle plus
diagonal. Pairwise-distinct gain columns (joint spectral signatures) are the
generic case; each coinciding pair absorbs one rotation and drops the rank.
"""
import logging
from dataclasses import dataclass
from itertools import combinations
from typing import Tuple

import numpy as np

from spectral.exceptions import NonFiniteError, ShapeError
from spectral.operator import SkewParams, basis_from_params, dense_operator, skew_size
from .svd import numerical_rank, svd_small

logger = logging.getLogger(__name__)

DOF_FD_STEP = 1e-5
RANK_TAU = 1e-8
GENERIC_TOL = 1e-6


@dataclass
class DofReport:
    channels: int
    bins: int
    expected_rank: int
    measured_rank: int
    singular_values: np.ndarray
    tolerance: float
    generic: bool

    @property
    def matches(self) -> bool:
        return self.measured_rank == self.expected_rank


def expected_dof(channels: int, bins: int) -> int:
    return skew_size(channels) + bins * channels


def operator_family_map(theta: np.ndarray, lam_table: np.ndarray) -> np.ndarray:
    """Stacked upper-triangle-with-diagonal entries of every M(k)."""
    bins, channels = lam_table.shape
    u = basis_from_params(SkewParams(theta, channels)).u
    rows, cols = np.triu_indices(channels)
    return np.concatenate([dense_operator(u, lam_table[k])[rows, cols] for k in range(bins)])


def signatures_generic(lam_table: np.ndarray, tol: float = GENERIC_TOL) -> bool:
    """True when every pair of gain columns differs by more than ``tol``."""
    for i, j in combinations(range(lam_table.shape[1]), 2):
        if np.linalg.norm(lam_table[:, i] - lam_table[:, j]) <= tol:
            return False
    return True


def dof_rank_check(theta, gain_table_direct, fd_step: float = DOF_FD_STEP,
                   tau: float = RANK_TAU) -> DofReport:
    """
    Numerical rank of the family map's Jacobian by central differences.

    Args:
        theta: C(C-1)/2 skew coordinates
        gain_table_direct: K x C table of gains, one row per retained bin
        fd_step: central-difference step on theta and on the gains
        tau: rank threshold relative to the largest singular value

    Raises:
        ShapeError: theta size does not match the table's channel count
        NonFiniteError: the Jacobian has non-finite entries
    """
    theta = np.asarray(theta, dtype=np.float64).reshape(-1)
    table = np.asarray(gain_table_direct, dtype=np.float64)
    if table.ndim != 2:
        raise ShapeError(f"Direct gain table must be K x C, got {table.shape}")
    bins, channels = table.shape
    if theta.size != skew_size(channels):
        raise ShapeError(f"theta needs {skew_size(channels)} entries for C={channels}, got {theta.size}")

    point = np.concatenate([theta, table.reshape(-1)])

    def family(z: np.ndarray) -> np.ndarray:
        return operator_family_map(z[:theta.size], z[theta.size:].reshape(bins, channels))

    columns = []
    for i in range(point.size):
        step = np.zeros_like(point)
        step[i] = fd_step
        columns.append((family(point + step) - family(point - step)) / (2.0 * fd_step))
    jacobian = np.stack(columns, axis=1)
    if not np.all(np.isfinite(jacobian)):
        raise NonFiniteError("Family-map Jacobian contains non-finite entries")

    singular_values = svd_small(jacobian)
    report = DofReport(
        channels=channels,
        bins=bins,
        expected_rank=expected_dof(channels, bins),
        measured_rank=numerical_rank(singular_values, tau),
        singular_values=singular_values,
        tolerance=tau,
        generic=signatures_generic(table),
    )
    logger.info(
        f"DOF check C={channels} K={bins}: expected {report.expected_rank}, "
        f"measured {report.measured_rank}, generic={report.generic}"
    )
    return report


def random_point(channels: int, bins: int, rng: np.random.Generator,
                 degenerate: bool = False) -> Tuple[np.ndarray, np.ndarray]:
    """
    Random theta and positive direct gains. ``degenerate`` copies gain column
    1 onto column 0 at every bin so two signatures coincide.
    """
    theta = rng.uniform(-1.0, 1.0, size=skew_size(channels))
    table = rng.uniform(0.5, 2.0, size=(bins, channels))
    if degenerate:
        if channels < 2:
            raise ShapeError("A degenerate signature needs at least two channels")
        table[:, 0] = table[:, 1]
    return theta, table
