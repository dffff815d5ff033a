"""
Dense-matrix oracle for the spectral core.

The core is linear in its input, so it has an HWC x HWC matrix. Columns are
built through the direct-summation DFT path and checked against the FFT path.
"""
import logging

import numpy as np

from spectral.exceptions import ShapeError, SizeCapError
from spectral.mixer import MixerParams, spectral_core

logger = logging.getLogger(__name__)

ORACLE_MAX_DIM = 512


def dense_core_oracle(params: MixerParams, height: int, width: int, channels: int) -> np.ndarray:
    """
    Column j is ``spectral_core(e_j)`` on the naive-DFT path, with
    vec(x) = x.reshape(-1) over (h, w, c).

    Raises:
        SizeCapError: H * W * C above 512
        ShapeError: ``channels`` differs from the parameters
    """
    dim = height * width * channels
    if dim > ORACLE_MAX_DIM:
        raise SizeCapError(f"Dense oracle is capped at HWC <= {ORACLE_MAX_DIM}, got {dim}")
    if params.channels != channels:
        raise ShapeError(f"Parameters are for C={params.channels}, oracle asked for C={channels}")
    matrix = np.empty((dim, dim))
    basis = np.zeros(dim)
    for j in range(dim):
        basis[j] = 1.0
        column = spectral_core(basis.reshape(height, width, channels), params, backend='naive')
        matrix[:, j] = column.reshape(-1)
        basis[j] = 0.0
    return matrix


def oracle_discrepancy(matrix: np.ndarray, params: MixerParams, height: int, width: int,
                       channels: int, trials: int = 10, seed: int = 0) -> float:
    """Max |M vec(x) - vec(core(x))| over random inputs on the FFT path."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal((height, width, channels))
        fast = spectral_core(x, params).reshape(-1)
        worst = max(worst, float(np.max(np.abs(matrix @ x.reshape(-1) - fast))))
    logger.info(f"Dense oracle vs FFT path over {trials} inputs: max error {worst:.3e}")
    return worst
