"""
Harmonized spectral operator for one axis.

One axis owns a skew-symmetric parameter vector theta (C(C-1)/2 scalars,
strictly lower triangle packed row-major), mapped to an SO(C) basis U by the
matrix exponential, and a gain table Gamma (B x C) that is linearly
interpolated to the K retained rFFT bins and then activated. Bin k is mixed by
M(k) = U diag(lambda_k) U^T, always applied in factored form.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .exceptions import NonFiniteError, ShapeError
from .fft import Axis

logger = logging.getLogger(__name__)

TAYLOR_DEGREE = 18
SCALING_THRESHOLD = 0.5


class GainMode(str, Enum):
    POSITIVE = 'Positive'
    SIGNED = 'Signed'
    COMPLEX = 'Complex'


def skew_size(channels: int) -> int:
    return channels * (channels - 1) // 2


def _finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{what} contains non-finite entries")


@dataclass
class SkewParams:
    """Exponential coordinates of one axis basis."""
    theta: np.ndarray
    channels: int

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1)
        if self.channels < 1:
            raise ShapeError(f"Channel count must be >= 1, got {self.channels}")
        if self.theta.size != skew_size(self.channels):
            raise ShapeError(
                f"Skew parameters for C={self.channels} need {skew_size(self.channels)} "
                f"entries, got {self.theta.size}"
            )
        _finite(self.theta, 'Skew parameters')

    @classmethod
    def zeros(cls, channels: int) -> 'SkewParams':
        return cls(np.zeros(skew_size(channels)), channels)


@dataclass
class OrthoBasis:
    u: np.ndarray

    def orthogonality_error(self) -> float:
        c = self.u.shape[-1]
        return float(np.max(np.abs(self.u.T @ self.u - np.eye(c))))

    def determinant(self) -> float:
        return float(np.linalg.det(self.u))

    def is_valid(self, tol: float = 1e-10) -> bool:
        return self.orthogonality_error() < tol and abs(self.determinant() - 1.0) < tol


@dataclass
class GainTable:
    """
    Raw (pre-activation) per-bin gains. ``phase`` is only used by the
    complex-gain variant.
    """
    gamma: np.ndarray
    phase: Optional[np.ndarray] = None

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)
        if self.gamma.ndim != 2 or self.gamma.shape[0] < 1 or self.gamma.shape[1] < 1:
            raise ShapeError(f"Gain table must be B x C with B, C >= 1, got {self.gamma.shape}")
        _finite(self.gamma, 'Gain table')
        if self.phase is not None:
            self.phase = np.asarray(self.phase, dtype=np.float64)
            if self.phase.shape != self.gamma.shape:
                raise ShapeError(
                    f"Phase table shape {self.phase.shape} differs from gain table {self.gamma.shape}"
                )
            _finite(self.phase, 'Phase table')

    @property
    def bins(self) -> int:
        return self.gamma.shape[0]

    @property
    def channels(self) -> int:
        return self.gamma.shape[1]


@dataclass
class GainVectors:
    lam: np.ndarray
    mode: GainMode = GainMode.POSITIVE

    @property
    def bins(self) -> int:
        return self.lam.shape[0]


@dataclass
class AxisOperatorParams:
    """An independent basis and response table for one spatial axis."""
    skew: SkewParams
    gains: GainTable
    axis: Axis = Axis.HEIGHT

    def __post_init__(self):
        self.axis = Axis.parse(self.axis)
        if self.skew.channels != self.gains.channels:
            raise ShapeError(
                f"Skew parameters are for C={self.skew.channels}, "
                f"gain table has C={self.gains.channels}"
            )

    @property
    def channels(self) -> int:
        return self.skew.channels

    def parameter_count(self) -> int:
        """C(C-1)/2 + B*C, plus B*C phases when a phase table is carried."""
        count = self.skew.theta.size + self.gains.gamma.size
        if self.gains.phase is not None:
            count += self.gains.phase.size
        return count

    @classmethod
    def identity(cls, channels: int, bins: int, axis=Axis.HEIGHT,
                 mode: GainMode = GainMode.POSITIVE) -> 'AxisOperatorParams':
        """theta = 0 and raw gains giving lambda = 1: M(k) = I at every bin."""
        gamma = np.full((bins, channels), identity_gain_raw(mode))
        phase = np.zeros((bins, channels)) if mode is GainMode.COMPLEX else None
        return cls(SkewParams.zeros(channels), GainTable(gamma, phase), axis)

    @classmethod
    def direct(cls, signal_len: int, channels: int, axis=Axis.HEIGHT,
               mode: GainMode = GainMode.POSITIVE) -> 'AxisOperatorParams':
        """Direct per-frequency table: B equals the retained bin count."""
        return cls.identity(channels, signal_len // 2 + 1, axis, mode)


def build_skew(p: SkewParams) -> np.ndarray:
    """A_ij = theta_ij (i > j), -theta_ji (i < j), 0 on the diagonal."""
    c = p.channels
    a = np.zeros((c, c))
    rows, cols = np.tril_indices(c, -1)
    a[rows, cols] = p.theta
    a[cols, rows] = -p.theta
    return a


def skew_generators(channels: int) -> np.ndarray:
    """dA/dtheta_p for every packed coordinate, shape (P, C, C)."""
    rows, cols = np.tril_indices(channels, -1)
    gens = np.zeros((rows.size, channels, channels))
    idx = np.arange(rows.size)
    gens[idx, rows, cols] = 1.0
    gens[idx, cols, rows] = -1.0
    return gens


def matrix_exp(a) -> np.ndarray:
    """
    Matrix exponential by scaling and squaring around a degree-18 Taylor core.

    Works for any square matrix and for stacks of them (``(..., n, n)``); the
    whole stack shares one scaling exponent taken from its largest 1-norm.

    Raises:
        ShapeError: input is not square
        NonFiniteError: input has NaN/inf entries
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ShapeError(f"matrix_exp needs square matrices, got shape {a.shape}")
    _finite(a, 'Matrix exponential input')
    n = a.shape[-1]
    eye = np.broadcast_to(np.eye(n), a.shape)
    if a.size == 0:
        return eye.copy()
    norm = float(np.max(np.sum(np.abs(a), axis=-2)))
    squarings = 0
    if norm > SCALING_THRESHOLD:
        squarings = int(np.ceil(np.log2(norm / SCALING_THRESHOLD)))
    x = a / (2.0 ** squarings)
    result = eye.copy()
    for k in range(TAYLOR_DEGREE, 0, -1):
        result = eye + (x @ result) / k
    for _ in range(squarings):
        result = result @ result
    return result


def expm_frechet_block(a: np.ndarray, e: np.ndarray) -> np.ndarray:
    """
    Frechet derivative L(A, E) read off exp([[A, E], [0, A]]).

    ``a`` is (..., n, n); ``e`` broadcasts against it, so one call evaluates a
    whole stack of directions. The block exponential runs the same Taylor core
    and scaling as ``matrix_exp`` but keeps its two blocks apart: both diagonal
    blocks equal exp(A), so they are formed once per ``a`` entry and only the
    upper-right block is carried per direction.
    """
    a = np.asarray(a, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or e.shape[-2:] != a.shape[-2:]:
        raise ShapeError(f"Frechet derivative needs matching square blocks, got {a.shape} and {e.shape}")
    _finite(a, 'Frechet derivative base')
    _finite(e, 'Frechet derivative direction')
    n = a.shape[-1]
    shape = np.broadcast_shapes(a.shape, e.shape)
    if n == 0 or 0 in shape:
        return np.zeros(shape)
    # 1-norm of the augmented block: left columns hold A, right columns A and E.
    norm = float(np.max(np.sum(np.abs(a), axis=-2) + np.sum(np.abs(e), axis=-2)))
    squarings = 0
    if norm > SCALING_THRESHOLD:
        squarings = int(np.ceil(np.log2(norm / SCALING_THRESHOLD)))
    x = a / (2.0 ** squarings)
    y = e / (2.0 ** squarings)
    eye = np.eye(n)
    diag = np.broadcast_to(eye, a.shape).copy()
    upper = np.zeros(shape)
    for k in range(TAYLOR_DEGREE, 0, -1):
        diag, upper = eye + (x @ diag) / k, (x @ upper + y @ diag) / k
    for _ in range(squarings):
        diag, upper = diag @ diag, diag @ upper + upper @ diag
    return upper


def basis_from_params(p: SkewParams) -> OrthoBasis:
    """U = exp(A(theta)); exactly the identity when theta is zero."""
    if not np.any(p.theta):
        return OrthoBasis(np.eye(p.channels))
    return OrthoBasis(matrix_exp(build_skew(p)))


def softplus(x: np.ndarray) -> np.ndarray:
    """ln(1 + e^x), evaluated as max(x, 0) + ln(1 + e^-|x|)."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def sigmoid(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def softplus_inverse(y: float) -> float:
    return float(np.log(np.expm1(y)))


def identity_gain_raw(mode: GainMode = GainMode.POSITIVE) -> float:
    """Raw table value whose activated gain is exactly 1 (ln(e - 1) for softplus)."""
    if GainMode(mode) is GainMode.SIGNED:
        return 1.0
    return softplus_inverse(1.0)


def interpolation_matrix(k_bins: int, table_bins: int) -> np.ndarray:
    """
    K x B linear-interpolation weights on the normalized rFFT coordinate.

    Bin k sits at table coordinate k/(K-1) * (B-1), so both endpoints are hit
    exactly; B = 1 broadcasts row 0 and K = 1 reads coordinate 0.
    """
    if k_bins < 1 or table_bins < 1:
        raise ShapeError(f"Need K >= 1 and B >= 1, got K={k_bins}, B={table_bins}")
    weights = np.zeros((k_bins, table_bins))
    if table_bins == 1 or k_bins == 1:
        weights[:, 0] = 1.0
        return weights
    for k in range(k_bins):
        pos = k * (table_bins - 1) / (k_bins - 1)
        lo = int(np.floor(pos))
        hi = min(lo + 1, table_bins - 1)
        frac = pos - lo
        weights[k, lo] += 1.0 - frac
        if frac > 0.0:
            weights[k, hi] += frac
    return weights


def real_bin_mask(signal_len: int) -> np.ndarray:
    """True on bins that must stay real: DC and, for even length, Nyquist."""
    k_bins = signal_len // 2 + 1
    mask = np.zeros(k_bins, dtype=bool)
    mask[0] = True
    if signal_len % 2 == 0:
        mask[-1] = True
    return mask


def interpolate_gains(g: GainTable, k_bins: int, mode: GainMode = GainMode.POSITIVE,
                      signal_len: Optional[int] = None) -> GainVectors:
    """
    Interpolate the table to ``k_bins`` rows, then activate.

    Positive: softplus. Signed: identity. Complex: softplus(r) * exp(i phi)
    with phi interpolated from ``g.phase``; when ``signal_len`` is given the
    phase is pinned to zero on DC/Nyquist so the inverse rFFT stays real.
    """
    mode = GainMode(mode)
    weights = interpolation_matrix(k_bins, g.bins)
    pre = weights @ g.gamma
    if mode is GainMode.SIGNED:
        return GainVectors(pre, mode)
    magnitude = softplus(pre)
    if mode is GainMode.POSITIVE:
        return GainVectors(magnitude, mode)
    phase = weights @ g.phase if g.phase is not None else np.zeros_like(pre)
    if signal_len is not None:
        phase = np.where(real_bin_mask(signal_len)[:, None], 0.0, phase)
    return GainVectors(magnitude * np.exp(1j * phase), mode)


def apply_operator(u, lambda_k, v) -> np.ndarray:
    """U (lambda_k * (U^T v)) for one complex C-vector."""
    u = u.u if isinstance(u, OrthoBasis) else np.asarray(u)
    lam = np.asarray(lambda_k)
    v = np.asarray(v)
    if u.shape[0] != lam.shape[-1] or u.shape[0] != v.shape[-1]:
        raise ShapeError(f"Operator dims disagree: U {u.shape}, lambda {lam.shape}, v {v.shape}")
    return u @ (lam * (u.T @ v))


def apply_spectral(u: np.ndarray, lam: np.ndarray, spectrum: np.ndarray, dim: int) -> np.ndarray:
    """
    Mix every (bin, position) coefficient of a natural-layout half-spectrum.

    ``u`` is a shared C x C basis or a K x C x C stack (untied variant);
    ``lam`` is K x C, real or complex.
    """
    lines = np.moveaxis(spectrum, dim, 0)
    coeff = np.matmul(lines, u)
    mixed = np.matmul(coeff * lam[:, None, :], np.swapaxes(u, -1, -2))
    return np.moveaxis(mixed, 0, dim)


def dense_operator(u, lambda_k) -> np.ndarray:
    """Materialized M(k) = U diag(lambda_k) U^T (verification only)."""
    u = u.u if isinstance(u, OrthoBasis) else np.asarray(u)
    return (u * np.asarray(lambda_k)) @ u.T


def reindex_gains(table: np.ndarray, sigma) -> np.ndarray:
    """(sigma . Lambda)_k = Lambda_{sigma^-1(k)}: row i moves to row sigma(i)."""
    table = np.asarray(table)
    sigma = np.asarray(sigma, dtype=int)
    if sigma.shape != (table.shape[0],) or not np.array_equal(np.sort(sigma), np.arange(table.shape[0])):
        raise ShapeError(f"sigma must permute 0..{table.shape[0] - 1}, got {sigma.tolist()}")
    out = np.empty_like(table)
    out[sigma] = table
    return out
