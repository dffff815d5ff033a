"""
Real FFTs along the height or width axis of a channel-last feature map.

Conventions used throughout the project:

* Forward transforms are unnormalized, inverses carry 1/n, so
  ``irfft_axis(rfft_axis(x)) == x``.
* A ``HalfSpectrum`` stores the K = n//2 + 1 retained bins on its first
  dimension, the untouched spatial axis second and channels last, so the C
  coefficients of one Fourier line are contiguous.
* Half-spectrum inner product: ``<a, b> = sum_k c_k Re(conj(a_k) b_k)`` with
  c_k = 1 for DC and (even n) Nyquist, 2 for every other bin, which counts
  each omitted conjugate mirror once.
"""
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import conf
from .exceptions import NonFiniteError, ShapeError, SizeCapError, SpectralResidueError

logger = logging.getLogger(__name__)


class Axis(str, Enum):
    HEIGHT = 'Height'
    WIDTH = 'Width'

    @property
    def dim(self) -> int:
        """Array dimension of this axis in an H x W x C feature map."""
        return 0 if self is Axis.HEIGHT else 1

    @classmethod
    def parse(cls, value) -> 'Axis':
        if isinstance(value, Axis):
            return value
        for member in cls:
            if str(value).lower() in (member.value.lower(), member.name.lower()):
                return member
        raise ShapeError(f"Unknown axis: {value!r}")


def half_length(n: int) -> int:
    """Number of retained rFFT bins for a line of length ``n``."""
    return n // 2 + 1


def bin_weights(n: int) -> np.ndarray:
    """Conjugate-pair multiplicity of every retained bin for length ``n``."""
    weights = np.full(half_length(n), 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return weights


def as_feature_map(x) -> np.ndarray:
    """
    Validate and coerce an H x W x C real feature map to float64.

    Raises:
        ShapeError: not three-dimensional or a zero-size axis
        NonFiniteError: NaN or infinite entries
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeError(f"Feature map must be H x W x C, got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeError(f"Feature map axes must be >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("Feature map contains non-finite entries")
    return arr


@dataclass(frozen=True)
class HalfSpectrum:
    """Complex half-spectrum of a feature map along one axis."""
    data: np.ndarray
    axis: Axis
    original_len: int

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ShapeError(f"Half-spectrum must be K x other x C, got {self.data.shape}")
        if self.data.shape[0] != half_length(self.original_len):
            raise ShapeError(
                f"Half-spectrum has {self.data.shape[0]} bins, expected "
                f"{half_length(self.original_len)} for length {self.original_len}"
            )

    @property
    def retained(self) -> int:
        return self.data.shape[0]


def imag_residue(spectrum: np.ndarray, n: int, dim: int = 0) -> float:
    """
    Relative imaginary mass on the bins that must be real (DC, and Nyquist
    for even ``n``) of a half-spectrum whose bins lie along ``dim``.
    """
    lines = np.moveaxis(np.asarray(spectrum), dim, 0)
    scale = float(np.max(np.abs(lines))) if lines.size else 0.0
    if scale == 0.0:
        return 0.0
    residue = float(np.max(np.abs(lines[0].imag)))
    if n % 2 == 0:
        residue = max(residue, float(np.max(np.abs(lines[-1].imag))))
    return residue / scale


def check_residue(spectrum: np.ndarray, n: int, dim: int = 0) -> None:
    residue = imag_residue(spectrum, n, dim)
    if residue > conf.IMAG_RESIDUE_TOL:
        logger.error(f"Imaginary residue {residue:.3e} on real-valued bins (n={n})")
        raise SpectralResidueError(
            f"Imaginary residue {residue:.3e} exceeds {conf.IMAG_RESIDUE_TOL:.1e}; "
            f"conjugate symmetry was broken upstream"
        )


# Natural-layout helpers: bins stay in the transformed dimension. The mixer and
# the reverse-mode engine work on these to avoid moving axes twice per pass.

def rfft_lines(x: np.ndarray, dim: int) -> np.ndarray:
    return np.fft.rfft(x, axis=dim)


def irfft_lines(spectrum: np.ndarray, n: int, dim: int) -> np.ndarray:
    if conf.VERIFY_FFT:
        check_residue(spectrum, n, dim)
    return np.fft.irfft(spectrum, n=n, axis=dim)


def _broadcast_weights(n: int, dim: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[dim] = half_length(n)
    return bin_weights(n).reshape(shape)


def rfft_adjoint(y: np.ndarray, n: int, dim: int) -> np.ndarray:
    """Adjoint of ``rfft_lines`` under the weighted half-spectrum inner product."""
    return n * np.fft.irfft(y, n=n, axis=dim)


def rfft_vjp(grad: np.ndarray, n: int, dim: int) -> np.ndarray:
    """
    Pull back a half-spectrum gradient (d/dRe + i d/dIm) through ``rfft_lines``.
    """
    return rfft_adjoint(grad / _broadcast_weights(n, dim, grad.ndim), n, dim)


def irfft_vjp(grad: np.ndarray, n: int, dim: int) -> np.ndarray:
    """Pull back a real-signal gradient through ``irfft_lines``."""
    return np.fft.rfft(grad, axis=dim) * _broadcast_weights(n, dim, grad.ndim) / n


def half_spectrum_inner(a: np.ndarray, b: np.ndarray, n: int, dim: int = 0) -> float:
    weights = _broadcast_weights(n, dim, np.ndim(a))
    return float(np.sum(weights * np.real(np.conj(a) * b)))


def rfft_axis(x, axis) -> HalfSpectrum:
    """
    Unnormalized forward real FFT of every spatial line along ``axis``.

    Args:
        x: H x W x C real feature map
        axis: Axis.HEIGHT or Axis.WIDTH (or their names)

    Returns:
        HalfSpectrum with K = n//2 + 1 bins first; channels are not transformed
    """
    axis = Axis.parse(axis)
    arr = as_feature_map(x)
    spectrum = rfft_lines(arr, axis.dim)
    data = np.ascontiguousarray(np.moveaxis(spectrum, axis.dim, 0))
    return HalfSpectrum(data=data, axis=axis, original_len=arr.shape[axis.dim])


def irfft_axis(s: HalfSpectrum, target_len: int) -> np.ndarray:
    """
    Inverse real FFT with 1/n normalization back to an H x W x C map.

    Raises:
        ShapeError: ``target_len`` does not retain ``s.retained`` bins
        SpectralResidueError: verify mode found imaginary mass on DC/Nyquist
    """
    if target_len < 1 or half_length(target_len) != s.retained:
        raise ShapeError(
            f"Target length {target_len} keeps {half_length(max(target_len, 0))} bins, "
            f"spectrum has {s.retained}"
        )
    if conf.VERIFY_FFT:
        check_residue(s.data, target_len, 0)
    lines = np.fft.irfft(s.data, n=target_len, axis=0)
    return np.ascontiguousarray(np.moveaxis(lines, 0, s.axis.dim))


def _dft_matrix(n: int, inverse: bool = False) -> np.ndarray:
    if n > conf.NAIVE_DFT_MAX_LEN:
        raise SizeCapError(
            f"Naive DFT is capped at length {conf.NAIVE_DFT_MAX_LEN}, got {n}"
        )
    k = np.arange(n).reshape(-1, 1)
    t = np.arange(n).reshape(1, -1)
    sign = 1.0 if inverse else -1.0
    return np.exp(sign * 2j * np.pi * ((k * t) % n) / n)


def naive_dft_axis(x, axis) -> HalfSpectrum:
    """
    Direct-summation DFT oracle for ``rfft_axis`` (lengths up to 64 only).
    """
    axis = Axis.parse(axis)
    arr = as_feature_map(x)
    n = arr.shape[axis.dim]
    basis = _dft_matrix(n)[:half_length(n)]
    lines = np.moveaxis(arr, axis.dim, 0)
    data = np.tensordot(basis, lines, axes=([1], [0]))
    return HalfSpectrum(data=np.ascontiguousarray(data), axis=axis, original_len=n)


def naive_idft_axis(s: HalfSpectrum, target_len: int) -> np.ndarray:
    """
    Oracle inverse: rebuild the full conjugate-symmetric spectrum and sum.
    """
    n = target_len
    if n < 1 or half_length(n) != s.retained:
        raise ShapeError(f"Target length {n} does not match {s.retained} retained bins")
    full = np.empty((n,) + s.data.shape[1:], dtype=np.complex128)
    full[:s.retained] = s.data
    for k in range(s.retained, n):
        full[k] = np.conj(s.data[n - k])
    if conf.VERIFY_FFT:
        check_residue(s.data, n, 0)
    lines = np.tensordot(_dft_matrix(n, inverse=True), full, axes=([1], [0])) / n
    return np.ascontiguousarray(np.moveaxis(lines.real, 0, s.axis.dim))
