"""
Single- and multi-coil Cartesian measurement operators.

F is the centered unitary 2D DFT (1/sqrt(HW) both ways), so F^H F = I and
every normal operator below is Hermitian positive semidefinite.
"""
import logging

import numpy as np

from spectral.exceptions import ShapeError
from .masks import SamplingMask
from .phantom import CoilSet

logger = logging.getLogger(__name__)


def fft2c(x: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(x, axes=(-2, -1)), norm='ortho'), axes=(-2, -1))


def ifft2c(k: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(k, axes=(-2, -1)), norm='ortho'), axes=(-2, -1))


def _line_mask(mask: SamplingMask, shape) -> np.ndarray:
    if shape[-1] != mask.lines:
        raise ShapeError(f"Mask has {mask.lines} lines, image width is {shape[-1]}")
    return mask.selected.astype(np.float64)


def _check_coils(x: np.ndarray, coils: CoilSet) -> None:
    if coils.maps.shape[1:] != x.shape[-2:]:
        raise ShapeError(f"Coil maps are {coils.maps.shape[1:]}, image is {x.shape[-2:]}")


def forward_single(x: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """A x = P F x."""
    return fft2c(x) * _line_mask(mask, x.shape)


def adjoint_single(y: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """A^H y = F^H P y."""
    return ifft2c(y * _line_mask(mask, y.shape))


def normal_single(x: np.ndarray, mask: SamplingMask) -> np.ndarray:
    return adjoint_single(forward_single(x, mask), mask)


def forward_multi(x: np.ndarray, mask: SamplingMask, coils: CoilSet) -> np.ndarray:
    """Per-coil masked k-space, shape (n_coils, H, W)."""
    _check_coils(x, coils)
    return fft2c(coils.maps * x[None]) * _line_mask(mask, x.shape)


def adjoint_multi(y: np.ndarray, mask: SamplingMask, coils: CoilSet) -> np.ndarray:
    """sum_c conj(S_c) F^H P y_c."""
    _check_coils(y, coils)
    return np.sum(np.conj(coils.maps) * ifft2c(y * _line_mask(mask, y.shape)), axis=0)


def normal_multi(x: np.ndarray, mask: SamplingMask, coils: CoilSet) -> np.ndarray:
    return adjoint_multi(forward_multi(x, mask, coils), mask, coils)


def zero_filled_recon(kspace: np.ndarray, mask: SamplingMask) -> np.ndarray:
    """Inverse DFT of masked k-space with the missing lines left at zero."""
    return ifft2c(kspace * _line_mask(mask, kspace.shape))


def complex_to_channels(image: np.ndarray) -> np.ndarray:
    """H x W complex image -> H x W x 2 real map (real, imaginary)."""
    return np.stack([image.real, image.imag], axis=-1)


def channels_to_complex(x: np.ndarray) -> np.ndarray:
    return x[..., 0] + 1j * x[..., 1]
