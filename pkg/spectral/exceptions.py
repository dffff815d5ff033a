"""
Exception hierarchy shared by the spectral, MRI, analysis and experiment apps.
"""


class ChasmError(Exception):
    """Base class for every error raised by this project."""


class ShapeError(ChasmError, ValueError):
    """Dimensions, axis tags or variant/parameter layouts disagree."""


class SizeCapError(ChasmError, ValueError):
    """An O(n^2) oracle was asked to run above its desk-scale cap."""


class SpectralResidueError(ChasmError, ArithmeticError):
    """Inverse rFFT input carried imaginary mass on a bin that must be real."""


class NonFiniteError(ChasmError, ArithmeticError):
    """A tensor, Jacobian or parameter contained NaN or infinity."""


class DivergenceError(ChasmError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, message: str, step: int = -1):
        super().__init__(message)
        self.step = step


class ConfigError(ChasmError, ValueError):
    """Experiment configuration failed validation."""

    def __init__(self, message: str, errors=None):
        super().__init__(message)
        self.errors = errors or {}
