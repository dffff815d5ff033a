"""
Library-level switches for the spectral app, read from the environment.
"""
from decouple import config

VERIFY_FFT = config('CHASM_VERIFY_FFT', default=False, cast=bool)
IMAG_RESIDUE_TOL = config('CHASM_IMAG_RESIDUE_TOL', default=1e-9, cast=float)

# Direct-summation DFT is O(n^2); keep it at desk scale.
NAIVE_DFT_MAX_LEN = 64


def set_verify_fft(enabled: bool) -> None:
    """Toggle the inverse-rFFT residue assertion (CLI flag ``--verify-fft``)."""
    global VERIFY_FFT
    VERIFY_FFT = bool(enabled)
