"""
Image quality metrics on magnitude images.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import cv2
import numpy as np

from spectral.exceptions import ShapeError

logger = logging.getLogger(__name__)

PSNR_IDENTICAL = float('inf')
SSIM_WINDOW = 7
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(ref, test):
    ref = np.abs(np.asarray(ref))
    test = np.abs(np.asarray(test))
    if ref.shape != test.shape or ref.ndim != 2:
        raise ShapeError(f"Metrics need two equal 2-D images, got {ref.shape} and {test.shape}")
    return np.ascontiguousarray(ref, dtype=np.float64), np.ascontiguousarray(test, dtype=np.float64)


def data_range_of(ref: np.ndarray) -> float:
    """Per-case reference maximum; 1.0 for an all-zero reference."""
    peak = float(np.max(ref))
    return peak if peak > 0 else 1.0


def psnr(ref, test, data_range: Optional[float] = None) -> float:
    """10 log10(range^2 / MSE); +inf for identical images."""
    ref, test = _pair(ref, test)
    if data_range is None:
        data_range = data_range_of(ref)
    mse = float(np.mean((ref - test) ** 2))
    if mse == 0.0:
        return PSNR_IDENTICAL
    return 10.0 * np.log10(data_range ** 2 / mse)


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    g = cv2.getGaussianKernel(size, sigma, cv2.CV_64F)
    return g @ g.T


def ssim(ref, test, data_range: Optional[float] = None) -> float:
    """
    Mean SSIM over every fully contained 7x7 Gaussian window (sigma 1.5).
    """
    ref, test = _pair(ref, test)
    if min(ref.shape) < SSIM_WINDOW:
        raise ShapeError(f"SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {ref.shape}")
    if data_range is None:
        data_range = data_range_of(ref)
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    window = gaussian_window()

    def blur(img):
        return cv2.filter2D(img, cv2.CV_64F, window, borderType=cv2.BORDER_REFLECT)

    mu_x = blur(ref)
    mu_y = blur(test)
    var_x = blur(ref * ref) - mu_x * mu_x
    var_y = blur(test * test) - mu_y * mu_y
    cov = blur(ref * test) - mu_x * mu_y
    ssim_map = ((2 * mu_x * mu_y + c1) * (2 * cov + c2)) / (
        (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2))
    pad = SSIM_WINDOW // 2
    return float(np.mean(ssim_map[pad:-pad, pad:-pad]))


@dataclass
class MetricReport:
    psnr: List[float] = field(default_factory=list)
    ssim: List[float] = field(default_factory=list)
    data_ranges: List[float] = field(default_factory=list)

    def add(self, ref, test) -> None:
        ref_mag = np.abs(ref)
        data_range = data_range_of(ref_mag)
        self.data_ranges.append(data_range)
        self.psnr.append(psnr(ref_mag, test, data_range))
        self.ssim.append(ssim(ref_mag, test, data_range))

    @property
    def cases(self) -> int:
        return len(self.psnr)

    @property
    def psnr_mean(self) -> float:
        return float(np.mean(self.psnr)) if self.psnr else 0.0

    @property
    def psnr_std(self) -> float:
        return float(np.std(self.psnr)) if self.psnr else 0.0

    @property
    def ssim_mean(self) -> float:
        return float(np.mean(self.ssim)) if self.ssim else 0.0

    @property
    def ssim_std(self) -> float:
        return float(np.std(self.ssim)) if self.ssim else 0.0


def evaluate_cases(refs, tests) -> MetricReport:
    report = MetricReport()
    for ref, test in zip(refs, tests):
        report.add(ref, test)
    return report
