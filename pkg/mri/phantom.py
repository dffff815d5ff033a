"""
Synthetic ellipse phantoms and Gaussian coil sensitivity maps.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from spectral.exceptions import ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Ellipse:
    """Ellipse on the [-1, 1]^2 image square; ``angle`` in radians."""
    cx: float
    cy: float
    a: float
    b: float
    angle: float
    intensity: float


@dataclass
class Phantom:
    image: np.ndarray
    seed: int
    ellipses: List[Ellipse] = field(default_factory=list)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.image)

    @property
    def shape(self):
        return self.image.shape


@dataclass
class CoilSet:
    """Complex sensitivities, shape (n_coils, H, W), sum_c |S_c|^2 = 1."""
    maps: np.ndarray

    @property
    def n_coils(self) -> int:
        return self.maps.shape[0]


def _grid(height: int, width: int):
    y = np.linspace(-1.0, 1.0, height)
    x = np.linspace(-1.0, 1.0, width)
    return np.meshgrid(y, x, indexing='ij')


def random_ellipses(rng: np.random.Generator, n_ellipses: int) -> List[Ellipse]:
    ellipses = []
    for _ in range(n_ellipses):
        ellipses.append(Ellipse(
            cx=float(rng.uniform(-0.5, 0.5)),
            cy=float(rng.uniform(-0.5, 0.5)),
            a=float(rng.uniform(0.1, 0.6)),
            b=float(rng.uniform(0.1, 0.6)),
            angle=float(rng.uniform(0.0, np.pi)),
            intensity=float(rng.uniform(0.1, 0.7)),
        ))
    return ellipses


def make_phantom(height: int, width: int, seed: int, n_ellipses: int = 8) -> Phantom:
    """
    Clipped sum of random ellipse indicators, a smooth intensity modulation
    and a mild linear phase ramp. Magnitude lies in [0, 1].
    """
    if height < 1 or width < 1:
        raise ShapeError(f"Phantom size must be positive, got {height} x {width}")
    if n_ellipses < 0:
        raise ShapeError(f"n_ellipses must be >= 0, got {n_ellipses}")
    rng = np.random.default_rng(seed)
    yy, xx = _grid(height, width)
    ellipses = random_ellipses(rng, n_ellipses)

    density = np.zeros((height, width))
    for e in ellipses:
        cosp, sinp = np.cos(e.angle), np.sin(e.angle)
        dx, dy = xx - e.cx, yy - e.cy
        inside = ((dx * cosp + dy * sinp) / e.a) ** 2 + ((dy * cosp - dx * sinp) / e.b) ** 2 <= 1.0
        density += e.intensity * inside

    freq = rng.uniform(0.5, 1.5, size=2)
    shift = rng.uniform(0.0, 2 * np.pi, size=2)
    modulation = 0.85 + 0.15 * np.cos(np.pi * freq[0] * xx + shift[0]) * np.cos(np.pi * freq[1] * yy + shift[1])
    magnitude = np.clip(density * modulation, 0.0, 1.0)

    ramp = rng.uniform(-0.5, 0.5, size=2)
    phase = np.pi * (ramp[0] * xx + ramp[1] * yy) / 2
    return Phantom(image=magnitude * np.exp(1j * phase), seed=seed, ellipses=ellipses)


def make_coils(height: int, width: int, n_coils: int, coil_width: float = 2.0) -> CoilSet:
    """
    Gaussian sensitivities centred on a ring around the image with a
    coil-dependent phase, normalized so sum_c |S_c|^2 = 1 at every pixel.
    ``n_coils = 1`` gives the all-ones map.
    """
    if n_coils < 1:
        raise ShapeError(f"n_coils must be >= 1, got {n_coils}")
    if n_coils == 1:
        return CoilSet(np.ones((1, height, width), dtype=np.complex128))
    yy, xx = _grid(height, width)
    maps = []
    for c in range(n_coils):
        angle = 2 * np.pi * c / n_coils
        x0, y0 = np.cos(angle), np.sin(angle)
        envelope = np.exp(-((xx - x0) ** 2 + (yy - y0) ** 2) / coil_width)
        maps.append(envelope * np.exp(1j * (angle + 0.25 * np.pi * (xx * x0 + yy * y0))))
    maps = np.stack(maps)
    norm = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return CoilSet(maps / norm)
