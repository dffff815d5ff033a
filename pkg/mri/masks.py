"""
Cartesian undersampling masks over phase-encode lines.

Phase-encode lines run along the width axis of a centered k-space array: line
``j`` is column ``j``, and line ``lines // 2`` holds the k-space centre.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from spectral.exceptions import ShapeError

logger = logging.getLogger(__name__)

# Fully sampled centre as a fraction of the lines: 0.08 at R=4, 0.04 at R=8.
CENTER_FRACTION_NUMERATOR = 0.32


class MaskKind(str, Enum):
    STRUCTURED = 'Structured'
    RANDOM = 'Random'


@dataclass(frozen=True)
class SamplingMask:
    selected: np.ndarray
    kind: MaskKind
    acceleration: float
    center_fraction: float
    seed: int = 0

    @property
    def lines(self) -> int:
        return self.selected.size

    @property
    def popcount(self) -> int:
        return int(np.count_nonzero(self.selected))

    def as_image(self, height: int) -> np.ndarray:
        """Broadcast to a height x lines boolean k-space mask."""
        return np.broadcast_to(self.selected[None, :], (height, self.lines)).copy()


def default_center_fraction(acceleration: float) -> float:
    return CENTER_FRACTION_NUMERATOR / acceleration


def line_budget(lines: int, acceleration: float) -> int:
    """round(lines / R), at least one line and at most every line."""
    return int(min(lines, max(1, round(lines / acceleration))))


def _validate(lines: int, acceleration: float, center_fraction: Optional[float]) -> float:
    if lines < 1:
        raise ShapeError(f"Mask needs at least one line, got {lines}")
    if acceleration < 1:
        raise ShapeError(f"Acceleration must be >= 1, got {acceleration}")
    if center_fraction is None or center_fraction == 0:
        center_fraction = default_center_fraction(acceleration)
    if not 0.0 <= center_fraction <= 1.0:
        raise ShapeError(f"Center fraction must lie in [0, 1], got {center_fraction}")
    return float(center_fraction)


def center_block(lines: int, center_fraction: float, budget: int) -> np.ndarray:
    """Indices of the contiguous centre block, clipped to the line budget."""
    wanted = int(math.ceil(center_fraction * lines - 1e-12))
    n_center = min(wanted, budget)
    if n_center < wanted:
        logger.warning(
            f"Centre block of {wanted} lines (fraction {center_fraction:g} of {lines}) exceeds "
            f"the budget of {budget}; keeping the central {n_center}"
        )
    start = lines // 2 - n_center // 2
    return np.arange(start, start + n_center)


def _equispaced(candidates: np.ndarray, count: int) -> np.ndarray:
    """``count`` distinct, evenly spread picks from ``candidates``."""
    if count <= 0:
        return np.zeros(0, dtype=int)
    positions = ((2 * np.arange(count) + 1) * candidates.size) // (2 * count)
    return candidates[positions]


def make_structured_mask(lines: int, acceleration: float,
                         center_fraction: Optional[float] = None, seed: int = 0) -> SamplingMask:
    """
    Fully sampled centre block plus equispaced outer lines up to the budget.

    Args:
        lines: number of phase-encode lines
        acceleration: R; the budget is round(lines / R)
        center_fraction: fraction of lines in the centre block; None or 0
            selects 0.32 / R
        seed: recorded only, the pattern is deterministic

    Returns:
        SamplingMask of kind Structured
    """
    center_fraction = _validate(lines, acceleration, center_fraction)
    budget = line_budget(lines, acceleration)
    selected = np.zeros(lines, dtype=bool)
    center = center_block(lines, center_fraction, budget)
    selected[center] = True
    outer = _equispaced(np.flatnonzero(~selected), budget - center.size)
    selected[outer] = True
    return SamplingMask(selected, MaskKind.STRUCTURED, float(acceleration), center_fraction, seed)


def make_random_mask(lines: int, acceleration: float, seed: int = 0,
                     keep_center: bool = False,
                     center_fraction: Optional[float] = None) -> SamplingMask:
    """
    Same budget as the structured mask, lines drawn uniformly without
    replacement. ``keep_center`` guarantees the structured centre block and
    draws only the remainder at random.
    """
    center_fraction = _validate(lines, acceleration, center_fraction)
    budget = line_budget(lines, acceleration)
    rng = np.random.default_rng(seed)
    selected = np.zeros(lines, dtype=bool)
    if keep_center:
        selected[center_block(lines, center_fraction, budget)] = True
    else:
        center_fraction = 0.0
    remaining = budget - int(selected.sum())
    candidates = np.flatnonzero(~selected)
    selected[rng.choice(candidates, size=remaining, replace=False)] = True
    return SamplingMask(selected, MaskKind.RANDOM, float(acceleration), center_fraction, seed)


def make_mask(kind, lines: int, acceleration: float, seed: int = 0,
              center_fraction: Optional[float] = None, keep_center: bool = False) -> SamplingMask:
    kind = MaskKind(kind.capitalize() if isinstance(kind, str) else kind)
    if kind is MaskKind.STRUCTURED:
        return make_structured_mask(lines, acceleration, center_fraction, seed)
    return make_random_mask(lines, acceleration, seed, keep_center, center_fraction)
