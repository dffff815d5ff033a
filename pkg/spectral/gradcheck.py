"""
Central finite-difference verification of the reverse-mode gradients.
"""
import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .autodiff import sse_loss, value_and_grad

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
DEFAULT_TOLERANCE = 1e-5


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| / max(|a|, |n|, 1), elementwise."""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return np.abs(analytic - numeric) / scale


@dataclass
class GroupCheck:
    name: str
    size: int
    max_abs_error: float
    max_rel_error: float


@dataclass
class GradCheckReport:
    tolerance: float
    groups: List[GroupCheck] = field(default_factory=list)
    loss: float = 0.0

    @property
    def max_rel_error(self) -> float:
        return max((g.max_rel_error for g in self.groups), default=0.0)

    @property
    def passed(self) -> bool:
        return all(g.max_rel_error < self.tolerance for g in self.groups)

    def failures(self) -> List[GroupCheck]:
        return [g for g in self.groups if g.max_rel_error >= self.tolerance]

    def write_csv(self, path) -> None:
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['Group', 'Scalars', 'Max Abs Error', 'Max Rel Error', 'Passed'])
            for g in self.groups:
                writer.writerow([g.name, g.size, f'{g.max_abs_error:.3e}',
                                 f'{g.max_rel_error:.3e}', g.max_rel_error < self.tolerance])


def grad_check(model, x: np.ndarray, tolerance: float = DEFAULT_TOLERANCE,
               target: Optional[np.ndarray] = None, seed: int = 0,
               step: float = FD_STEP, frechet_mode: str = 'directional') -> GradCheckReport:
    """
    Compare analytic gradients of 0.5 * ||model(x) - target||^2 against
    central differences over every scalar parameter.

    Args:
        model: object with ``named_arrays()``, ``forward(x)`` and the tracing
            protocol used by ``value_and_grad``
        x: model input
        tolerance: maximum allowed relative error per group
        target: regression target; drawn from ``seed`` when omitted

    Returns:
        GradCheckReport with one row per parameter group
    """
    out = model.forward(x)
    if target is None:
        target = np.random.default_rng(seed).standard_normal(out.shape)

    loss, grads = value_and_grad(model, [(x, target)], loss='sse', frechet_mode=frechet_mode)
    report = GradCheckReport(tolerance=tolerance, loss=loss)

    def evaluate() -> float:
        return sse_loss(model.forward(x), target)[0]

    for name, arr in model.named_arrays():
        numeric = np.zeros_like(arr)
        flat = arr.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            plus = evaluate()
            flat[i] = original - step
            minus = evaluate()
            flat[i] = original
            numeric.reshape(-1)[i] = (plus - minus) / (2.0 * step)
        analytic = grads[name]
        rel = relative_error(analytic, numeric)
        group = GroupCheck(
            name=name,
            size=arr.size,
            max_abs_error=float(np.max(np.abs(analytic - numeric))) if arr.size else 0.0,
            max_rel_error=float(np.max(rel)) if arr.size else 0.0,
        )
        report.groups.append(group)
        if group.max_rel_error >= tolerance:
            logger.warning(f"Gradient check failed for {name}: max rel error {group.max_rel_error:.3e}")

    logger.info(f"Gradient check over {len(report.groups)} groups: max rel error {report.max_rel_error:.3e}")
    return report
