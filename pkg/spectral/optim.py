"""
AdamW with decoupled weight decay.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .exceptions import NonFiniteError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0 or self.weight_decay < 0:
            raise ValueError("AdamW needs lr > 0, eps > 0 and weight_decay >= 0")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError(f"Betas must lie in [0, 1), got ({self.beta1}, {self.beta2})")


def adamw_step(params: List[Tuple[str, np.ndarray]], grads: Dict[str, np.ndarray],
               state: OptimizerState) -> Tuple[List[Tuple[str, np.ndarray]], OptimizerState]:
    """
    One AdamW update, applied in place to every named parameter array.

        p <- p - lr * wd * p
        m <- b1 m + (1 - b1) g ;  v <- b2 v + (1 - b2) g^2
        p <- p - lr * m_hat / (sqrt(v_hat) + eps)

    Raises:
        ShapeError: a gradient is missing or shaped differently from its parameter
        NonFiniteError: a gradient contains NaN/inf
    """
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1 ** t
    bias2 = 1.0 - state.beta2 ** t
    for name, p in params:
        if name not in grads:
            raise ShapeError(f"No gradient for parameter '{name}'")
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != p.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {g.shape}, parameter {p.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"Non-finite gradient for '{name}' at step {t}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        if state.weight_decay:
            p -= state.lr * state.weight_decay * p
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)
    return params, state
