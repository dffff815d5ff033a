"""
Toy reconstruction model: 2 -> C lift, N mixer blocks, C -> 2 head.
"""
import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from spectral.autodiff import (
    ParamGradients, Tape, finalize_block, resolve_block, traced_linear, traced_mixer_block,
)
from spectral.exceptions import ShapeError
from spectral.fft import as_feature_map
from spectral.mixer import (
    AxisMode, MixerParams, Variant, core_parameter_count, mixer_forward, wrapper_parameter_count,
)

logger = logging.getLogger(__name__)


@dataclass
class ToyModel:
    lift_weight: np.ndarray
    lift_bias: np.ndarray
    blocks: List[MixerParams]
    head_weight: np.ndarray
    head_bias: np.ndarray
    seed: int = 0

    def __post_init__(self):
        if not self.blocks:
            raise ShapeError("The toy model needs at least one mixer block")
        c = self.blocks[0].channels
        if self.lift_weight.shape != (c, 2) or self.head_weight.shape != (2, c):
            raise ShapeError(f"Lift must be {c} x 2 and head 2 x {c}")
        if any(b.channels != c for b in self.blocks):
            raise ShapeError("Every block must share the channel count")

    @property
    def channels(self) -> int:
        return self.blocks[0].channels

    def named_arrays(self) -> List[Tuple[str, np.ndarray]]:
        """Canonical order: lift, blocks in order, head."""
        arrays = [('lift.weight', self.lift_weight), ('lift.bias', self.lift_bias)]
        for i, block in enumerate(self.blocks):
            arrays.extend((f'block{i}.{name}', arr) for name, arr in block.named_arrays())
        arrays.extend([('head.weight', self.head_weight), ('head.bias', self.head_bias)])
        return arrays

    def forward(self, x) -> np.ndarray:
        h = as_feature_map(x) @ self.lift_weight.T + self.lift_bias
        for block in self.blocks:
            h = mixer_forward(h, block)
        return h @ self.head_weight.T + self.head_bias

    def resolve(self, height: int, width: int):
        return [resolve_block(block, height, width) for block in self.blocks]

    def trace(self, x, tape: Tape, context) -> np.ndarray:
        h = traced_linear(as_feature_map(x), self.lift_weight, self.lift_bias, tape, 'lift')
        for i, (block, resolved) in enumerate(zip(self.blocks, context)):
            h = traced_mixer_block(h, block, resolved, tape, f'block{i}.')
        return traced_linear(h, self.head_weight, self.head_bias, tape, 'head')

    def finalize(self, grads: ParamGradients, context, frechet_mode: str = 'directional') -> None:
        for i, (block, resolved) in enumerate(zip(self.blocks, context)):
            finalize_block(block, resolved, grads, f'block{i}.', frechet_mode)
        for name, arr in self.named_arrays():
            if name not in grads:
                grads[name] = np.zeros_like(arr)

    def parameter_counts(self) -> Dict[str, int]:
        core = sum(core_parameter_count(b) for b in self.blocks)
        wrapper = sum(wrapper_parameter_count(b) for b in self.blocks)
        lift_head = sum(a.size for a in (self.lift_weight, self.lift_bias, self.head_weight, self.head_bias))
        return {'core': core, 'wrapper': wrapper, 'lift_head': lift_head, 'total': core + wrapper + lift_head}

    def noncore_hash(self) -> str:
        """SHA-256 over every parameter outside the spectral cores."""
        digest = hashlib.sha256()
        for arr in (self.lift_weight, self.lift_bias, self.head_weight, self.head_bias):
            digest.update(np.ascontiguousarray(arr).tobytes())
        for block in self.blocks:
            for _, arr in block.wrapper_arrays():
                digest.update(np.ascontiguousarray(arr).tobytes())
        return digest.hexdigest()

    def snapshot(self) -> List[np.ndarray]:
        return [arr.copy() for _, arr in self.named_arrays()]

    def restore(self, snapshot: List[np.ndarray]) -> None:
        for (_, arr), saved in zip(self.named_arrays(), snapshot):
            arr[...] = saved


def expected_parameter_counts(cfg) -> Dict[str, int]:
    """Group formulas: C(C-1) + (B_H + B_W) C core per block for shared-basis variants."""
    c, n = cfg.channels, cfg.blocks
    p = c * (c - 1) // 2
    if cfg.variant is Variant.UNTIED_BASIS:
        k_h, k_w = cfg.height // 2 + 1, cfg.width // 2 + 1
        core = (k_h + k_w) * (p + c)
    else:
        basis = 0 if cfg.variant is Variant.IDENTITY_BASIS else 2 * p
        tables = (cfg.bins_h + cfg.bins_w) * c
        if cfg.variant is Variant.COMPLEX_GAIN:
            tables *= 2
        core = basis + tables
    wrapper = 9 * c + c + c * c + c
    lift_head = 2 * c + c + 2 * c + 2
    return {
        'core': n * core,
        'wrapper': n * wrapper,
        'lift_head': lift_head,
        'total': n * (core + wrapper) + lift_head,
    }


def build_toy_model(cfg, seed: int) -> ToyModel:
    """
    Identity at initialization: the lift embeds (re, im) into channels 0 and
    1, every block is the identity and the head reads channels 0 and 1 back.
    Lift rows 2..C-1 are drawn from ``seed`` so the extra channels carry signal.
    """
    c = cfg.channels
    rng = np.random.default_rng(seed)
    lift_weight = np.zeros((c, 2))
    lift_weight[0, 0] = 1.0
    lift_weight[1, 1] = 1.0
    lift_weight[2:] = cfg.lift_init_scale * rng.standard_normal((c - 2, 2))
    head_weight = np.zeros((2, c))
    head_weight[0, 0] = 1.0
    head_weight[1, 1] = 1.0
    blocks = [
        MixerParams.initial(c, cfg.bins_h, cfg.bins_w, cfg.variant, cfg.axis_mode,
                            height=cfg.height, width=cfg.width)
        for _ in range(cfg.blocks)
    ]
    model = ToyModel(lift_weight, np.zeros(c), blocks, head_weight, np.zeros(2), seed)
    logger.info(
        f"Built toy model C={c} N={cfg.blocks} variant={cfg.variant.value} "
        f"axis_mode={cfg.axis_mode.value}: {model.parameter_counts()['total']} parameters"
    )
    return model


def random_toy_model(channels: int, blocks: int, height: int, width: int, rng: np.random.Generator,
                     variant=Variant.CHASM, axis_mode=None, bins: int = 3,
                     scale: float = 0.5) -> ToyModel:
    """Toy model at a random point, for gradient checks."""
    axis_mode = axis_mode or AxisMode.CH_THEN_CW
    mixers = [
        MixerParams.random(channels, bins, bins, rng, variant, axis_mode, height, width, scale)
        for _ in range(blocks)
    ]
    return ToyModel(
        lift_weight=rng.standard_normal((channels, 2)),
        lift_bias=scale * rng.standard_normal(channels),
        blocks=mixers,
        head_weight=rng.standard_normal((2, channels)) / np.sqrt(channels),
        head_bias=scale * rng.standard_normal(2),
    )
