"""
Controlled-replacement ablations and the structured-vs-random mask
falsification. Only the spectral core differs between arms: data, mask,
seeds, schedule and every non-core initial value are shared.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from spectral.exceptions import ChasmError
from spectral.mixer import AxisMode, Variant
from .training import RunRecord

logger = logging.getLogger(__name__)

DEFAULT_ABLATION_VARIANTS = (Variant.CHASM, Variant.UNTIED_BASIS, Variant.IDENTITY_BASIS)
DEFAULT_AXIS_MODES = (AxisMode.CH_THEN_CW, AxisMode.CW_THEN_CH, AxisMode.CH_ONLY, AxisMode.CW_ONLY)


@dataclass
class ArmSummary:
    variant: Variant
    axis_mode: AxisMode
    config_hash: str
    records: List[RunRecord] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f'{self.variant.value}/{self.axis_mode.value}'

    def _values(self, attr: str) -> List[float]:
        return [getattr(r.final, attr) for r in self.records if r.succeeded]

    @property
    def psnr_mean(self) -> float:
        values = self._values('psnr_mean')
        return float(np.mean(values)) if values else float('nan')

    @property
    def psnr_std(self) -> float:
        values = self._values('psnr_mean')
        return float(np.std(values)) if values else float('nan')

    @property
    def ssim_mean(self) -> float:
        values = self._values('ssim_mean')
        return float(np.mean(values)) if values else float('nan')

    @property
    def ssim_std(self) -> float:
        values = self._values('ssim_mean')
        return float(np.std(values)) if values else float('nan')

    @property
    def core_params(self) -> int:
        return self.records[0].parameter_counts.get('core', 0) if self.records else 0

    @property
    def succeeded(self) -> bool:
        return bool(self.records) and all(r.succeeded for r in self.records)


@dataclass
class AblationTable:
    rows: List[ArmSummary] = field(default_factory=list)
    controlled: bool = True

    def row(self, variant, axis_mode=AxisMode.CH_THEN_CW) -> ArmSummary:
        for r in self.rows:
            if r.variant is Variant(variant) and r.axis_mode is AxisMode(axis_mode):
                return r
        raise KeyError(f'No ablation arm {variant}/{axis_mode}')

    @property
    def succeeded(self) -> bool:
        return self.controlled and all(r.succeeded for r in self.rows)


@dataclass
class FalsificationReport:
    structured: AblationTable
    random: AblationTable
    delta_structured: float
    delta_random: float
    best_structured: str
    best_random: str

    @property
    def drop(self) -> float:
        return drop_ratio(self.delta_structured, self.delta_random)


def drop_ratio(delta_structured: float, delta_random: float) -> float:
    """1 - delta_random / delta_structured; NaN when delta_structured is zero."""
    if delta_structured == 0:
        return float('nan')
    return 1.0 - delta_random / delta_structured


def variant_arms(cfg, variants: Optional[Sequence] = None) -> List[Tuple[Variant, AxisMode]]:
    variants = variants or DEFAULT_ABLATION_VARIANTS
    return [(Variant(v), cfg.axis_mode) for v in variants]


def axis_arms(cfg, axis_modes: Optional[Sequence] = None) -> List[Tuple[Variant, AxisMode]]:
    axis_modes = axis_modes or DEFAULT_AXIS_MODES
    return [(cfg.variant, AxisMode(m)) for m in axis_modes]


def run_ablation(cfg, arms: Sequence[Tuple[Variant, AxisMode]],
                 seeds: Optional[Sequence[int]] = None) -> AblationTable:
    """
    Train every arm on every seed under the shared regime.

    Args:
        cfg: base ExperimentConfig; each arm replaces only variant/axis_mode
        arms: (variant, axis_mode) pairs
        seeds: defaults to ``cfg.seeds``

    Returns:
        AblationTable with mean/std over seeds per arm
    """
    from .tasks import run_seeds

    seeds = list(seeds or cfg.seeds)
    table = AblationTable()
    noncore: Dict[int, str] = {}
    for variant, axis_mode in arms:
        arm_cfg = cfg.replace(variant=variant, axis_mode=axis_mode)
        summary = ArmSummary(Variant(variant), AxisMode(axis_mode), arm_cfg.config_hash)
        summary.records = run_seeds(arm_cfg, seeds)
        for record in summary.records:
            expected = noncore.setdefault(record.seed, record.noncore_hash)
            if record.noncore_hash != expected:
                logger.error(f"Non-core initialization differs for {summary.label} seed {record.seed}")
                table.controlled = False
        logger.info(
            f"Ablation arm {summary.label}: PSNR {summary.psnr_mean:.3f} +/- {summary.psnr_std:.3f} "
            f"SSIM {summary.ssim_mean:.4f} over {len(seeds)} seeds"
        )
        table.rows.append(summary)
    return table


def _delta(table: AblationTable) -> Tuple[float, str]:
    chasm = [r for r in table.rows if r.variant is Variant.CHASM]
    others = [r for r in table.rows if r.variant is not Variant.CHASM]
    if not chasm or not others:
        raise ChasmError("Mask falsification needs the Chasm arm and at least one other variant")
    best = max(others, key=lambda r: r.psnr_mean)
    return chasm[0].psnr_mean - best.psnr_mean, best.label


def run_mask_falsification(cfg, variants: Optional[Sequence] = None,
                           seeds: Optional[Sequence[int]] = None) -> FalsificationReport:
    """
    Delta = PSNR(Chasm) - PSNR(best non-Chasm variant), under structured
    masks and again under random masks with the same budget and seeds.
    """
    variants = list(variants or DEFAULT_ABLATION_VARIANTS)
    if Variant.CHASM not in [Variant(v) for v in variants]:
        variants.insert(0, Variant.CHASM)
    tables = {}
    for mask in ('structured', 'random'):
        mask_cfg = cfg.replace(mask=mask)
        tables[mask] = run_ablation(mask_cfg, variant_arms(mask_cfg, variants), seeds)
    delta_s, best_s = _delta(tables['structured'])
    delta_r, best_r = _delta(tables['random'])
    report = FalsificationReport(tables['structured'], tables['random'], delta_s, delta_r, best_s, best_r)
    logger.info(
        f"Mask falsification: delta structured {delta_s:+.3f} dB (vs {best_s}), "
        f"delta random {delta_r:+.3f} dB (vs {best_r}), drop {100 * report.drop:.1f}%"
    )
    return report
