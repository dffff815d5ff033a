"""
Desk-scale training of the toy reconstruction model.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from analysis.metrics import MetricReport, evaluate_cases
from mri.masks import SamplingMask, make_mask
from mri.operators import channels_to_complex, complex_to_channels, forward_single, zero_filled_recon
from mri.phantom import make_phantom
from spectral.autodiff import value_and_grad
from spectral.exceptions import DivergenceError, NonFiniteError
from spectral.optim import OptimizerState, adamw_step
from .model import ToyModel, build_toy_model

logger = logging.getLogger(__name__)

SPLITS = ('train', 'val', 'test')


@dataclass
class Split:
    inputs: List[np.ndarray] = field(default_factory=list)
    targets: List[np.ndarray] = field(default_factory=list)
    zero_filled: List[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass
class EvalPoint:
    step: int
    train_loss: float
    val_psnr: float
    val_ssim: float


@dataclass
class RunRecord:
    config_hash: str
    seed: int
    variant: str
    axis_mode: str
    mask: str
    evals: List[EvalPoint] = field(default_factory=list)
    final: MetricReport = field(default_factory=MetricReport)
    baseline: MetricReport = field(default_factory=MetricReport)
    best_step: int = 0
    parameter_counts: Dict[str, int] = field(default_factory=dict)
    noncore_hash: str = ''
    status: str = 'ok'
    message: str = ''
    wall_time: float = 0.0

    @property
    def succeeded(self) -> bool:
        return self.status == 'ok'


def phantom_seed(data_seed: int, split: str, index: int) -> int:
    """Seed-disjoint phantom streams per split."""
    sequence = np.random.SeedSequence([data_seed, SPLITS.index(split), index])
    return int(sequence.generate_state(1)[0])


def build_dataset(cfg, mask: SamplingMask) -> Dict[str, Split]:
    """Fixed phantom sets, undersampled with one shared mask."""
    sizes = {'train': cfg.train_phantoms, 'val': cfg.val_phantoms, 'test': cfg.test_phantoms}
    data = {}
    for split, count in sizes.items():
        part = Split()
        for i in range(count):
            phantom = make_phantom(cfg.height, cfg.width, phantom_seed(cfg.data_seed, split, i), cfg.n_ellipses)
            zf = zero_filled_recon(forward_single(phantom.image, mask), mask)
            part.inputs.append(complex_to_channels(zf))
            part.targets.append(phantom.magnitude)
            part.zero_filled.append(np.abs(zf))
        data[split] = part
    logger.info(
        f"Dataset {cfg.height}x{cfg.width}: {len(data['train'])} train / {len(data['val'])} val / "
        f"{len(data['test'])} test, mask {mask.kind.value} R={mask.acceleration:g} "
        f"({mask.popcount}/{mask.lines} lines)"
    )
    return data


def reconstruct(model: ToyModel, x: np.ndarray) -> np.ndarray:
    return np.abs(channels_to_complex(model.forward(x)))


def evaluate(model: ToyModel, split: Split) -> MetricReport:
    return evaluate_cases(split.targets, [reconstruct(model, x) for x in split.inputs])


def run_mask(cfg, seed: int) -> SamplingMask:
    return make_mask(cfg.mask, cfg.width, cfg.accel, seed=seed,
                     center_fraction=cfg.center_fraction, keep_center=cfg.random_keep_center)


def run_train(cfg, seed: int, dataset: Optional[Dict[str, Split]] = None) -> RunRecord:
    """
    Train one (config, seed) pair with AdamW and evaluate the
    validation-selected checkpoint on the held-out test split.

    Args:
        cfg: ExperimentConfig
        seed: controls model init, batch order and (random masks) the mask
        dataset: prebuilt splits, built from ``cfg`` when omitted

    Returns:
        RunRecord; a non-finite loss yields status 'diverged' with the step
    """
    started = time.perf_counter()
    model = build_toy_model(cfg, seed)
    if dataset is None:
        dataset = build_dataset(cfg, run_mask(cfg, seed))
    record = RunRecord(
        config_hash=cfg.config_hash,
        seed=seed,
        variant=cfg.variant.value,
        axis_mode=cfg.axis_mode.value,
        mask=cfg.mask,
        parameter_counts=model.parameter_counts(),
        noncore_hash=model.noncore_hash(),
    )
    record.baseline = evaluate_cases(dataset['test'].targets, dataset['test'].zero_filled)

    state = OptimizerState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps,
                           weight_decay=cfg.weight_decay)
    rng = np.random.default_rng([seed, 1])
    train = dataset['train']

    initial = evaluate(model, dataset['val'])
    record.evals.append(EvalPoint(0, float('nan'), initial.psnr_mean, initial.ssim_mean))
    best_psnr = initial.psnr_mean
    best = model.snapshot()

    try:
        loss = float('nan')
        for step in range(1, cfg.steps + 1):
            picks = rng.choice(len(train), size=cfg.batch_size, replace=cfg.batch_size > len(train))
            batch = [(train.inputs[i], train.targets[i]) for i in picks]
            loss, grads = value_and_grad(model, batch, cfg.loss, cfg.frechet_mode)
            if not np.isfinite(loss):
                raise DivergenceError(f"Non-finite training loss at step {step}", step=step)
            adamw_step(model.named_arrays(), grads, state)

            if step % cfg.eval_every == 0 or step == cfg.steps:
                report = evaluate(model, dataset['val'])
                record.evals.append(EvalPoint(step, loss, report.psnr_mean, report.ssim_mean))
                logger.info(
                    f"seed={seed} step={step} loss={loss:.5f} "
                    f"val PSNR={report.psnr_mean:.3f} SSIM={report.ssim_mean:.4f}"
                )
                if report.psnr_mean > best_psnr:
                    best_psnr = report.psnr_mean
                    best = model.snapshot()
                    record.best_step = step
    except (DivergenceError, NonFiniteError) as e:
        logger.error(f"Run {record.config_hash}/seed {seed} diverged at step {getattr(e, 'step', step)}")
        record.status = 'diverged'
        record.message = str(e)
        record.wall_time = time.perf_counter() - started
        return record

    model.restore(best)
    record.final = evaluate(model, dataset['test'])
    record.wall_time = time.perf_counter() - started
    logger.info(
        f"seed={seed} {cfg.variant.value}/{cfg.axis_mode.value}: test PSNR {record.final.psnr_mean:.3f} "
        f"(zero-filled {record.baseline.psnr_mean:.3f}) best step {record.best_step}"
    )
    return record
