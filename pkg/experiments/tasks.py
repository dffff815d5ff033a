"""
Celery tasks for seed-level fan-out of training runs.
"""
import dataclasses
import logging
from typing import List, Sequence

from celery import shared_task

from analysis.metrics import MetricReport
from spectral.exceptions import ChasmError
from .config import config_from_text
from .training import EvalPoint, RunRecord, run_train

logger = logging.getLogger(__name__)


def record_to_dict(record: RunRecord) -> dict:
    return dataclasses.asdict(record)


def record_from_dict(data: dict) -> RunRecord:
    data = dict(data)
    data['evals'] = [EvalPoint(**e) for e in data.get('evals', [])]
    data['final'] = MetricReport(**data['final'])
    data['baseline'] = MetricReport(**data['baseline'])
    return RunRecord(**data)


@shared_task
def train_seed(config_text: str, seed: int) -> dict:
    """
    Train one seed of a configuration.

    Args:
        config_text: ExperimentConfig.as_text() rendering
        seed: run seed

    Returns:
        Dictionary with success status, message and the serialized RunRecord
    """
    try:
        cfg = config_from_text(config_text)
        record = run_train(cfg, seed)
        if not record.succeeded:
            return {'success': False, 'message': record.message, 'record': record_to_dict(record)}
        logger.info(f"Finished {cfg.config_hash} seed {seed}")
        return {
            'success': True,
            'message': f'Seed {seed}: test PSNR {record.final.psnr_mean:.3f} dB',
            'record': record_to_dict(record),
        }
    except ChasmError as e:
        logger.error(f"Error training seed {seed}: {str(e)}")
        return {'success': False, 'message': f'Training error: {str(e)}', 'record': None}


def run_seeds(cfg, seeds: Sequence[int]) -> List[RunRecord]:
    """Dispatch one task per seed and collect the records in seed order."""
    text = cfg.as_text()
    pending = [train_seed.delay(text, int(seed)) for seed in seeds]
    records = []
    for seed, result in zip(seeds, pending):
        payload = result.get()
        if payload['record'] is None:
            records.append(RunRecord(
                config_hash=cfg.config_hash, seed=int(seed), variant=cfg.variant.value,
                axis_mode=cfg.axis_mode.value, mask=cfg.mask, status='failed',
                message=payload['message'],
            ))
        else:
            records.append(record_from_dict(payload['record']))
    return records
