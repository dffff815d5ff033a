"""
CSV and plain-text reporting for runs, ablations, the mask falsification,
DOF checks and the verify suite. Every run-level row carries the config hash.
"""
import csv
import logging
import math
from pathlib import Path
from typing import Iterable, List, Sequence

from analysis.dof import DofReport
from .ablation import AblationTable, FalsificationReport
from .training import RunRecord
from .verify import VerifyReport

logger = logging.getLogger(__name__)

RUN_HEADER = [
    'Config Hash', 'Seed', 'Variant', 'Axis Mode', 'Mask', 'Status', 'Best Step',
    'Test PSNR', 'Test PSNR Std', 'Test SSIM', 'Test SSIM Std',
    'Zero-Filled PSNR', 'Zero-Filled SSIM',
    'Core Params', 'Wrapper Params', 'Lift/Head Params', 'Total Params', 'Non-Core Hash',
]


def _fmt(value: float, digits: int = 4) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return 'nan'
    if isinstance(value, float) and math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return f'{value:.{digits}f}'


def _prepare(path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


class ReportGenerator:
    """
    Writers for every CSV the harness produces.
    """

    @staticmethod
    def write_run_records(path, records: Sequence[RunRecord]) -> Path:
        """
        Write one row per (config, seed) run.

        Args:
            path: output CSV
            records: RunRecords in seed order

        Returns:
            The written path
        """
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(RUN_HEADER)
            for r in records:
                counts = r.parameter_counts
                writer.writerow([
                    r.config_hash, r.seed, r.variant, r.axis_mode, r.mask, r.status, r.best_step,
                    _fmt(r.final.psnr_mean), _fmt(r.final.psnr_std),
                    _fmt(r.final.ssim_mean, 6), _fmt(r.final.ssim_std, 6),
                    _fmt(r.baseline.psnr_mean), _fmt(r.baseline.ssim_mean, 6),
                    counts.get('core', 0), counts.get('wrapper', 0),
                    counts.get('lift_head', 0), counts.get('total', 0), r.noncore_hash,
                ])
        logger.info(f"Wrote {len(records)} run records to {path}")
        return path

    @staticmethod
    def write_trajectories(path, records: Sequence[RunRecord]) -> Path:
        """Per-evaluation metrics for every run."""
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['Config Hash', 'Seed', 'Step', 'Train Loss', 'Val PSNR', 'Val SSIM'])
            for r in records:
                for point in r.evals:
                    writer.writerow([r.config_hash, r.seed, point.step, _fmt(point.train_loss, 6),
                                     _fmt(point.val_psnr), _fmt(point.val_ssim, 6)])
        return path

    @staticmethod
    def write_timings(path, records: Sequence[RunRecord]) -> Path:
        # Wall time lives apart from the run records so those stay reproducible.
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['Config Hash', 'Seed', 'Wall Time (s)'])
            for r in records:
                writer.writerow([r.config_hash, r.seed, f'{r.wall_time:.2f}'])
        return path

    @staticmethod
    def write_ablation(path, table: AblationTable) -> Path:
        """
        Mean and std over seeds per arm.

        Args:
            path: output CSV
            table: AblationTable from run_ablation

        Returns:
            The written path
        """
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow([
                'Config Hash', 'Variant', 'Axis Mode', 'Seeds', 'PSNR Mean', 'PSNR Std',
                'SSIM Mean', 'SSIM Std', 'Core Params', 'Succeeded', 'Controlled',
            ])
            for row in table.rows:
                writer.writerow([
                    row.config_hash, row.variant.value, row.axis_mode.value, len(row.records),
                    _fmt(row.psnr_mean), _fmt(row.psnr_std), _fmt(row.ssim_mean, 6),
                    _fmt(row.ssim_std, 6), row.core_params, row.succeeded, table.controlled,
                ])
        logger.info(f"Wrote ablation table with {len(table.rows)} arms to {path}")
        return path

    @staticmethod
    def write_falsification(path, report: FalsificationReport) -> Path:
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow([
                'Mask', 'Best Baseline', 'Chasm PSNR', 'Baseline PSNR', 'Delta PSNR', 'Drop (%)',
            ])
            for mask, table, delta, best in (
                ('structured', report.structured, report.delta_structured, report.best_structured),
                ('random', report.random, report.delta_random, report.best_random),
            ):
                chasm = next(r for r in table.rows if r.variant.value == 'Chasm')
                baseline = next(r for r in table.rows if r.label == best)
                writer.writerow([mask, best, _fmt(chasm.psnr_mean), _fmt(baseline.psnr_mean),
                                 _fmt(delta), _fmt(100 * report.drop, 2)])
        return path

    @staticmethod
    def write_dof(path, reports: Iterable[DofReport]) -> Path:
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['Channels', 'Bins', 'Expected Rank', 'Measured Rank', 'Generic',
                             'Smallest Kept SV', 'Largest Dropped SV', 'Matches'])
            for r in reports:
                kept, dropped = _sv_gap(r)
                writer.writerow([r.channels, r.bins, r.expected_rank, r.measured_rank, r.generic,
                                 f'{kept:.3e}', f'{dropped:.3e}', r.matches])
        return path

    @staticmethod
    def write_verify(path, report: VerifyReport) -> Path:
        path = _prepare(path)
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(['Check', 'Passed', 'Value', 'Threshold', 'Detail'])
            for r in report.results:
                writer.writerow([r.name, r.passed, f'{r.value:.3e}', f'{r.threshold:.1e}', r.detail])
        return path


def _sv_gap(report: DofReport):
    sv = report.singular_values
    rank = report.measured_rank
    kept = float(sv[rank - 1]) if rank > 0 else 0.0
    dropped = float(sv[rank]) if rank < len(sv) else 0.0
    return kept, dropped


def format_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    """Left-aligned fixed-width text table."""
    cells = [[str(c) for c in header]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    lines = ['  '.join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
    lines.insert(1, '  '.join('-' * w for w in widths))
    return '\n'.join(lines)


def run_rows(records: Sequence[RunRecord]) -> List[List[str]]:
    return [[r.seed, r.status, r.best_step, _fmt(r.final.psnr_mean), _fmt(r.final.ssim_mean),
             _fmt(r.baseline.psnr_mean), _fmt(r.baseline.ssim_mean)] for r in records]


RUN_TABLE_HEADER = ['Seed', 'Status', 'Best Step', 'Test PSNR', 'Test SSIM', 'ZF PSNR', 'ZF SSIM']


def ablation_rows(table: AblationTable) -> List[List[str]]:
    return [[row.label, f'{_fmt(row.psnr_mean, 3)} +/- {_fmt(row.psnr_std, 3)}',
             f'{_fmt(row.ssim_mean)} +/- {_fmt(row.ssim_std)}', row.core_params] for row in table.rows]


ABLATION_TABLE_HEADER = ['Arm', 'PSNR', 'SSIM', 'Core Params']
