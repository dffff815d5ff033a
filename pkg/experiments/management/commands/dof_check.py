"""
Management command measuring the Jacobian rank of the operator-family map.
"""
import numpy as np
from django.core.management.base import CommandError

from analysis.dof import dof_rank_check, random_point
from experiments.management.base import ExperimentCommand
from experiments.reports import ReportGenerator, format_table


class Command(ExperimentCommand):
    help = 'Compare the numerical rank of the operator-family map with C(C-1)/2 + KC'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--channels', type=int, default=3)
        parser.add_argument('--bins', type=int, default=4)
        parser.add_argument('--trials', type=int, default=20)
        parser.add_argument('--degenerate', action='store_true',
                            help='Force one coinciding gain-signature pair; expects rank - 1')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        channels, bins = options['channels'], options['bins']
        if channels < 2 or bins < 1:
            raise CommandError('Need --channels >= 2 and --bins >= 1', returncode=2)

        rng = np.random.default_rng(cfg.seeds[0])
        reports = [dof_rank_check(*random_point(channels, bins, rng, degenerate=options['degenerate']))
                   for _ in range(options['trials'])]
        offset = 1 if options['degenerate'] else 0
        mismatches = [r for r in reports if r.measured_rank != r.expected_rank - offset]

        rows = [[i, r.channels, r.bins, r.expected_rank, r.measured_rank, r.generic] for i, r in enumerate(reports)]
        self.stdout.write(format_table(['Trial', 'C', 'K', 'Expected', 'Measured', 'Generic'], rows))
        path = ReportGenerator.write_dof(self.out_dir(cfg) / f'dof_C{channels}_K{bins}.csv', reports)

        if mismatches:
            raise CommandError(f'{len(mismatches)} of {len(reports)} draws had an unexpected rank', returncode=1)
        self.success(f'All {len(reports)} draws matched ({path})')
