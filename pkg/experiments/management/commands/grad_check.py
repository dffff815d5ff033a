"""
Management command comparing reverse-mode gradients against central
finite differences, per parameter group.
"""
import itertools

import numpy as np
from django.core.management.base import CommandError

from experiments.management.base import ExperimentCommand
from experiments.model import random_toy_model
from experiments.reports import format_table
from spectral.gradcheck import DEFAULT_TOLERANCE, grad_check
from spectral.mixer import AxisMode, Variant


class Command(ExperimentCommand):
    help = 'Finite-difference gradient check of the toy model'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--channels', type=int, default=4)
        parser.add_argument('--blocks', type=int, default=1)
        parser.add_argument('--size', type=int, default=6, help='Height and width of the input grid')
        parser.add_argument('--bins', type=int, default=3)
        parser.add_argument('--trials', type=int, default=3, help='Random instances per configuration')
        parser.add_argument('--tolerance', type=float, default=DEFAULT_TOLERANCE)
        parser.add_argument('--all', action='store_true', help='Every variant and every axis mode')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        if options['all']:
            configs = list(itertools.product(Variant, AxisMode))
        else:
            configs = [(cfg.variant, cfg.axis_mode)]

        out = self.out_dir(cfg, 'grad_check')
        rng = np.random.default_rng(cfg.seeds[0])
        size = options['size']
        failed = []
        for variant, mode in configs:
            for trial in range(options['trials']):
                model = random_toy_model(options['channels'], options['blocks'], size, size, rng,
                                         variant, mode, bins=options['bins'])
                x = rng.standard_normal((size, size, 2))
                report = grad_check(model, x, tolerance=options['tolerance'], seed=trial,
                                    frechet_mode=cfg.frechet_mode)
                label = f'{variant.value}/{mode.value} trial {trial}'
                rows = [[g.name, g.size, f'{g.max_abs_error:.3e}', f'{g.max_rel_error:.3e}',
                         'ok' if g.max_rel_error < report.tolerance else 'FAIL'] for g in report.groups]
                self.stdout.write(label)
                self.stdout.write(format_table(['Group', 'Scalars', 'Max Abs', 'Max Rel', ''], rows))
                report.write_csv(out / f'{variant.value}_{mode.value}_{trial}.csv')
                if not report.passed:
                    failed.append(label)

        if failed:
            raise CommandError(f"Gradient check failed for: {', '.join(failed)}", returncode=1)
        self.success(f'Gradient check passed at tolerance {options["tolerance"]:g} ({out})')
