"""
Management command running the property suite.
"""
from django.core.management.base import CommandError

from experiments.management.base import ExperimentCommand
from experiments.reports import ReportGenerator, format_table
from experiments.verify import SUITE_SEED, run_verify


class Command(ExperimentCommand):
    help = 'Run the FFT, basis, core, operator, gradient, oracle and DOF property suite'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--suite-seed', type=int, default=SUITE_SEED,
                            help='Seed for the random instances drawn by the suite')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        report = run_verify(options['suite_seed'])

        rows = [[r.name, 'PASS' if r.passed else 'FAIL', f'{r.value:.3e}', f'{r.threshold:.1e}', r.detail]
                for r in report.results]
        self.stdout.write(format_table(['Check', 'Result', 'Value', 'Threshold', 'Detail'], rows))
        path = ReportGenerator.write_verify(self.out_dir(cfg) / 'verify.csv', report)

        if not report.passed:
            names = ', '.join(r.name for r in report.failures())
            raise CommandError(f'{len(report.failures())} checks failed: {names}', returncode=1)
        self.success(f'All {len(report.results)} checks passed in {report.elapsed:.1f}s ({path})')
