"""
Management command comparing the Chasm advantage under structured and
random undersampling masks.
"""
import math

from django.core.management.base import CommandError

from experiments.ablation import run_mask_falsification
from experiments.management.base import ExperimentCommand
from experiments.reports import ABLATION_TABLE_HEADER, ReportGenerator, ablation_rows, format_table
from spectral.mixer import Variant


class Command(ExperimentCommand):
    help = 'Report Drop = 1 - delta_random / delta_structured for the Chasm advantage'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--variants', type=str,
                            help='Comma-separated comparison variants (Chasm is always included)')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        variants = None
        if options.get('variants'):
            try:
                variants = [Variant(v.strip()) for v in options['variants'].split(',')]
            except ValueError as e:
                raise CommandError(str(e), returncode=2)

        report = run_mask_falsification(cfg, variants)
        for title, table in (('Structured masks', report.structured), ('Random masks', report.random)):
            self.stdout.write(title)
            self.stdout.write(format_table(ABLATION_TABLE_HEADER, ablation_rows(table)))
        self.stdout.write(
            f'Best baseline (structured): {report.best_structured}; (random): {report.best_random}\n'
            f'Delta structured {report.delta_structured:+.3f} dB, delta random {report.delta_random:+.3f} dB, '
            f'Drop {"nan" if math.isnan(report.drop) else f"{100 * report.drop:.1f}%"}'
        )
        out = self.out_dir(cfg, f'falsify_{cfg.config_hash}')
        ReportGenerator.write_falsification(out / 'falsification.csv', report)
        ReportGenerator.write_ablation(out / 'structured.csv', report.structured)
        ReportGenerator.write_ablation(out / 'random.csv', report.random)

        if not (report.structured.succeeded and report.random.succeeded):
            raise CommandError('At least one falsification run failed', returncode=1)
        self.success(f'Mask falsification written to {out}')
