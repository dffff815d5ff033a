"""
Management command running controlled-replacement ablations.
"""
from django.core.management.base import CommandError

from experiments.ablation import axis_arms, run_ablation, variant_arms
from experiments.management.base import ExperimentCommand
from experiments.reports import ABLATION_TABLE_HEADER, ReportGenerator, ablation_rows, format_table
from spectral.mixer import AxisMode, Variant


class Command(ExperimentCommand):
    help = 'Train several spectral-core arms under an identical data, mask, seed and schedule regime'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--study', choices=['variants', 'axes'], default='variants',
                            help='Ablate the basis/gain variant or the axis composition')
        parser.add_argument('--arms', type=str,
                            help='Comma-separated variants (or axis modes) instead of the defaults')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        names = [a.strip() for a in options['arms'].split(',')] if options.get('arms') else None
        try:
            if options['study'] == 'axes':
                arms = axis_arms(cfg, [AxisMode(n) for n in names] if names else None)
            else:
                arms = variant_arms(cfg, [Variant(n) for n in names] if names else None)
        except ValueError as e:
            raise CommandError(str(e), returncode=2)

        table = run_ablation(cfg, arms)
        self.stdout.write(format_table(ABLATION_TABLE_HEADER, ablation_rows(table)))
        out = self.out_dir(cfg, f'ablation_{options["study"]}_{cfg.config_hash}')
        ReportGenerator.write_ablation(out / 'ablation.csv', table)
        records = [r for row in table.rows for r in row.records]
        ReportGenerator.write_run_records(out / 'runs.csv', records)
        ReportGenerator.write_timings(out / 'timings.csv', records)

        if not table.controlled:
            raise CommandError('Non-core initial values differed between arms', returncode=1)
        if not table.succeeded:
            raise CommandError('At least one ablation run failed', returncode=1)
        self.success(f'Ablation over {len(table.rows)} arms written to {out}')
