"""
Management command training the toy reconstruction model over seeds.
"""
from django.core.management.base import CommandError

from experiments.management.base import ExperimentCommand
from experiments.reports import RUN_TABLE_HEADER, ReportGenerator, format_table, run_rows
from experiments.tasks import run_seeds


class Command(ExperimentCommand):
    help = 'Train the toy model for every configured seed and write RunRecord CSVs'

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        out = self.out_dir(cfg, cfg.config_hash)
        (out / 'config.txt').write_text(cfg.as_text())

        records = run_seeds(cfg, cfg.seeds)
        self.stdout.write(format_table(RUN_TABLE_HEADER, run_rows(records)))
        ReportGenerator.write_run_records(out / 'runs.csv', records)
        ReportGenerator.write_trajectories(out / 'trajectory.csv', records)
        ReportGenerator.write_timings(out / 'timings.csv', records)

        failed = [r for r in records if not r.succeeded]
        if failed:
            for r in failed:
                self.failure(f'Seed {r.seed}: {r.status} ({r.message})')
            raise CommandError(f'{len(failed)} of {len(records)} runs failed', returncode=1)
        self.success(f'Config {cfg.config_hash}: {len(records)} runs written to {out}')
