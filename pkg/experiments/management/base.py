"""
Shared flags and config loading for the experiment management commands.
"""
import dataclasses
import logging
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from spectral import conf
from spectral.exceptions import ConfigError
from spectral.mixer import AxisMode, Variant
from ..config import ExperimentConfig, load_config

logger = logging.getLogger(__name__)

KNOWN_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)}


class ExperimentCommand(BaseCommand):
    """Base class adding the common experiment flags."""

    def add_arguments(self, parser):
        parser.add_argument('--config', type=str, help='key=value experiment config file')
        parser.add_argument('--seed', type=int, help='Run a single seed')
        parser.add_argument('--seeds', type=str, help='Comma-separated seeds, e.g. 0,1,2')
        parser.add_argument('--variant', choices=[v.value for v in Variant], help='Spectral core variant')
        parser.add_argument('--axis-mode', choices=[m.value for m in AxisMode], help='Axis composition')
        parser.add_argument('--mask', choices=['structured', 'random'], help='Undersampling mask kind')
        parser.add_argument('--accel', type=float, help='Acceleration factor R')
        parser.add_argument('--random-keep-center', action='store_true',
                            help='Random masks keep the fully sampled centre block')
        parser.add_argument('--out', type=str, help='Output directory')
        parser.add_argument('--verify-fft', action='store_true',
                            help='Check the imaginary residue of every inverse rFFT')
        parser.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                            help='Override any config key (repeatable)')

    def load_experiment(self, options) -> ExperimentConfig:
        """
        Merge file, flag and --set values into a validated config.

        Raises:
            CommandError: invalid configuration (exit code 2)
        """
        if options.get('verify_fft'):
            conf.set_verify_fft(True)

        overrides = {}
        for item in options.get('set') or []:
            if '=' not in item:
                raise CommandError(f'--set expects KEY=VALUE, got {item!r}', returncode=2)
            key, value = (part.strip() for part in item.split('=', 1))
            if key not in KNOWN_KEYS:
                raise CommandError(f'Unknown config key {key!r}', returncode=2)
            overrides[key] = value
        flags = {
            'variant': options.get('variant'),
            'axis_mode': options.get('axis_mode'),
            'mask': options.get('mask'),
            'accel': options.get('accel'),
            'out_dir': options.get('out'),
            'random_keep_center': True if options.get('random_keep_center') else None,
        }
        overrides.update({k: v for k, v in flags.items() if v is not None})
        if options.get('seed') is not None:
            overrides['seeds'] = str(options['seed'])
        elif options.get('seeds'):
            overrides['seeds'] = options['seeds']

        try:
            return load_config(options.get('config'), overrides)
        except ConfigError as e:
            raise CommandError(str(e), returncode=2)

    def out_dir(self, cfg: ExperimentConfig, *parts: str) -> Path:
        path = Path(cfg.out_dir).joinpath(*parts)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def success(self, message: str) -> None:
        self.stdout.write(self.style.SUCCESS(message))

    def failure(self, message: str) -> None:
        self.stdout.write(self.style.ERROR(message))
