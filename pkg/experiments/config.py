"""
Experiment configuration: flat key=value files, CLI overrides, validation
and the config hash carried by every output row.
"""
import dataclasses
import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from mri.masks import MaskKind
from spectral.exceptions import ConfigError
from spectral.mixer import AxisMode, Variant

logger = logging.getLogger(__name__)

# Not part of the hash: a run is identified by (config hash, seed).
UNHASHED_KEYS = ('seeds', 'out_dir')


def ensure_django() -> None:
    """Configure Django when the apps are used outside manage.py."""
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chasm_project.settings')
    import django
    from django.apps import apps
    if not apps.ready:
        django.setup()


@dataclass(frozen=True)
class ExperimentConfig:
    height: int = 64
    width: int = 64
    channels: int = 8
    bins_h: int = 9
    bins_w: int = 9
    blocks: int = 2
    variant: Variant = Variant.CHASM
    axis_mode: AxisMode = AxisMode.CH_THEN_CW
    mask: str = 'structured'
    accel: float = 4.0
    center_fraction: float = 0.0
    random_keep_center: bool = False
    loss: str = 'l1'
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.01
    batch_size: int = 8
    steps: int = 2000
    eval_every: int = 200
    seeds: Tuple[int, ...] = (0, 1, 2)
    train_phantoms: int = 200
    val_phantoms: int = 32
    test_phantoms: int = 32
    n_ellipses: int = 8
    data_seed: int = 1234
    lift_init_scale: float = 0.1
    frechet_mode: str = 'directional'
    out_dir: str = 'runs'

    @property
    def mask_kind(self) -> MaskKind:
        return MaskKind(self.mask.capitalize())

    def canonical_items(self) -> List[Tuple[str, str]]:
        items = []
        for f in dataclasses.fields(self):
            if f.name in UNHASHED_KEYS:
                continue
            items.append((f.name, render_value(getattr(self, f.name))))
        return sorted(items)

    @property
    def config_hash(self) -> str:
        text = '\n'.join(f'{k}={v}' for k, v in self.canonical_items())
        return hashlib.sha256(text.encode('utf-8')).hexdigest()[:12]

    def replace(self, **changes) -> 'ExperimentConfig':
        if 'variant' in changes:
            changes['variant'] = Variant(changes['variant'])
        if 'axis_mode' in changes:
            changes['axis_mode'] = AxisMode(changes['axis_mode'])
        return dataclasses.replace(self, **changes)

    def as_text(self) -> str:
        lines = [f'{k}={v}' for k, v in self.canonical_items()]
        lines.append(f"seeds={','.join(str(s) for s in self.seeds)}")
        lines.append(f'out_dir={self.out_dir}')
        return '\n'.join(lines) + '\n'


def render_value(value) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (Variant, AxisMode, MaskKind)):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ','.join(str(v) for v in value)
    return str(value)


def parse_config_text(text: str, source: str = '<config>') -> Dict[str, str]:
    """
    Parse ``key=value`` lines; ``#`` starts a comment, blank lines are skipped.

    Raises:
        ConfigError: malformed line or unknown key
    """
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in known:
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'")
        values[key] = value
    return values


def read_config_file(path) -> Dict[str, str]:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def config_from_text(text: str) -> ExperimentConfig:
    """Inverse of ``ExperimentConfig.as_text``."""
    return load_config(overrides=parse_config_text(text))


def load_config(path=None, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """
    Merge defaults, an optional config file and CLI overrides, then validate.

    Args:
        path: key=value config file, optional
        overrides: values that win over the file; ``None`` entries are ignored

    Returns:
        Frozen ExperimentConfig

    Raises:
        ConfigError: with the serializer's field messages in ``errors``
    """
    ensure_django()
    from django.conf import settings
    from .serializers import ExperimentConfigSerializer

    raw = {'out_dir': getattr(settings, 'CHASM_OUT_DIR', 'runs')}
    if path:
        raw.update(read_config_file(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = ','.join(str(v) for v in value) if isinstance(value, (list, tuple)) else value

    serializer = ExperimentConfigSerializer(data=raw)
    if not serializer.is_valid():
        errors = {k: [str(m) for m in v] for k, v in serializer.errors.items()}
        summary = '; '.join(f"{k}: {' '.join(v)}" for k, v in errors.items())
        logger.error(f"Invalid experiment configuration: {summary}")
        raise ConfigError(f"Invalid configuration: {summary}", errors=errors)

    data = dict(serializer.validated_data)
    data['variant'] = Variant(data['variant'])
    data['axis_mode'] = AxisMode(data['axis_mode'])
    data['seeds'] = tuple(data['seeds'])
    return ExperimentConfig(**data)
