import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chasm_project.settings')
os.environ.setdefault('CHASM_EAGER_TASKS', 'true')

import django  # noqa: E402

django.setup()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_overrides(tmp_path):
    """A configuration that trains in well under a second."""
    return {
        'height': 8, 'width': 8, 'channels': 3, 'bins_h': 3, 'bins_w': 3, 'blocks': 1,
        'train_phantoms': 4, 'val_phantoms': 2, 'test_phantoms': 2, 'n_ellipses': 3,
        'batch_size': 2, 'steps': 3, 'eval_every': 2, 'seeds': '0',
        'out_dir': str(tmp_path),
    }
