"""
The ``chasm`` console script: manage.py with hyphenated subcommand names.
"""
import os
import sys

SUBCOMMANDS = {
    'verify': 'verify',
    'grad-check': 'grad_check',
    'dof-check': 'dof_check',
    'train': 'train',
    'ablate': 'ablate',
    'falsify-mask': 'falsify_mask',
    'dump-phantom': 'dump_phantom',
}


def translate(argv):
    """Map ``chasm grad-check ...`` onto ``manage.py grad_check ...``."""
    if len(argv) > 1 and argv[1] in SUBCOMMANDS:
        return ['chasm', SUBCOMMANDS[argv[1]]] + list(argv[2:])
    return ['chasm'] + list(argv[1:])


def main(argv=None):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chasm_project.settings')
    from django.core.management import execute_from_command_line
    execute_from_command_line(translate(argv if argv is not None else sys.argv))


if __name__ == '__main__':
    main()
