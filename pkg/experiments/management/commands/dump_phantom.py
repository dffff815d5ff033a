"""
Management command writing a phantom, its mask and the initial model
parameters as flat binary dumps with PNG previews.
"""
from experiments.dumps import dump_mask, dump_parameters, dump_phantom, save_preview
from experiments.management.base import ExperimentCommand
from experiments.model import build_toy_model
from experiments.training import phantom_seed, run_mask
from mri.phantom import make_phantom


class Command(ExperimentCommand):
    help = 'Dump a phantom, the undersampling mask and initial parameters for inspection'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--split', choices=['train', 'val', 'test'], default='train')
        parser.add_argument('--index', type=int, default=0, help='Phantom index within the split')
        parser.add_argument('--no-params', action='store_true', help='Skip the parameter dump')

    def handle(self, *args, **options):
        cfg = self.load_experiment(options)
        seed = cfg.seeds[0]
        out = self.out_dir(cfg, 'dumps')

        phantom = make_phantom(cfg.height, cfg.width,
                               phantom_seed(cfg.data_seed, options['split'], options['index']),
                               cfg.n_ellipses)
        stem = f'phantom_{options["split"]}_{options["index"]}'
        bin_path, _ = dump_phantom(out, phantom, stem)
        save_preview(out / stem, phantom.magnitude)

        mask = run_mask(cfg, seed)
        mask_stem = f'mask_{cfg.mask}_R{cfg.accel:g}_seed{seed}'
        dump_mask(out, mask, mask_stem)
        save_preview(out / mask_stem, mask.as_image(cfg.height).astype(float))
        self.stdout.write(f'Phantom {bin_path}, mask {mask.popcount}/{mask.lines} lines')

        if not options['no_params']:
            model = build_toy_model(cfg, seed)
            params_path, _ = dump_parameters(out, model.named_arrays(), seed, f'params_{cfg.config_hash}_seed{seed}')
            self.stdout.write(f'Parameters {params_path}')
        self.success(f'Dumps written to {out}')
