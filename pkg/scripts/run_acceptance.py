"""
Script running the long acceptance battery at the default toy config:
variant ordering, axis ordering and the mask falsification.
"""
import argparse
import os
import sys

import django

# Setup Django
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'chasm_project.settings')
django.setup()

from experiments.ablation import axis_arms, run_ablation, run_mask_falsification, variant_arms
from experiments.config import load_config
from experiments.reports import ABLATION_TABLE_HEADER, ReportGenerator, ablation_rows, format_table
from spectral.mixer import AxisMode, Variant

MIN_IDENTITY_GAP = 0.2
MIN_AXIS_GAP = 0.1
MIN_DROP = 0.5


def check_variant_ordering(cfg, out):
    """Chasm > UntiedBasis > IdentityBasis, with Chasm - IdentityBasis >= 0.2 dB."""
    print("\n1. Variant ordering...")
    table = run_ablation(cfg, variant_arms(cfg))
    print(format_table(ABLATION_TABLE_HEADER, ablation_rows(table)))
    ReportGenerator.write_ablation(os.path.join(out, 'acceptance_variants.csv'), table)
    chasm = table.row(Variant.CHASM, cfg.axis_mode).psnr_mean
    untied = table.row(Variant.UNTIED_BASIS, cfg.axis_mode).psnr_mean
    identity = table.row(Variant.IDENTITY_BASIS, cfg.axis_mode).psnr_mean
    passed = table.succeeded and chasm > untied > identity and chasm - identity >= MIN_IDENTITY_GAP
    print(f"   - Chasm {chasm:.3f} / Untied {untied:.3f} / Identity {identity:.3f}: {'PASS' if passed else 'FAIL'}")
    return passed


def check_axis_ordering(cfg, out):
    """ChThenCw >= max(ChOnly, CwOnly) + 0.1 dB; ChThenCw vs CwThenCh is reported only."""
    print("\n2. Axis ordering...")
    table = run_ablation(cfg, axis_arms(cfg))
    print(format_table(ABLATION_TABLE_HEADER, ablation_rows(table)))
    ReportGenerator.write_ablation(os.path.join(out, 'acceptance_axes.csv'), table)
    both = table.row(cfg.variant, AxisMode.CH_THEN_CW).psnr_mean
    reverse = table.row(cfg.variant, AxisMode.CW_THEN_CH).psnr_mean
    single = max(table.row(cfg.variant, AxisMode.CH_ONLY).psnr_mean,
                 table.row(cfg.variant, AxisMode.CW_ONLY).psnr_mean)
    passed = table.succeeded and both >= single + MIN_AXIS_GAP
    print(f"   - ChThenCw {both:.3f} vs best single axis {single:.3f}: {'PASS' if passed else 'FAIL'}")
    print(f"   - CwThenCh {reverse:.3f} (reported, not gated)")
    return passed


def check_mask_falsification(cfg, out):
    """delta_structured > delta_random and Drop >= 50%."""
    print("\n3. Mask falsification...")
    report = run_mask_falsification(cfg)
    ReportGenerator.write_falsification(os.path.join(out, 'acceptance_falsification.csv'), report)
    passed = (report.structured.succeeded and report.random.succeeded
              and report.delta_structured > report.delta_random and report.drop >= MIN_DROP)
    print(f"   - Delta structured {report.delta_structured:+.3f} dB (vs {report.best_structured})")
    print(f"   - Delta random {report.delta_random:+.3f} dB (vs {report.best_random})")
    print(f"   - Drop {100 * report.drop:.1f}%: {'PASS' if passed else 'FAIL'}")
    return passed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument('--config', help='key=value config file (defaults to the desk-scale toy config)')
    parser.add_argument('--out', help='Output directory')
    args = parser.parse_args()

    cfg = load_config(args.config, {'out_dir': args.out})
    out = os.path.join(cfg.out_dir, f'acceptance_{cfg.config_hash}')
    os.makedirs(out, exist_ok=True)

    print("Running Acceptance Battery")
    print("=" * 50)
    results = [
        check_variant_ordering(cfg, out),
        check_axis_ordering(cfg, out),
        check_mask_falsification(cfg, out),
    ]
    print("\n" + "=" * 50)
    print(f"{sum(results)} of {len(results)} criteria passed")
    return 0 if all(results) else 1


if __name__ == '__main__':
    sys.exit(main())
