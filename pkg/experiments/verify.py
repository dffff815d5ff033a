"""
The property suite behind ``chasm verify``.

Every check returns a CheckResult; the suite passes only if all do.
"""
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from analysis.dof import dof_rank_check, random_point
from analysis.oracle import dense_core_oracle, oracle_discrepancy
from mri.masks import make_random_mask, make_structured_mask
from mri.operators import normal_multi, normal_single
from mri.phantom import make_coils
from spectral import conf
from spectral.autodiff import MixerModule, inject_fault
from spectral.exceptions import ChasmError
from spectral.fft import (
    half_spectrum_inner, irfft_axis, naive_dft_axis, rfft_adjoint, rfft_axis, rfft_lines,
)
from spectral.gradcheck import grad_check
from spectral.mixer import AxisMode, MixerParams, Variant, mixer_forward, spectral_core
from spectral.operator import (
    SkewParams, basis_from_params, dense_operator, reindex_gains,
)
from .model import random_toy_model

logger = logging.getLogger(__name__)

SUITE_SEED = 20240611
DOF_GRID = tuple(itertools.product((2, 3, 4), (1, 2, 4)))
DOF_GENERIC_DRAWS = 20


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ''


@dataclass
class VerifyReport:
    results: List[CheckResult] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]


def _at_most(name: str, value: float, threshold: float, detail: str = '') -> CheckResult:
    return CheckResult(name, bool(value <= threshold), float(value), threshold, detail)


def check_fft(rng) -> List[CheckResult]:
    worst = 0.0
    roundtrip = 0.0
    for n in range(1, 33):
        x = rng.standard_normal((n, 3, 2))
        for axis, arr in (('Height', x), ('Width', np.swapaxes(x, 0, 1))):
            fast = rfft_axis(arr, axis)
            slow = naive_dft_axis(arr, axis)
            scale = max(1.0, float(np.max(np.abs(slow.data))))
            worst = max(worst, float(np.max(np.abs(fast.data - slow.data))) / scale)
            roundtrip = max(roundtrip, float(np.max(np.abs(irfft_axis(fast, n) - arr))))
    adjoint = 0.0
    for n in (6, 7):
        x = rng.standard_normal((n, 4, 2))
        y = rng.standard_normal((n // 2 + 1, 4, 2)) + 1j * rng.standard_normal((n // 2 + 1, 4, 2))
        lhs = half_spectrum_inner(rfft_lines(x, 0), y, n, 0)
        rhs = float(np.sum(x * rfft_adjoint(y, n, 0)))
        adjoint = max(adjoint, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return [
        _at_most('fft_matches_naive_dft', worst, 1e-12, 'n = 1..32, both axes'),
        _at_most('fft_roundtrip', roundtrip, 1e-12),
        _at_most('fft_adjoint', adjoint, 1e-11, 'weighted half-spectrum inner product'),
    ]


def check_bases(rng) -> List[CheckResult]:
    worst = 0.0
    for c in (2, 3, 4, 6, 8):
        for _ in range(5):
            theta = rng.uniform(-2.0, 2.0, size=c * (c - 1) // 2)
            basis = basis_from_params(SkewParams(theta, c))
            worst = max(worst, basis.orthogonality_error(), abs(basis.determinant() - 1.0))
    return [_at_most('basis_orthogonal_det_one', worst, 1e-10)]


def _all_configs():
    return itertools.product(Variant, AxisMode)


def check_core(rng) -> List[CheckResult]:
    h, w, c = 6, 5, 3
    identity = 0.0
    linearity = 0.0
    for variant, mode in _all_configs():
        init = MixerParams.initial(c, 3, 3, variant, mode, h, w)
        x = rng.standard_normal((h, w, c))
        identity = max(identity, float(np.max(np.abs(mixer_forward(x, init) - x))))
        core_factor = 2.0 if mode is AxisMode.CH_PLUS_CW else 1.0
        identity = max(identity, float(np.max(np.abs(spectral_core(x, init) - core_factor * x))))

        p = MixerParams.random(c, 3, 3, rng, variant, mode, h, w)
        y = rng.standard_normal((h, w, c))
        a, b = rng.standard_normal(2)
        combined = spectral_core(a * x + b * y, p)
        separate = a * spectral_core(x, p) + b * spectral_core(y, p)
        linearity = max(linearity, float(np.max(np.abs(combined - separate))))
    return [
        _at_most('identity_at_init', identity, 1e-10, 'every variant and axis mode'),
        _at_most('core_linearity', linearity, 1e-10),
    ]


def check_realness(rng) -> List[CheckResult]:
    previous = conf.VERIFY_FFT
    conf.set_verify_fft(True)
    try:
        for h, w in ((6, 6), (5, 7)):
            p = MixerParams.random(3, 4, 4, rng, Variant.COMPLEX_GAIN, AxisMode.CH_THEN_CW, h, w, scale=1.0)
            spectral_core(rng.standard_normal((h, w, 3)), p)
        passed, detail = True, 'no residue above tolerance with complex gains'
    except ChasmError as e:
        passed, detail = False, str(e)
    finally:
        conf.set_verify_fft(previous)
    return [CheckResult('output_realness', passed, 0.0, conf.IMAG_RESIDUE_TOL, detail)]


def check_reindexing(rng) -> List[CheckResult]:
    exact = True
    c, k = 4, 5
    basis = basis_from_params(SkewParams(rng.uniform(-1, 1, size=6), c)).u
    table = rng.uniform(0.5, 2.0, size=(k, c))
    for _ in range(10):
        sigma = rng.permutation(k)
        moved = reindex_gains(table, sigma)
        for i in range(k):
            if not np.array_equal(dense_operator(basis, moved[sigma[i]]), dense_operator(basis, table[i])):
                exact = False
    return [CheckResult('frequency_reindexing', exact, 0.0, 0.0, 'bit-for-bit')]


def check_normal_operators(rng) -> List[CheckResult]:
    h, w = 12, 16
    coils = make_coils(h, w, 4)
    masks = [make_structured_mask(w, 4), make_random_mask(w, 4, seed=3)]
    hermitian = 0.0
    rayleigh = np.inf
    for mask in masks:
        for op in (lambda v: normal_single(v, mask), lambda v: normal_multi(v, mask, coils)):
            for _ in range(25):
                x = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
                y = rng.standard_normal((h, w)) + 1j * rng.standard_normal((h, w))
                lhs = np.vdot(y, op(x))
                rhs = np.conj(np.vdot(x, op(y)))
                hermitian = max(hermitian, abs(lhs - rhs))
                rayleigh = min(rayleigh, float(np.real(np.vdot(x, op(x)))))
    return [
        _at_most('normal_hermitian', hermitian, 1e-10, 'single and multi coil'),
        CheckResult('normal_psd', bool(rayleigh >= -1e-12), rayleigh, -1e-12, 'min Rayleigh quotient'),
    ]


def check_gradients(rng) -> List[CheckResult]:
    results = []
    for variant, mode in _all_configs():
        model = random_toy_model(4, 1, 6, 6, rng, variant, mode)
        x = rng.standard_normal((6, 6, 2))
        report = grad_check(model, x, tolerance=1e-5, seed=int(rng.integers(1 << 30)))
        results.append(_at_most(f'grad_check[{variant.value}/{mode.value}]', report.max_rel_error, 1e-5))

    block = MixerModule(MixerParams.random(4, 3, 3, rng, height=6, width=6))
    x = rng.standard_normal((6, 6, 4))
    with inject_fault('cw_sign_flip'):
        faulty = grad_check(block, x, tolerance=1e-5)
    results.append(CheckResult('grad_check_detects_fault', not faulty.passed, faulty.max_rel_error, 1e-5,
                               'cw_sign_flip must fail the check'))
    return results


def check_dense_oracle(rng) -> List[CheckResult]:
    worst = 0.0
    for variant, mode in _all_configs():
        p = MixerParams.random(3, 3, 3, rng, variant, mode, 4, 4)
        matrix = dense_core_oracle(p, 4, 4, 3)
        worst = max(worst, oracle_discrepancy(matrix, p, 4, 4, 3, trials=10, seed=int(rng.integers(1 << 30))))
    return [_at_most('dense_core_oracle', worst, 1e-9, '4x4x3, every variant and axis mode')]


def check_dof(rng) -> List[CheckResult]:
    mismatches = 0
    degenerate_mismatches = 0
    for c, k in DOF_GRID:
        for _ in range(DOF_GENERIC_DRAWS):
            if not dof_rank_check(*random_point(c, k, rng)).matches:
                mismatches += 1
        report = dof_rank_check(*random_point(c, k, rng, degenerate=True))
        if report.measured_rank != report.expected_rank - 1:
            degenerate_mismatches += 1
    grid = 'C in {2,3,4}, K in {1,2,4}'
    return [
        CheckResult('dof_generic_rank', mismatches == 0, float(mismatches), 0.0,
                    f'{DOF_GENERIC_DRAWS} draws per point, {grid}'),
        CheckResult('dof_degenerate_rank', degenerate_mismatches == 0, float(degenerate_mismatches), 0.0,
                    f'rank must drop by one, {grid}'),
    ]


SUITE: List[Tuple[str, Callable]] = [
    ('fft', check_fft),
    ('bases', check_bases),
    ('core', check_core),
    ('realness', check_realness),
    ('reindexing', check_reindexing),
    ('normal_operators', check_normal_operators),
    ('gradients', check_gradients),
    ('dense_oracle', check_dense_oracle),
    ('dof', check_dof),
]


def run_verify(seed: int = SUITE_SEED) -> VerifyReport:
    """Run every property group; a group that raises is recorded as failed."""
    started = time.perf_counter()
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    for group, check in SUITE:
        try:
            report.results.extend(check(rng))
        except ChasmError as e:
            logger.error(f"Verify group '{group}' raised: {e}")
            report.results.append(CheckResult(group, False, float('nan'), float('nan'), str(e)))
    report.elapsed = time.perf_counter() - started
    logger.info(f"Verify suite: {len(report.failures())} failures in {report.elapsed:.1f}s")
    return report
