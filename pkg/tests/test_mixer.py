import itertools
import math

import numpy as np
import pytest
from scipy.special import erf

from spectral.exceptions import ShapeError
from spectral.mixer import (
    AxisMode, FuseWeights, MixerParams, RefineWeights, UntiedParams, Variant, ch_plane_pass,
    core_cost, core_parameter_count, cw_plane_pass, fuse, gelu, local_refine, mixer_forward,
    resolve_axis, spectral_core, variant_core, wrapper_parameter_count,
)
from spectral.operator import (
    AxisOperatorParams, SkewParams, basis_from_params, dense_operator, interpolation_matrix, softplus,
)
from spectral.fft import Axis

ALL_CONFIGS = list(itertools.product(Variant, AxisMode))


class TestIdentityAtInit:
    @pytest.mark.parametrize('variant,mode', ALL_CONFIGS)
    def test_core_and_block(self, rng, variant, mode):
        p = MixerParams.initial(3, 4, 4, variant, mode, 6, 5)
        x = rng.standard_normal((6, 5, 3))
        factor = 2.0 if mode is AxisMode.CH_PLUS_CW else 1.0
        np.testing.assert_allclose(spectral_core(x, p), factor * x, atol=1e-10)
        np.testing.assert_array_equal(mixer_forward(x, p), x)

    def test_refined_identity_core(self, rng):
        p = MixerParams.initial(2, 3, 3)
        p.fuse.weight[...] = np.eye(2)
        x = rng.standard_normal((4, 4, 2))
        np.testing.assert_allclose(mixer_forward(x, p), x + gelu(x), atol=1e-10)


class TestPlanePasses:
    def test_height_one_uses_dc_operator(self, rng):
        p = MixerParams.random(3, 2, 2, rng, height=1, width=4)
        x = rng.standard_normal((1, 4, 3))
        u = basis_from_params(p.ch.skew).u
        lam0 = softplus(p.ch.gains.gamma[0])
        expected = x @ dense_operator(u, lam0).T
        np.testing.assert_allclose(ch_plane_pass(x, p), expected, atol=1e-12)

    def test_width_one_uses_dc_operator(self, rng):
        p = MixerParams.random(3, 2, 2, rng, height=4, width=1)
        x = rng.standard_normal((4, 1, 3))
        u = basis_from_params(p.cw.skew).u
        lam0 = softplus(p.cw.gains.gamma[0])
        np.testing.assert_allclose(cw_plane_pass(x, p), x @ dense_operator(u, lam0).T, atol=1e-12)

    @pytest.mark.parametrize('pass_fn', [ch_plane_pass, cw_plane_pass])
    def test_naive_backend_agrees(self, rng, pass_fn):
        p = MixerParams.random(3, 3, 3, rng)
        x = rng.standard_normal((4, 4, 3))
        np.testing.assert_allclose(pass_fn(x, p), pass_fn(x, p, backend='naive'), atol=1e-10)

    def test_axis_tag_checked(self):
        params = AxisOperatorParams.identity(2, 3, Axis.WIDTH)
        with pytest.raises(ShapeError):
            ch_plane_pass(np.zeros((4, 4, 2)), params)


class TestSpectralCore:
    def test_order_matters(self, rng):
        p = MixerParams.random(3, 3, 3, rng, scale=1.0)
        q = MixerParams(p.ch, p.cw, p.refine, p.fuse, p.variant, AxisMode.CW_THEN_CH)
        x = rng.standard_normal((6, 6, 3))
        assert np.max(np.abs(spectral_core(x, p) - spectral_core(x, q))) > 0

    @pytest.mark.parametrize('variant,mode', ALL_CONFIGS)
    def test_linearity(self, rng, variant, mode):
        p = MixerParams.random(3, 3, 3, rng, variant, mode, 5, 6)
        x, y = rng.standard_normal((2, 5, 6, 3))
        a, b = 0.7, -1.3
        np.testing.assert_allclose(spectral_core(a * x + b * y, p),
                                   a * spectral_core(x, p) + b * spectral_core(y, p), atol=1e-10)

    def test_channel_mismatch(self, rng):
        p = MixerParams.initial(3, 2, 2)
        with pytest.raises(ShapeError):
            spectral_core(rng.standard_normal((4, 4, 2)), p)


class TestVariants:
    def test_identity_basis_unit_gains(self, rng):
        p = MixerParams.initial(3, 3, 3, Variant.IDENTITY_BASIS)
        x = rng.standard_normal((5, 5, 3))
        np.testing.assert_allclose(variant_core(x, p, Variant.IDENTITY_BASIS), x, atol=1e-12)

    def test_untied_contains_tied(self, rng):
        h = w = 6
        tied = MixerParams.random(3, 4, 4, rng, height=h, width=w)
        untied = MixerParams.initial(3, 4, 4, Variant.UNTIED_BASIS, AxisMode.CH_THEN_CW, h, w)
        for tag, n in (('ch', h), ('cw', w)):
            shared = getattr(tied, tag)
            target = getattr(untied, tag)
            target.thetas[...] = shared.skew.theta
            target.gamma[...] = interpolation_matrix(n // 2 + 1, shared.gains.bins) @ shared.gains.gamma
        x = rng.standard_normal((h, w, 3))
        np.testing.assert_allclose(spectral_core(x, untied), spectral_core(x, tied), atol=1e-10)

    def test_complex_with_zero_phase_equals_positive(self, rng):
        positive = MixerParams.random(3, 3, 3, rng)
        complex_p = MixerParams.initial(3, 3, 3, Variant.COMPLEX_GAIN)
        for tag in ('ch', 'cw'):
            getattr(complex_p, tag).skew.theta[...] = getattr(positive, tag).skew.theta
            getattr(complex_p, tag).gains.gamma[...] = getattr(positive, tag).gains.gamma
        x = rng.standard_normal((5, 4, 3))
        np.testing.assert_array_equal(spectral_core(x, complex_p), spectral_core(x, positive))

    def test_variant_layout_checked(self):
        p = MixerParams.initial(2, 3, 3)
        with pytest.raises(ShapeError):
            MixerParams(p.ch, p.cw, p.refine, p.fuse, Variant.COMPLEX_GAIN)

    def test_untied_needs_spatial_size(self):
        with pytest.raises(ShapeError):
            MixerParams.initial(2, 3, 3, Variant.UNTIED_BASIS)

    def test_untied_tables_sized_to_input(self):
        p = MixerParams.initial(2, 3, 3, Variant.UNTIED_BASIS, height=6, width=6)
        with pytest.raises(ShapeError):
            spectral_core(np.zeros((8, 6, 2)), p)

    def test_untied_identity_shapes(self):
        params = UntiedParams.identity(7, 3, Axis.HEIGHT)
        assert params.thetas.shape == (4, 3)
        assert params.gamma.shape == (4, 3)


class TestWrapper:
    def test_gelu_values(self):
        assert gelu(np.array(0.0)) == 0.0
        assert gelu(np.array(10.0)) == pytest.approx(10.0, abs=1e-12)

    def test_identity_kernel(self, rng):
        x = rng.standard_normal((4, 5, 2))
        np.testing.assert_allclose(local_refine(x, RefineWeights.identity(2)), gelu(x), atol=1e-14)

    def test_single_pixel_only_center(self, rng):
        kernel = rng.standard_normal((3, 3, 2))
        x = rng.standard_normal((1, 1, 2))
        out = local_refine(x, RefineWeights(kernel, np.zeros(2)))
        np.testing.assert_allclose(out[0, 0], gelu(kernel[1, 1] * x[0, 0]), atol=1e-14)

    def test_zero_padding_correlation(self, rng):
        kernel = rng.standard_normal((3, 3, 1))
        x = rng.standard_normal((4, 4, 1))
        padded = np.pad(x[:, :, 0], 1)
        expected = np.zeros((4, 4))
        for i in range(4):
            for j in range(4):
                expected[i, j] = np.sum(padded[i:i + 3, j:j + 3] * kernel[:, :, 0])
        out = local_refine(x, RefineWeights(kernel, np.zeros(1)))
        np.testing.assert_allclose(out[:, :, 0], gelu(expected), atol=1e-12)

    def test_fuse(self, rng):
        x = rng.standard_normal((3, 3, 2))
        np.testing.assert_array_equal(fuse(x, FuseWeights(np.eye(2), np.zeros(2))), x)
        bias = np.array([0.5, -1.0])
        np.testing.assert_array_equal(fuse(x, FuseWeights(np.zeros((2, 2)), bias)),
                                      np.broadcast_to(bias, x.shape))
        weight = rng.standard_normal((2, 2))
        out = fuse(x, FuseWeights(weight, bias))
        for i in range(3):
            for j in range(3):
                np.testing.assert_allclose(out[i, j], weight @ x[i, j] + bias, atol=1e-14)


def _operators(resolved):
    k, c = resolved.lam.shape
    u = np.broadcast_to(resolved.u, (k, c, c))
    return np.einsum('kij,kj,klj->kil', u, resolved.lam, u)


class TestForwardReference:
    @pytest.mark.parametrize('variant', list(Variant))
    def test_random_block_six_by_six(self, rng, variant):
        p = MixerParams.random(4, 3, 3, rng, variant, height=6, width=6)
        x = rng.standard_normal((6, 6, 4))

        m_ch = _operators(resolve_axis(p.ch, variant, 6))
        spec = np.fft.rfft(x, axis=0)
        after_ch = np.fft.irfft(np.einsum('kil,kwl->kwi', m_ch, spec), n=6, axis=0)

        m_cw = _operators(resolve_axis(p.cw, variant, 6))
        spec = np.fft.rfft(after_ch, axis=1)
        core = np.fft.irfft(np.einsum('kil,hkl->hki', m_cw, spec), n=6, axis=1)

        padded = np.pad(core, ((1, 1), (1, 1), (0, 0)))
        pre = np.zeros_like(core)
        for a in range(3):
            for b in range(3):
                pre += padded[a:a + 6, b:b + 6, :] * p.refine.kernel[a, b, :]
        pre += p.refine.bias
        refined = 0.5 * pre * (1.0 + erf(pre / math.sqrt(2.0)))

        fused = np.einsum('oi,hwi->hwo', p.fuse.weight, refined) + p.fuse.bias
        np.testing.assert_allclose(mixer_forward(x, p), x + fused, atol=1e-10)


class TestAccounting:
    def test_default_core_count(self):
        p = MixerParams.initial(8, 9, 9)
        assert core_parameter_count(p) == 8 * 7 + (9 + 9) * 8
        assert wrapper_parameter_count(p) == 9 * 8 + 8 + 64 + 8

    def test_variant_counts(self):
        assert core_parameter_count(MixerParams.initial(4, 5, 3, Variant.IDENTITY_BASIS)) == 8 * 4
        assert core_parameter_count(MixerParams.initial(4, 5, 3, Variant.COMPLEX_GAIN)) == 12 + 2 * 8 * 4
        untied = MixerParams.initial(4, 5, 3, Variant.UNTIED_BASIS, height=8, width=6)
        assert core_parameter_count(untied) == (5 + 4) * (6 + 4)

    def test_named_array_order(self):
        names = [n for n, _ in MixerParams.initial(3, 2, 2, Variant.COMPLEX_GAIN).named_arrays()]
        assert names == ['ch.theta', 'ch.gamma', 'ch.phase', 'cw.theta', 'cw.gamma', 'cw.phase',
                         'refine.kernel', 'refine.bias', 'fuse.weight', 'fuse.bias']

    def test_core_cost(self):
        single = core_cost(16, 16, 4, AxisMode.CH_ONLY)
        both = core_cost(16, 16, 4, AxisMode.CH_THEN_CW)
        assert both['total'] == pytest.approx(2 * single['total'])
        assert single['mixing'] == 16 * 9 * 16
        assert single['basis'] == 64

    def test_random_is_generic(self, rng):
        p = MixerParams.random(3, 2, 2, rng)
        assert not np.allclose(p.ch.skew.theta, 0)
        assert isinstance(p.ch.skew, SkewParams)
