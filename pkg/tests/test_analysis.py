import itertools

import numpy as np
import pytest
from scipy.stats import ortho_group

from analysis.dof import dof_rank_check, expected_dof, random_point, signatures_generic
from analysis.metrics import MetricReport, evaluate_cases, gaussian_window, psnr, ssim
from analysis.oracle import dense_core_oracle, oracle_discrepancy
from analysis.svd import numerical_rank, svd_small
from spectral.exceptions import NonFiniteError, ShapeError, SizeCapError
from spectral.mixer import AxisMode, MixerParams, Variant, spectral_core


class TestSvd:
    def test_diagonal(self):
        np.testing.assert_allclose(svd_small(np.diag([3.0, -1.0, 2.0])), [3.0, 2.0, 1.0], atol=1e-14)

    def test_orthogonal_matrix(self):
        q = ortho_group.rvs(5, random_state=0)
        np.testing.assert_allclose(svd_small(q), np.ones(5), atol=1e-12)

    @pytest.mark.parametrize('shape', [(6, 4), (4, 6), (7, 7)])
    def test_matches_lapack(self, rng, shape):
        m = rng.standard_normal(shape)
        sv = svd_small(m)
        np.testing.assert_allclose(sv, np.linalg.svd(m, compute_uv=False), rtol=1e-12, atol=1e-13)
        assert np.sum(sv ** 2) == pytest.approx(np.sum(m ** 2))

    def test_rank_deficient(self, rng):
        m = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 5))
        assert numerical_rank(svd_small(m), 1e-10) == 2

    def test_zero_matrix(self):
        assert numerical_rank(svd_small(np.zeros((3, 3))), 1e-8) == 0

    def test_rejects_bad_input(self):
        with pytest.raises(ShapeError):
            svd_small(np.zeros(4))
        with pytest.raises(NonFiniteError):
            svd_small(np.array([[1.0, np.nan]]))


class TestOracle:
    def test_identity_at_init(self):
        params = MixerParams.initial(2, 2, 2, height=3, width=3)
        np.testing.assert_allclose(dense_core_oracle(params, 3, 3, 2), np.eye(18), atol=1e-12)

    @pytest.mark.parametrize('variant,mode', list(itertools.product(Variant, AxisMode)))
    def test_matches_fft_path(self, rng, variant, mode):
        params = MixerParams.random(2, 2, 3, rng, variant, mode, 4, 5)
        matrix = dense_core_oracle(params, 4, 5, 2)
        assert oracle_discrepancy(matrix, params, 4, 5, 2, trials=5) < 1e-10

    def test_column_is_impulse_response(self, rng):
        params = MixerParams.random(2, 2, 2, rng, height=3, width=4)
        matrix = dense_core_oracle(params, 3, 4, 2)
        impulse = np.zeros((3, 4, 2))
        impulse[1, 2, 0] = 1.0
        np.testing.assert_allclose(matrix[:, (1 * 4 + 2) * 2], spectral_core(impulse, params).reshape(-1),
                                   atol=1e-12)

    def test_ch_only_does_not_mix_columns(self, rng):
        params = MixerParams.random(2, 3, 3, rng, axis_mode=AxisMode.CH_ONLY, height=4, width=3)
        blocks = dense_core_oracle(params, 4, 3, 2).reshape(4, 3, 2, 4, 3, 2)
        for w_out in range(3):
            for w_in in range(3):
                if w_out != w_in:
                    assert not np.any(np.abs(blocks[:, w_out, :, :, w_in, :]) > 1e-12)

    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            dense_core_oracle(MixerParams.initial(3, 2, 2), 16, 16, 3)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            dense_core_oracle(MixerParams.initial(3, 2, 2), 3, 3, 2)


class TestDof:
    def test_expected_counts(self):
        assert expected_dof(2, 1) == 3
        assert expected_dof(3, 4) == 15
        assert expected_dof(8, 33) == 28 + 264

    def test_two_channels_one_bin(self, rng):
        report = dof_rank_check(*random_point(2, 1, rng))
        assert report.expected_rank == 3
        assert report.matches

    def test_three_channels_four_bins(self, rng):
        report = dof_rank_check(*random_point(3, 4, rng))
        assert report.generic
        assert report.measured_rank == 15

    def test_degenerate_signature_drops_rank(self, rng):
        theta, table = random_point(3, 4, rng, degenerate=True)
        report = dof_rank_check(theta, table)
        assert not report.generic
        assert report.measured_rank == 14

    def test_signatures_generic(self):
        assert signatures_generic(np.array([[1.0, 2.0], [1.0, 3.0]]))
        assert not signatures_generic(np.array([[1.0, 1.0], [2.0, 2.0]]))

    def test_theta_size_mismatch(self):
        with pytest.raises(ShapeError):
            dof_rank_check(np.zeros(2), np.ones((2, 3)))

    @pytest.mark.parametrize('channels,bins', list(itertools.product((2, 3, 4), (1, 2, 4))))
    def test_rank_grid(self, channels, bins):
        rng = np.random.default_rng([channels, bins])
        expected = expected_dof(channels, bins)
        for _ in range(20):
            report = dof_rank_check(*random_point(channels, bins, rng))
            assert report.generic
            assert report.measured_rank == expected
        for _ in range(3):
            report = dof_rank_check(*random_point(channels, bins, rng, degenerate=True))
            assert not report.generic
            assert report.measured_rank == expected - 1


class TestMetrics:
    def test_psnr_constant_offset(self):
        ref = np.zeros((8, 8))
        ref[0, 0] = 1.0
        assert psnr(ref, ref + 0.1) == pytest.approx(20.0)

    def test_identical_images(self, rng):
        image = rng.uniform(0, 1, (12, 12))
        assert psnr(image, image) == float('inf')
        assert ssim(image, image) == pytest.approx(1.0)

    def test_ssim_symmetric(self, rng):
        a = rng.uniform(0, 1, (10, 11))
        b = a + 0.05 * rng.standard_normal((10, 11))
        assert ssim(a, b, 1.0) == pytest.approx(ssim(b, a, 1.0))

    def test_ssim_matches_direct_summation(self, rng):
        a = rng.uniform(0, 1, (9, 10))
        b = np.clip(a + 0.1 * rng.standard_normal((9, 10)), 0, None)
        g = gaussian_window()
        c1, c2 = (0.01 * 1.0) ** 2, (0.03 * 1.0) ** 2
        values = []
        for i in range(3, 9 - 3):
            for j in range(3, 10 - 3):
                pa = a[i - 3:i + 4, j - 3:j + 4]
                pb = b[i - 3:i + 4, j - 3:j + 4]
                mu_a, mu_b = np.sum(g * pa), np.sum(g * pb)
                var_a = np.sum(g * pa * pa) - mu_a ** 2
                var_b = np.sum(g * pb * pb) - mu_b ** 2
                cov = np.sum(g * pa * pb) - mu_a * mu_b
                values.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                              / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
        assert ssim(a, b, 1.0) == pytest.approx(np.mean(values), abs=1e-10)

    def test_gaussian_window_normalized(self):
        window = gaussian_window()
        assert window.shape == (7, 7)
        assert window.sum() == pytest.approx(1.0)

    def test_too_small_for_ssim(self):
        with pytest.raises(ShapeError):
            ssim(np.ones((6, 8)), np.ones((6, 8)))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            psnr(np.ones((4, 4)), np.ones((4, 5)))

    def test_report_statistics(self, rng):
        refs = [rng.uniform(0, 1, (8, 8)) for _ in range(3)]
        tests = [r + 0.01 for r in refs]
        report = evaluate_cases(refs, tests)
        assert report.cases == 3
        assert report.psnr_mean == pytest.approx(np.mean(report.psnr))
        assert report.psnr_std == pytest.approx(np.std(report.psnr))
        assert len(report.data_ranges) == 3

    def test_empty_report(self):
        assert MetricReport().psnr_mean == 0.0
