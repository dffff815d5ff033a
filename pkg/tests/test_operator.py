import numpy as np
import pytest
from scipy.linalg import expm, expm_frechet

from spectral.exceptions import NonFiniteError, ShapeError
from spectral.operator import (
    AxisOperatorParams, GainMode, GainTable, SkewParams, apply_operator, basis_from_params,
    build_skew, dense_operator, expm_frechet_block, identity_gain_raw, interpolate_gains,
    matrix_exp, reindex_gains, skew_generators, softplus,
)


class TestSkew:
    def test_two_channels(self):
        np.testing.assert_array_equal(build_skew(SkewParams([0.3], 2)), [[0.0, -0.3], [0.3, 0.0]])

    def test_zero_theta(self):
        np.testing.assert_array_equal(build_skew(SkewParams.zeros(4)), np.zeros((4, 4)))

    def test_antisymmetric(self, rng):
        a = build_skew(SkewParams(rng.standard_normal(3), 3))
        np.testing.assert_array_equal(a + a.T, np.zeros((3, 3)))

    def test_generators_match_build(self, rng):
        theta = rng.standard_normal(6)
        gens = skew_generators(4)
        np.testing.assert_allclose(np.tensordot(theta, gens, axes=1), build_skew(SkewParams(theta, 4)))

    def test_wrong_size(self):
        with pytest.raises(ShapeError):
            SkewParams(np.zeros(4), 3)

    def test_non_finite(self):
        with pytest.raises(NonFiniteError):
            SkewParams([np.nan], 2)


class TestMatrixExp:
    def test_zero(self):
        np.testing.assert_array_equal(matrix_exp(np.zeros((3, 3))), np.eye(3))

    def test_rotation(self):
        t = 0.7
        expected = [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]
        np.testing.assert_allclose(matrix_exp(build_skew(SkewParams([t], 2))), expected, atol=1e-14)

    def test_against_scipy(self, rng):
        a = build_skew(SkewParams(rng.uniform(-2, 2, 15), 6))
        u = matrix_exp(a)
        np.testing.assert_allclose(u, expm(a), atol=1e-11)
        np.testing.assert_allclose(u.T @ u, np.eye(6), atol=1e-10)
        assert np.linalg.det(u) == pytest.approx(1.0, abs=1e-10)

    def test_general_matrix_and_stack(self, rng):
        stack = rng.standard_normal((3, 4, 4))
        out = matrix_exp(stack)
        for a, u in zip(stack, out):
            np.testing.assert_allclose(u, expm(a), rtol=1e-11, atol=1e-11)

    def test_frechet_against_scipy(self, rng):
        a = build_skew(SkewParams(rng.standard_normal(3), 3))
        e = rng.standard_normal((3, 3))
        np.testing.assert_allclose(expm_frechet_block(a, e), expm_frechet(a, e, compute_expm=False), atol=1e-12)

    @pytest.mark.parametrize('scale', [0.3, 6.0])
    def test_frechet_stack_matches_augmented_exponential(self, rng, scale):
        # Untied layout: one base per bin, every skew generator as a direction.
        bases = scale * rng.standard_normal((4, 1, 3, 3))
        directions = np.broadcast_to(skew_generators(3)[None], (4, 3, 3, 3))
        block = np.zeros((4, 3, 6, 6))
        block[..., :3, :3] = bases
        block[..., 3:, 3:] = bases
        block[..., :3, 3:] = directions
        expected = matrix_exp(block)[..., :3, 3:]
        out = expm_frechet_block(bases, skew_generators(3)[None])
        assert out.shape == (4, 3, 3, 3)
        np.testing.assert_allclose(out, expected, rtol=1e-11, atol=1e-11)

    def test_frechet_general_matrix(self, rng):
        a = rng.standard_normal((4, 4))
        e = rng.standard_normal((4, 4))
        np.testing.assert_allclose(expm_frechet_block(a, e), expm_frechet(a, e, compute_expm=False),
                                   rtol=1e-10, atol=1e-10)

    def test_frechet_rejects_mismatched_blocks(self):
        with pytest.raises(ShapeError):
            expm_frechet_block(np.zeros((3, 3)), np.zeros((2, 2)))

    def test_rejects_non_square(self):
        with pytest.raises(ShapeError):
            matrix_exp(np.zeros((2, 3)))


class TestBasis:
    def test_zero_params_identity(self):
        np.testing.assert_array_equal(basis_from_params(SkewParams.zeros(5)).u, np.eye(5))

    def test_random_bases_valid(self, rng):
        for _ in range(100):
            c = int(rng.integers(2, 7))
            basis = basis_from_params(SkewParams(rng.uniform(-3, 3, c * (c - 1) // 2), c))
            assert basis.is_valid()

    def test_negated_theta_is_transpose(self, rng):
        theta = rng.standard_normal(6)
        u = basis_from_params(SkewParams(theta, 4)).u
        v = basis_from_params(SkewParams(-theta, 4)).u
        np.testing.assert_allclose(v, u.T, atol=1e-12)


class TestGains:
    def test_direct_table_returned_exactly(self, rng):
        gamma = rng.standard_normal((5, 3))
        lam = interpolate_gains(GainTable(gamma), 5, GainMode.SIGNED).lam
        np.testing.assert_array_equal(lam, gamma)

    def test_zero_table_positive(self):
        lam = interpolate_gains(GainTable(np.zeros((4, 2))), 9).lam
        np.testing.assert_allclose(lam, np.log(2.0), atol=1e-15)

    def test_midpoint(self):
        gamma = np.array([[1.0, -2.0], [3.0, 4.0]])
        lam = interpolate_gains(GainTable(gamma), 3, GainMode.SIGNED).lam
        np.testing.assert_allclose(lam, [[1.0, -2.0], [2.0, 1.0], [3.0, 4.0]])

    def test_identity_raw(self):
        assert softplus(identity_gain_raw()) == pytest.approx(1.0, abs=1e-15)
        for k in (1, 4, 33):
            lam = interpolate_gains(GainTable(np.full((3, 2), identity_gain_raw())), k).lam
            np.testing.assert_allclose(lam, 1.0, atol=1e-15)

    def test_complex_phase_pinned_on_real_bins(self, rng):
        table = GainTable(rng.standard_normal((3, 2)), rng.standard_normal((3, 2)))
        lam = interpolate_gains(table, 5, GainMode.COMPLEX, signal_len=8).lam
        assert np.all(lam[0].imag == 0.0)
        assert np.all(lam[-1].imag == 0.0)
        assert np.any(lam[2].imag != 0.0)

    def test_softplus_stable(self):
        assert np.isfinite(softplus(np.array([800.0, -800.0]))).all()

    def test_direct_constructor(self):
        p = AxisOperatorParams.direct(8, 3)
        assert p.gains.bins == 5
        assert p.parameter_count() == 3 + 15


class TestOperator:
    def test_unit_gains_identity(self, rng):
        u = basis_from_params(SkewParams(rng.standard_normal(3), 3))
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        np.testing.assert_allclose(apply_operator(u, np.ones(3), v), v, atol=1e-14)

    def test_diagonal_action(self):
        np.testing.assert_allclose(apply_operator(np.eye(2), [2.0, 3.0], np.array([1.0, -1.0])), [2.0, -3.0])

    def test_matches_dense(self, rng):
        u = basis_from_params(SkewParams(rng.standard_normal(6), 4)).u
        lam = rng.uniform(0.1, 2.0, 4)
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        np.testing.assert_allclose(apply_operator(u, lam, v), dense_operator(u, lam) @ v, atol=1e-12)

    def test_dense_properties(self, rng):
        np.testing.assert_array_equal(dense_operator(np.eye(3), [1.0, 2.0, 3.0]), np.diag([1.0, 2.0, 3.0]))
        u = basis_from_params(SkewParams(rng.standard_normal(3), 3)).u
        lam = rng.uniform(0.2, 3.0, 3)
        m = dense_operator(u, lam)
        assert np.trace(m) == pytest.approx(lam.sum(), abs=1e-12)
        for _ in range(50):
            z = rng.standard_normal(3)
            z /= np.linalg.norm(z)
            assert z @ m @ z >= lam.min() - 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            apply_operator(np.eye(3), np.ones(2), np.ones(3))


class TestReindex:
    def test_identity_permutation(self, rng):
        table = rng.standard_normal((4, 3))
        np.testing.assert_array_equal(reindex_gains(table, np.arange(4)), table)

    def test_swap(self):
        table = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(reindex_gains(table, [1, 0]), table[::-1])

    def test_operator_identity_bit_for_bit(self, rng):
        u = basis_from_params(SkewParams(rng.standard_normal(6), 4)).u
        table = rng.uniform(0.5, 2.0, (5, 4))
        sigma = rng.permutation(5)
        moved = reindex_gains(table, sigma)
        for i in range(5):
            np.testing.assert_array_equal(dense_operator(u, moved[sigma[i]]), dense_operator(u, table[i]))

    def test_rejects_non_permutation(self):
        with pytest.raises(ShapeError):
            reindex_gains(np.zeros((3, 2)), [0, 0, 1])
