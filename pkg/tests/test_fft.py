import numpy as np
import pytest

from spectral import conf
from spectral.exceptions import ShapeError, SizeCapError, SpectralResidueError
from spectral.fft import (
    Axis, HalfSpectrum, bin_weights, half_spectrum_inner, irfft_axis, irfft_vjp, naive_dft_axis,
    naive_idft_axis, rfft_adjoint, rfft_axis, rfft_lines, rfft_vjp,
)


def line(values):
    """A length-n line laid out along the height axis of an n x 1 x 1 map."""
    return np.asarray(values, dtype=float).reshape(-1, 1, 1)


class TestForward:
    def test_constant_line_has_only_dc(self):
        s = rfft_axis(line([2.5] * 4), Axis.HEIGHT)
        assert s.data[0, 0, 0] == pytest.approx(10.0)
        np.testing.assert_allclose(s.data[1:, 0, 0], 0.0, atol=1e-15)

    def test_impulse_has_flat_spectrum(self):
        s = rfft_axis(line([1, 0, 0, 0]), 'Height')
        np.testing.assert_allclose(s.data[:, 0, 0], np.ones(3), atol=1e-15)

    def test_shifted_impulse(self):
        s = naive_dft_axis(line([0, 1, 0, 0]), Axis.HEIGHT)
        np.testing.assert_allclose(s.data[:, 0, 0], [1, -1j, -1], atol=1e-15)

    def test_length_one_axis(self):
        s = rfft_axis(line([3.0]), Axis.HEIGHT)
        assert s.retained == 1
        assert s.data[0, 0, 0] == pytest.approx(3.0)

    @pytest.mark.parametrize('axis', ['Height', 'Width'])
    def test_matches_naive_dft(self, rng, axis):
        for _ in range(20):
            x = rng.standard_normal((8, 7, 3))
            fast = rfft_axis(x, axis)
            slow = naive_dft_axis(x, axis)
            scale = np.max(np.abs(slow.data))
            assert np.max(np.abs(fast.data - slow.data)) / scale < 1e-12

    def test_width_axis_layout(self, rng):
        x = rng.standard_normal((5, 7, 2))
        s = rfft_axis(x, Axis.WIDTH)
        assert s.data.shape == (4, 5, 2)
        assert s.original_len == 7

    def test_rejects_non_three_dimensional(self):
        with pytest.raises(ShapeError):
            rfft_axis(np.zeros((4, 4)), Axis.HEIGHT)


class TestInverse:
    @pytest.mark.parametrize('axis', [Axis.HEIGHT, Axis.WIDTH])
    def test_roundtrip(self, rng, axis):
        x = rng.standard_normal((5, 7, 3))
        n = x.shape[axis.dim]
        np.testing.assert_allclose(irfft_axis(rfft_axis(x, axis), n), x, atol=1e-12)

    def test_dc_only_gives_ones(self):
        data = np.zeros((3, 1, 1), dtype=complex)
        data[0] = 4.0
        out = irfft_axis(HalfSpectrum(data, Axis.HEIGHT, 4), 4)
        np.testing.assert_allclose(out[:, 0, 0], np.ones(4), atol=1e-15)

    @pytest.mark.parametrize('n', [6, 7])
    def test_matches_naive_inverse(self, rng, n):
        k = n // 2 + 1
        data = rng.standard_normal((k, 3, 2)) + 1j * rng.standard_normal((k, 3, 2))
        data[0] = data[0].real
        if n % 2 == 0:
            data[-1] = data[-1].real
        s = HalfSpectrum(data, Axis.HEIGHT, n)
        np.testing.assert_allclose(irfft_axis(s, n), naive_idft_axis(s, n), atol=1e-12)

    def test_target_length_must_match_bins(self):
        s = rfft_axis(np.ones((6, 2, 1)), Axis.HEIGHT)
        with pytest.raises(ShapeError):
            irfft_axis(s, 9)

    def test_verify_mode_rejects_residue(self):
        data = np.zeros((3, 1, 1), dtype=complex)
        data[0] = 1.0 + 0.5j
        previous = conf.VERIFY_FFT
        conf.set_verify_fft(True)
        try:
            with pytest.raises(SpectralResidueError):
                irfft_axis(HalfSpectrum(data, Axis.HEIGHT, 4), 4)
        finally:
            conf.set_verify_fft(previous)


class TestAdjoint:
    def test_bin_weights(self):
        np.testing.assert_array_equal(bin_weights(6), [1, 2, 2, 1])
        np.testing.assert_array_equal(bin_weights(7), [1, 2, 2, 2])

    @pytest.mark.parametrize('n', [1, 2, 5, 8])
    def test_weighted_inner_product(self, rng, n):
        x = rng.standard_normal((n, 3, 2))
        k = n // 2 + 1
        y = rng.standard_normal((k, 3, 2)) + 1j * rng.standard_normal((k, 3, 2))
        lhs = half_spectrum_inner(rfft_lines(x, 0), y, n, 0)
        rhs = float(np.sum(x * rfft_adjoint(y, n, 0)))
        assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)

    def test_vjps_against_finite_differences(self, rng):
        n = 6
        x = rng.standard_normal((n, 2, 1))
        g = rng.standard_normal((4, 2, 1)) + 1j * rng.standard_normal((4, 2, 1))

        def loss(v):
            s = np.fft.rfft(v, axis=0)
            return float(np.sum(g.real * s.real + g.imag * s.imag))

        numeric = np.zeros_like(x)
        for idx in np.ndindex(x.shape):
            e = np.zeros_like(x)
            e[idx] = 1e-6
            numeric[idx] = (loss(x + e) - loss(x - e)) / 2e-6
        np.testing.assert_allclose(rfft_vjp(g, n, 0), numeric, atol=1e-7)

        spectrum = np.fft.rfft(x, axis=0)
        upstream = rng.standard_normal(x.shape)
        grad = irfft_vjp(upstream, n, 0)
        # d/d(spectrum) of <upstream, irfft(spectrum)> in the (dRe, dIm) convention
        numeric = np.zeros_like(spectrum)
        for idx in np.ndindex(spectrum.shape):
            for part, unit in ((1.0, 1.0), (1j, 1j)):
                e = np.zeros_like(spectrum)
                e[idx] = 1e-6 * unit
                plus = np.sum(upstream * np.fft.irfft(spectrum + e, n=n, axis=0))
                minus = np.sum(upstream * np.fft.irfft(spectrum - e, n=n, axis=0))
                numeric[idx] += part * (plus - minus) / 2e-6
        np.testing.assert_allclose(grad, numeric, atol=1e-7)


class TestNaiveCap:
    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            naive_dft_axis(np.zeros((65, 1, 1)), Axis.HEIGHT)
