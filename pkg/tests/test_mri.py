import logging

import numpy as np
import pytest

from analysis.metrics import psnr
from mri.masks import (
    MaskKind, center_block, line_budget, make_mask, make_random_mask, make_structured_mask,
)
from mri.operators import (
    adjoint_multi, adjoint_single, channels_to_complex, complex_to_channels, fft2c, forward_multi,
    forward_single, ifft2c, normal_multi, normal_single, zero_filled_recon,
)
from mri.phantom import make_coils, make_phantom
from spectral.exceptions import ShapeError


def _complex(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestMasks:
    def test_structured_r4(self):
        mask = make_structured_mask(64, 4)
        assert mask.popcount == 16
        assert mask.kind is MaskKind.STRUCTURED
        assert mask.center_fraction == pytest.approx(0.08)
        assert mask.selected[29:35].all()

    def test_structured_r8(self):
        mask = make_structured_mask(64, 8)
        assert mask.popcount == 8
        assert mask.selected[31:34].all()

    def test_center_block_is_contiguous(self):
        block = center_block(64, 0.08, 16)
        np.testing.assert_array_equal(block, np.arange(29, 35))

    def test_center_clipped_to_budget_warns(self, caplog, monkeypatch):
        monkeypatch.setattr(logging.getLogger('mri'), 'propagate', True)
        with caplog.at_level(logging.WARNING, logger='mri.masks'):
            mask = make_structured_mask(8, 8, center_fraction=0.5)
        assert mask.popcount == 1
        assert mask.selected[4]
        assert 'exceeds the budget of 1' in caplog.text

    def test_center_within_budget_is_silent(self, caplog, monkeypatch):
        monkeypatch.setattr(logging.getLogger('mri'), 'propagate', True)
        with caplog.at_level(logging.WARNING, logger='mri.masks'):
            make_structured_mask(64, 4)
        assert not caplog.records

    def test_structured_deterministic(self):
        np.testing.assert_array_equal(make_structured_mask(48, 4, seed=1).selected,
                                      make_structured_mask(48, 4, seed=2).selected)

    def test_acceleration_one_selects_all(self):
        assert make_structured_mask(20, 1).selected.all()
        assert make_random_mask(20, 1, seed=3).selected.all()

    def test_acceleration_equal_to_lines(self):
        assert make_structured_mask(16, 16).popcount == 1
        assert make_random_mask(16, 16).popcount == 1

    @pytest.mark.parametrize('lines,accel', [(64, 4), (64, 8), (37, 3), (10, 4)])
    def test_random_budget_matches_structured(self, lines, accel):
        assert make_random_mask(lines, accel, seed=5).popcount == make_structured_mask(lines, accel).popcount
        assert line_budget(lines, accel) == make_structured_mask(lines, accel).popcount

    def test_random_seeds_differ(self):
        patterns = {make_random_mask(64, 4, seed=s).selected.tobytes() for s in range(20)}
        assert len(patterns) > 1

    def test_random_same_seed_same_mask(self):
        np.testing.assert_array_equal(make_random_mask(64, 4, seed=9).selected,
                                      make_random_mask(64, 4, seed=9).selected)

    def test_random_keep_center(self):
        mask = make_random_mask(64, 4, seed=0, keep_center=True)
        assert mask.selected[29:35].all()
        assert mask.popcount == 16
        assert make_random_mask(64, 4, seed=0).center_fraction == 0.0

    def test_make_mask_by_name(self):
        assert make_mask('random', 32, 4, seed=1).kind is MaskKind.RANDOM
        assert make_mask('structured', 32, 4).kind is MaskKind.STRUCTURED

    def test_invalid_acceleration(self):
        with pytest.raises(ShapeError):
            make_structured_mask(32, 0.5)

    def test_as_image(self):
        mask = make_structured_mask(8, 2)
        image = mask.as_image(5)
        assert image.shape == (5, 8)
        assert (image == mask.selected[None, :]).all()


class TestSingleCoil:
    def test_fft_is_unitary(self, rng):
        x = _complex(rng, (6, 8))
        np.testing.assert_allclose(ifft2c(fft2c(x)), x, atol=1e-12)
        assert np.linalg.norm(fft2c(x)) == pytest.approx(np.linalg.norm(x))

    def test_adjointness(self, rng):
        mask = make_random_mask(12, 3, seed=2)
        x = _complex(rng, (10, 12))
        y = _complex(rng, (10, 12))
        lhs = np.vdot(forward_single(x, mask), y)
        rhs = np.vdot(x, adjoint_single(y, mask))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_normal_is_hermitian_psd(self, rng):
        mask = make_structured_mask(8, 2)
        x = _complex(rng, (6, 8))
        y = _complex(rng, (6, 8))
        assert np.vdot(x, normal_single(y, mask)) == pytest.approx(np.vdot(normal_single(x, mask), y))
        assert np.vdot(x, normal_single(x, mask)).real >= -1e-12

    def test_full_mask_is_identity(self, rng):
        mask = make_structured_mask(8, 1)
        x = _complex(rng, (6, 8))
        np.testing.assert_allclose(normal_single(x, mask), x, atol=1e-12)
        np.testing.assert_allclose(zero_filled_recon(fft2c(x), mask), x, atol=1e-12)

    def test_width_mismatch(self, rng):
        with pytest.raises(ShapeError):
            forward_single(_complex(rng, (6, 8)), make_structured_mask(10, 2))

    def test_zero_filled_quality(self):
        phantom = make_phantom(32, 32, seed=4)
        mask = make_structured_mask(32, 4)
        recon = zero_filled_recon(fft2c(phantom.image), mask)
        value = psnr(phantom.magnitude, np.abs(recon))
        assert np.isfinite(value)
        assert value > 10.0

    def test_channel_roundtrip(self, rng):
        image = _complex(rng, (5, 4))
        channels = complex_to_channels(image)
        assert channels.shape == (5, 4, 2)
        np.testing.assert_array_equal(channels_to_complex(channels), image)


class TestMultiCoil:
    def test_coil_normalization(self):
        coils = make_coils(12, 10, 4)
        np.testing.assert_allclose(np.sum(np.abs(coils.maps) ** 2, axis=0), 1.0, atol=1e-12)

    def test_adjointness(self, rng):
        coils = make_coils(8, 10, 3)
        mask = make_random_mask(10, 2, seed=1)
        x = _complex(rng, (8, 10))
        y = _complex(rng, (3, 8, 10))
        lhs = np.vdot(forward_multi(x, mask, coils), y)
        rhs = np.vdot(x, adjoint_multi(y, mask, coils))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))

    def test_single_coil_matches(self, rng):
        coils = make_coils(6, 8, 1)
        mask = make_structured_mask(8, 2)
        x = _complex(rng, (6, 8))
        np.testing.assert_allclose(normal_multi(x, mask, coils), normal_single(x, mask), atol=1e-12)

    def test_full_mask_identity(self, rng):
        coils = make_coils(6, 8, 4)
        x = _complex(rng, (6, 8))
        np.testing.assert_allclose(normal_multi(x, make_structured_mask(8, 1), coils), x, atol=1e-12)

    def test_coil_shape_mismatch(self, rng):
        with pytest.raises(ShapeError):
            forward_multi(_complex(rng, (6, 8)), make_structured_mask(8, 2), make_coils(6, 6, 2))


class TestPhantom:
    def test_deterministic(self):
        np.testing.assert_array_equal(make_phantom(16, 16, seed=3).image, make_phantom(16, 16, seed=3).image)

    def test_seeds_differ(self):
        assert not np.array_equal(make_phantom(16, 16, seed=3).image, make_phantom(16, 16, seed=4).image)

    def test_magnitude_range(self):
        magnitude = make_phantom(24, 20, seed=0).magnitude
        assert magnitude.shape == (24, 20)
        assert magnitude.min() >= 0.0
        assert magnitude.max() <= 1.0 + 1e-12

    def test_no_ellipses_is_empty(self):
        assert not np.any(make_phantom(8, 8, seed=0, n_ellipses=0).magnitude)

    def test_invalid_size(self):
        with pytest.raises(ShapeError):
            make_phantom(0, 8, seed=0)
