import numpy as np
import pytest

from mrls.channel import (
    PhaseNoiseModel,
    RfConstants,
    SPEED_OF_LIGHT,
    element_gain,
    psd_to_variance,
    sample_phase_noise,
    transfer_matrix,
)
from mrls.errors import GeometryError, InvalidArgumentError
from mrls.geometry import build_upa

LAMBDA = 0.01
F_CM = SPEED_OF_LIGHT / LAMBDA  # carrier with an exactly 1 cm wavelength
G_PI_DBI = 10 * np.log10(np.pi)  # linear boresight gain of exactly pi


def pair(l_m, constants=None):
    c = constants or RfConstants.from_frequency(F_CM, G_PI_DBI)
    bs = build_upa(1, 1, 0.005, center=(0, 0, 0), boresight=(0, 0, 1))
    mt = build_upa(1, 1, 0.005, center=(0, 0, l_m), boresight=(0, 0, -1))
    return bs, mt, c


class TestRfConstants:
    def test_table_defaults(self):
        c = RfConstants.from_frequency(30.0e9, 4.97)
        assert abs(c.wavelength - 0.009993) < 1e-5
        assert abs(c.max_gain - 3.1405) < 5e-4

    def test_inconsistent_wavelength_rejected(self):
        with pytest.raises(InvalidArgumentError):
            RfConstants(frequency=30e9, wavelength=0.02, wavenumber=2 * np.pi / 0.02, max_gain=3.14)

    def test_inconsistent_wavenumber_rejected(self):
        lam = SPEED_OF_LIGHT / 30e9
        with pytest.raises(InvalidArgumentError):
            RfConstants(frequency=30e9, wavelength=lam, wavenumber=1.0, max_gain=3.14)


class TestElementGain:
    def test_boresight_gain(self):
        c = RfConstants.from_frequency(30.0e9, 4.97)
        assert abs(element_gain(0.0, c) - 3.1405) < 5e-4

    def test_edge_on_is_zero(self):
        c = RfConstants.from_frequency(30.0e9, 4.97)
        assert element_gain(np.pi / 2, c) == 0.0
        assert element_gain(2.0, c) == 0.0

    def test_sixty_degrees_is_half(self):
        c = RfConstants.from_frequency(30.0e9, 4.97)
        assert abs(element_gain(np.radians(60), c) - 0.5 * c.max_gain) < 1e-12


class TestTransferMatrix:
    def test_single_link_friis_value(self):
        bs, mt, c = pair(1.0)
        h = transfer_matrix(bs, mt, c).entries[0, 0]
        # |h|^2 = G^2 lambda^2 / (16 pi^2 l^2) with G = pi at both ends
        assert abs(abs(h) ** 2 - 6.25e-6) < 1e-12
        assert abs(h / abs(h) - np.exp(1j * c.wavenumber * 1.0)) < 1e-9

    def test_inverse_square_law(self):
        bs1, mt1, c = pair(1.0)
        bs2, mt2, _ = pair(2.0)
        p1 = abs(transfer_matrix(bs1, mt1, c).entries[0, 0]) ** 2
        p2 = abs(transfer_matrix(bs2, mt2, c).entries[0, 0]) ** 2
        assert abs(p2 - p1 / 4) < 1e-15

    def test_reciprocity(self):
        c = RfConstants.from_frequency(30e9, 4.97)
        bs = build_upa(3, 2, 0.005, center=(0, 0, 0), boresight=(0, 0, 1))
        mt = build_upa(2, 2, 0.005, center=(0.3, 0.1, 1.5), boresight=(0, 0, -1))
        fwd = transfer_matrix(bs, mt, c).entries
        rev = transfer_matrix(mt, bs, c).entries
        np.testing.assert_array_equal(rev, fwd.T)

    def test_far_field_guard(self):
        bs, mt, c = pair(0.05)  # 5 wavelengths < 10-wavelength guard
        with pytest.raises(GeometryError):
            transfer_matrix(bs, mt, c)

    def test_friis_consistency_per_entry(self):
        c = RfConstants.from_frequency(30e9, 4.97)
        bs = build_upa(2, 3, 0.005, center=(0, 0, 0), boresight=(0, 0, 1))
        mt = build_upa(2, 2, 0.005, center=(0.5, -0.2, 2.0), boresight=(0, 0, -1))
        h = transfer_matrix(bs, mt, c).entries
        diff = mt.element_positions[:, None, :] - bs.element_positions[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        unit = diff / dist[..., None]
        g_bs = c.max_gain * np.clip(unit @ bs.boresight, 0, None)
        g_mt = c.max_gain * np.clip(-(unit @ mt.boresight), 0, None)
        expected = g_bs * g_mt * c.wavelength**2 / (16 * np.pi**2 * dist**2)
        np.testing.assert_allclose(np.abs(h) ** 2, expected, rtol=1e-10)

    def test_forward_reverse_products(self):
        bs, mt, c = pair(1.0)
        cm = transfer_matrix(bs, mt, c)
        a = np.array([2.0 + 1.0j])
        np.testing.assert_allclose(cm.forward(a), cm.entries @ a)
        np.testing.assert_allclose(cm.reverse(a), cm.entries.T @ a)


class TestPhaseNoise:
    def test_flat_psd_integration(self):
        v = psd_to_variance([(1e3, 1e5, -60.0)])
        assert abs(v - 0.198) < 1e-12

    def test_two_segment_psd(self):
        v = psd_to_variance([(1e3, 1e4, -60.0), (1e4, 1e5, -80.0)])
        assert abs(v - 0.0198) < 1e-12

    def test_empty_band_rejected(self):
        with pytest.raises(InvalidArgumentError):
            psd_to_variance([])
        with pytest.raises(InvalidArgumentError):
            psd_to_variance([(1e4, 1e3, -60.0)])

    def test_model_psd_consistency(self):
        m = PhaseNoiseModel.from_psd([(1e3, 1e5, -60.0)])
        assert abs(m.variance - 0.198) < 1e-12
        with pytest.raises(InvalidArgumentError):
            PhaseNoiseModel(variance=0.5, psd_segments=((1e3, 1e5, -60.0),))

    def test_negative_variance_rejected(self):
        with pytest.raises(InvalidArgumentError):
            PhaseNoiseModel(variance=-0.1)

    def test_zero_variance_samples(self):
        m = PhaseNoiseModel(variance=0.0)
        s = sample_phase_noise(m, 100, np.random.default_rng(0))
        np.testing.assert_array_equal(s, np.zeros(100))

    def test_determinism(self):
        m = PhaseNoiseModel(variance=0.3162)
        a = sample_phase_noise(m, 1000, np.random.default_rng(42))
        b = sample_phase_noise(m, 1000, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_sample_moments(self):
        m = PhaseNoiseModel(variance=0.3162)
        s = sample_phase_noise(m, 200_000, np.random.default_rng(1))
        assert abs(s.mean()) < 0.005
        assert 0.30 < s.var() < 0.33
