"""Chromatic dispersion, polarization rotation, OSNR loading and phase noise."""

import numpy as np
import pytest

from shcsim import (
    ChannelConfig,
    ComplexWaveform,
    DualPolWaveform,
    apply_cd,
    apply_channel,
    cd_delay_spread_s,
    measured_osnr_db,
    rotation_matrix,
)
from shcsim.channel import wiener_phase


def random_wave(rng, n=4096, fs=100e9):
    return ComplexWaveform(rng.standard_normal(n) + 1j * rng.standard_normal(n), fs)


class TestApplyCd:
    def test_zero_length_is_identity(self, rng):
        w = random_wave(rng)
        out = apply_cd(w, 0.0)
        assert np.array_equal(out.samples, w.samples)

    def test_energy_preserved(self, rng):
        w = random_wave(rng)
        out = apply_cd(w, 80.0)
        assert abs(out.power - w.power) / w.power < 1e-10

    def test_inverse_cancels(self, rng):
        w = random_wave(rng)
        back = apply_cd(apply_cd(w, 80.0), -80.0)
        rel = np.max(np.abs(back.samples - w.samples)) / np.max(np.abs(w.samples))
        assert rel < 1e-9

    def test_delay_spread_formula(self):
        # 80 km, D = 17, 55 GHz-wide signal: ~0.6 ns, about 30 symbols at 50 GBd.
        spread = cd_delay_spread_s(80.0, 17.0, 1550.0, 55e9)
        assert spread == pytest.approx(0.6e-9, rel=0.02)
        assert spread * 50e9 == pytest.approx(30.0, rel=0.02)


class TestRotationMatrix:
    def test_identity_and_swap(self):
        assert np.allclose(rotation_matrix(0, 0), np.eye(2))
        r = rotation_matrix(90, 0)
        assert abs(abs(r[0, 1]) - 1) < 1e-12
        assert abs(abs(r[1, 0]) - 1) < 1e-12
        assert abs(r[0, 0]) < 1e-12 and abs(r[1, 1]) < 1e-12

    @pytest.mark.parametrize("seed", range(8))
    def test_unitary_and_unit_determinant(self, seed):
        rng = np.random.default_rng(seed)
        az, el = rng.uniform(-90, 90, size=2)
        r = rotation_matrix(az, el)
        assert np.max(np.abs(r @ r.conj().T - np.eye(2))) < 1e-12
        assert abs(abs(np.linalg.det(r)) - 1.0) < 1e-12

    def test_composition_stays_unitary(self):
        r = rotation_matrix(30, 40) @ rotation_matrix(-60, 10)
        assert np.max(np.abs(r @ r.conj().T - np.eye(2))) < 1e-12

    def test_angle_range_enforced(self):
        with pytest.raises(ValueError):
            rotation_matrix(91, 0)


class TestWienerPhase:
    def test_increment_scale(self):
        # 100 kHz at 100 GSa/s: per-sample increment std ~ 2.5e-3 rad.
        rng = np.random.default_rng(0)
        theta = wiener_phase(1 << 20, 100e3, 100e9, rng)
        inc = np.diff(theta)
        assert np.std(inc) == pytest.approx(np.sqrt(2 * np.pi * 1e5 / 1e11), rel=0.01)

    def test_increments_uncorrelated(self):
        rng = np.random.default_rng(1)
        theta = wiener_phase(1 << 20, 100e3, 100e9, rng)
        inc = np.diff(theta)
        inc = inc - inc.mean()
        for lag in (1, 2, 5):
            rho = np.mean(inc[:-lag] * inc[lag:]) / np.var(inc)
            assert abs(rho) < 0.02


class TestApplyChannel:
    def make_signal(self, rng, n=1 << 14):
        x = random_wave(rng, n)
        y = random_wave(rng, n)
        return DualPolWaveform(x, y)

    def test_transparent_configuration(self, rng):
        sig = self.make_signal(rng)
        lo_carrier = ComplexWaveform(np.ones(len(sig)), sig.sample_rate)
        cfg = ChannelConfig(osnr_db="off", linewidth_hz=0.0)
        out, lo = apply_channel(sig, lo_carrier, cfg, rng_seed=0)
        assert np.array_equal(out.x.samples, sig.x.samples)
        assert np.array_equal(out.y.samples, sig.y.samples)
        assert np.allclose(lo.jones, [1.0, 0.0])
        assert not np.any(lo.phase)

    @pytest.mark.parametrize("osnr", (15.0, 20.0, 26.0, 33.0, 40.0))
    def test_osnr_calibration(self, rng, osnr):
        sig = self.make_signal(rng, n=1 << 16)
        lo_carrier = ComplexWaveform(np.ones(len(sig)), sig.sample_rate)
        cfg = ChannelConfig(osnr_db=osnr)
        out, _ = apply_channel(sig, lo_carrier, cfg, rng_seed=42)
        assert measured_osnr_db(sig, out) == pytest.approx(osnr, abs=0.2)

    def test_lo_state_follows_rotation(self, rng):
        sig = self.make_signal(rng, n=2048)
        lo_carrier = ComplexWaveform(np.ones(len(sig)), sig.sample_rate)
        cfg = ChannelConfig(azimuth_deg=35.0, elevation_deg=-20.0, osnr_db="off")
        _, lo = apply_channel(sig, lo_carrier, cfg, rng_seed=0)
        expect = rotation_matrix(35.0, -20.0) @ np.array([1.0, 0.0])
        assert np.allclose(lo.jones, expect)

    def test_rate_mismatch_rejected(self, rng):
        sig = self.make_signal(rng, n=512)
        bad = ComplexWaveform(np.ones(512), sig.sample_rate * 2)
        with pytest.raises(ValueError):
            apply_channel(sig, bad, ChannelConfig(), rng_seed=0)

    def test_seed_reproducible(self, rng):
        sig = self.make_signal(rng, n=2048)
        lo_carrier = ComplexWaveform(np.ones(len(sig)), sig.sample_rate)
        cfg = ChannelConfig(osnr_db=20.0, linewidth_hz=100e3)
        a, la = apply_channel(sig, lo_carrier, cfg, rng_seed=9)
        b, lb = apply_channel(sig, lo_carrier, cfg, rng_seed=9)
        assert np.array_equal(a.x.samples, b.x.samples)
        assert np.array_equal(la.phase, lb.phase)


def test_channel_config_validation():
    with pytest.raises(ValueError):
        ChannelConfig(fiber_km=-1)
    with pytest.raises(ValueError):
        ChannelConfig(azimuth_deg=120)
    with pytest.raises(ValueError):
        ChannelConfig(linewidth_hz=-5)
