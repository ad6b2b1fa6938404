"""Shared fixtures and small oracles for the test suite."""

import numpy as np
import pytest

from shcsim import (
    ChannelConfig,
    ComplexWaveform,
    EqualizerConfig,
    SubcarrierPlan,
    apply_channel,
    build_dscm_tx,
    coherent_detect,
    make_constellation,
    prbs,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def build_tx(modulation=16, n_sc=4, n_symbols=4096, seed=7, total_baud=50e9,
             beta=0.1, coding="alamouti", rrc_span=64):
    """Small deterministic transmission for loopback-style tests."""
    plan = SubcarrierPlan(n_sc=n_sc, total_baud=total_baud, beta=beta)
    const = make_constellation(modulation)
    k = const.bits_per_symbol
    bits = [prbs(n_symbols * k, seed=seed + s) for s in range(n_sc)]
    return build_dscm_tx(bits, const, plan, sps_out=2, rrc_span=rrc_span,
                         coding=coding)


def run_channel(tx, seed=1, **channel_kwargs):
    """Apply the channel and detect; returns the single detected waveform."""
    defaults = dict(osnr_db="off", linewidth_hz=0.0)
    defaults.update(channel_kwargs)
    cfg = ChannelConfig(**defaults)
    lo_carrier = ComplexWaveform(
        np.ones(len(tx.signal), dtype=np.complex128), tx.signal.sample_rate
    )
    sig, lo = apply_channel(tx.signal, lo_carrier, cfg, rng_seed=seed)
    return coherent_detect(sig, lo)


def quick_eq(n_taps=5, mu=3e-3, n_train=100000):
    return EqualizerConfig(n_taps=n_taps, mu=mu, mu_p=5e-2, n_train=n_train)


def spectrum_bandwidth(w, drop_db=20.0, nfft=None):
    """Occupied bandwidth where the periodogram stays within drop_db of its
    in-band median; simple oracle for shaping tests."""
    x = w.samples
    n = nfft or min(len(x), 1 << 16)
    spec = np.fft.fftshift(np.abs(np.fft.fft(x[:n])) ** 2)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / w.sample_rate))
    ref = np.median(spec[spec > spec.max() * 1e-6])
    mask = spec > ref * 10 ** (-drop_db / 10.0)
    idx = np.flatnonzero(mask)
    return freqs[idx[-1]] - freqs[idx[0]]
