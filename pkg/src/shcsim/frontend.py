"""Simplified polarization-insensitive coherent frontend.

The receiver is a 3 dB coupler, one 90-degree hybrid and two balanced
photodiodes: a single complex output that beats the incoming dual-polarization
field against one LO polarization state.  Photodiode responsivity, shot noise
and LO power scaling collapse into the optional electrical-SNR knob;
direct-detection beat terms cancel in ideal balanced detection and are
neglected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import ComplexWaveform, DualPolWaveform


@dataclass(frozen=True)
class LoState:
    """Local-oscillator polarization state and per-sample phase trajectory."""

    jones: np.ndarray
    phase: np.ndarray
    power_ratio_db: float = 0.0

    def __post_init__(self):
        jones = np.asarray(self.jones, dtype=np.complex128).ravel()
        if jones.size != 2:
            raise ValueError("jones must have exactly 2 components")
        norm = np.linalg.norm(jones)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"jones vector must be unit norm, got |u| = {norm}")
        object.__setattr__(self, "jones", jones)
        object.__setattr__(self, "phase", np.asarray(self.phase, dtype=np.float64).ravel())


def coherent_detect(sig: DualPolWaveform, lo: LoState) -> ComplexWaveform:
    """Single-output beat of the signal field against the LO polarization.

    output[n] = (conj(u_x) sig.x[n] + conj(u_y) sig.y[n]) * exp(j theta[n]).
    With u = R @ [1, 0] this is the received-signal model of the simplified
    receiver: one row of the channel matrix scaled by the common phase.
    """
    if lo.phase.size != len(sig):
        raise ValueError(
            f"phase trajectory length {lo.phase.size} != signal length {len(sig)}"
        )
    ux, uy = lo.jones
    beat = np.conj(ux) * sig.x.samples + np.conj(uy) * sig.y.samples
    out = beat * np.exp(1j * lo.phase)
    return ComplexWaveform(out, sig.sample_rate)


def add_receiver_noise(
    w: ComplexWaveform,
    snr_db: float | str,
    rng: np.random.Generator | None = None,
) -> ComplexWaveform:
    """Add complex AWGN at the stated electrical SNR; "off" is the identity."""
    if snr_db == "off":
        return w
    snr_lin = 10.0 ** (float(snr_db) / 10.0)
    sigma2 = w.power / snr_lin
    if rng is None:
        rng = np.random.default_rng()
    n = len(w)
    noise = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return w.with_samples(w.samples + noise)
