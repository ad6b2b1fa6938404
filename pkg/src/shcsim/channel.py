"""Linear dual-polarization channel and the remote-LO path impairments.

Signal path: frequency-domain chromatic dispersion followed by OSNR-calibrated
ASE loading (white complex noise on both polarizations, accounted against the
12.5 GHz / 0.1 nm reference bandwidth).  LO path: a unitary polarization
rotation of the delivered carrier plus a Wiener phase trajectory modeling the
fiber-length-mismatch phase noise.  Kerr nonlinearity and PMD are out of
scope; the channel is strictly linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT

from .frontend import LoState
from .waveform import ComplexWaveform, DualPolWaveform

OSNR_REF_BANDWIDTH = 12.5e9  # 0.1 nm at 1550 nm


@dataclass(frozen=True)
class ChannelConfig:
    fiber_km: float = 0.0
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0
    azimuth_deg: float = 0.0
    elevation_deg: float = 0.0
    linewidth_hz: float = 0.0
    osnr_db: float | str = "off"

    def __post_init__(self):
        if self.fiber_km < 0:
            raise ValueError(f"fiber_km must be >= 0, got {self.fiber_km}")
        if self.linewidth_hz < 0:
            raise ValueError(f"linewidth_hz must be >= 0, got {self.linewidth_hz}")
        for name, angle in (("azimuth_deg", self.azimuth_deg),
                            ("elevation_deg", self.elevation_deg)):
            if not -90.0 <= angle <= 90.0:
                raise ValueError(f"{name} must be in [-90, 90], got {angle}")


def cd_phase(freqs_hz: np.ndarray, fiber_km: float, dispersion_ps_nm_km: float,
             wavelength_nm: float) -> np.ndarray:
    """Quadratic all-pass phase pi*D*lambda^2*f^2*L/c in radians."""
    d_si = dispersion_ps_nm_km * 1e-6          # s/m^2
    lam = wavelength_nm * 1e-9
    length = fiber_km * 1e3
    return np.pi * d_si * lam**2 * freqs_hz**2 * length / SPEED_OF_LIGHT


def cd_delay_spread_s(fiber_km: float, dispersion_ps_nm_km: float,
                      wavelength_nm: float, bandwidth_hz: float) -> float:
    """Group-delay spread D*L*(lambda^2/c)*B across a band of width B."""
    d_si = dispersion_ps_nm_km * 1e-6
    lam = wavelength_nm * 1e-9
    return d_si * fiber_km * 1e3 * lam**2 * bandwidth_hz / SPEED_OF_LIGHT


def apply_cd(w: ComplexWaveform, fiber_km: float, dispersion_ps_nm_km: float = 17.0,
             wavelength_nm: float = 1550.0) -> ComplexWaveform:
    """Apply fiber chromatic dispersion: spectrum times exp(+j*phi_cd(f)).

    Energy preserving (all-pass); apply_cd with -fiber_km inverts it.
    """
    if fiber_km == 0 or len(w) == 0:
        return w.with_samples(w.samples.copy())
    freqs = np.fft.fftfreq(len(w), d=1.0 / w.sample_rate)
    phase = cd_phase(freqs, fiber_km, dispersion_ps_nm_km, wavelength_nm)
    out = np.fft.ifft(np.fft.fft(w.samples) * np.exp(1j * phase))
    return w.with_samples(out)


def rotation_matrix(azimuth_deg: float, elevation_deg: float) -> np.ndarray:
    """Unitary polarization rotation R = [[cos a, sin a e^je], [-sin a e^-je, cos a]].

    One standard two-angle parameterization covering the Poincare sphere;
    (0, 0) is the identity and (90, 0) swaps the polarizations up to sign.
    """
    for name, angle in (("azimuth", azimuth_deg), ("elevation", elevation_deg)):
        if not -90.0 <= angle <= 90.0:
            raise ValueError(f"{name} must be in [-90, 90], got {angle}")
    a = np.deg2rad(azimuth_deg)
    e = np.deg2rad(elevation_deg)
    return np.array(
        [
            [np.cos(a), np.sin(a) * np.exp(1j * e)],
            [-np.sin(a) * np.exp(-1j * e), np.cos(a)],
        ],
        dtype=np.complex128,
    )


def wiener_phase(n: int, linewidth_hz: float, sample_rate: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Wiener trajectory theta[k+1] = theta[k] + g*sqrt(2 pi dv Ts), theta[0] = 0."""
    if linewidth_hz == 0 or n == 0:
        return np.zeros(n)
    sigma = np.sqrt(2.0 * np.pi * linewidth_hz / sample_rate)
    steps = rng.standard_normal(n - 1) * sigma
    theta = np.empty(n)
    theta[0] = 0.0
    np.cumsum(steps, out=theta[1:])
    return theta


def osnr_noise_sigma2(total_signal_power: float, sample_rate: float,
                      osnr_db: float) -> float:
    """Per-polarization per-sample noise variance hitting a target OSNR.

    OSNR compares total (both-polarization) signal power against total noise
    power rescaled to the 12.5 GHz reference bandwidth; the loaded noise is
    white over the full simulation band.
    """
    osnr_lin = 10.0 ** (osnr_db / 10.0)
    return total_signal_power * sample_rate / (2.0 * OSNR_REF_BANDWIDTH * osnr_lin)


def apply_channel(
    sig: DualPolWaveform,
    lo_carrier: ComplexWaveform,
    cfg: ChannelConfig,
    rng_seed: int,
) -> tuple[DualPolWaveform, LoState]:
    """Run the signal and LO paths of the link.

    Signal path: CD then OSNR loading.  LO path: polarization state becomes
    R @ [1, 0] and the carrier picks up a Wiener phase trajectory; the fully
    transparent configuration returns the inputs unchanged.
    """
    if sig.sample_rate != lo_carrier.sample_rate:
        raise ValueError("signal and LO carrier must share a sample rate")
    if len(sig) != len(lo_carrier):
        raise ValueError("signal and LO carrier must share a length")

    rng = np.random.default_rng(rng_seed)

    x, y = sig.x, sig.y
    if cfg.fiber_km > 0:
        x = apply_cd(x, cfg.fiber_km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm)
        y = apply_cd(y, cfg.fiber_km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm)

    if cfg.osnr_db != "off":
        sigma2 = osnr_noise_sigma2(sig.total_power, sig.sample_rate, float(cfg.osnr_db))
        scale = np.sqrt(sigma2 / 2.0)
        n = len(sig)
        nx = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        ny = scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        x = x.with_samples(x.samples + nx)
        y = y.with_samples(y.samples + ny)

    rot = rotation_matrix(cfg.azimuth_deg, cfg.elevation_deg)
    theta = wiener_phase(len(lo_carrier), cfg.linewidth_hz, lo_carrier.sample_rate, rng)
    lo = LoState(jones=rot @ np.array([1.0, 0.0]), phase=theta)
    return DualPolWaveform(x=x, y=y), lo
