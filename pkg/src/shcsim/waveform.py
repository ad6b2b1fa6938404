"""Sampled-signal containers, RRC pulse shaping and FFT-based resampling.

Every signal in the simulator is a uniformly sampled complex baseband
waveform.  Multi-symbol records are treated as circular: pulse shaping and
filtering can run in a zero-delay circular mode so that record lengths stay
commensurate through the whole transmit/receive chain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ComplexWaveform:
    """Uniformly sampled complex baseband samples plus their sample rate.

    Samples must be finite; a waveform with NaN or Inf anywhere is refused
    at construction so downstream energy accounting stays meaningful.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be > 0, got {self.sample_rate}")
        if samples.size and not np.all(np.isfinite(samples.view(np.float64))):
            raise ValueError("waveform samples must be finite (no NaN/Inf)")

    def __len__(self) -> int:
        return self.samples.size

    @property
    def power(self) -> float:
        """Mean |s|^2 over the record."""
        if not self.samples.size:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "ComplexWaveform":
        """New waveform at the same rate."""
        return ComplexWaveform(samples, self.sample_rate)


@dataclass(frozen=True)
class DualPolWaveform:
    """Paired X/Y waveforms forming a Jones-vector field."""

    x: ComplexWaveform
    y: ComplexWaveform

    def __post_init__(self):
        if len(self.x) != len(self.y):
            raise ValueError(
                f"X/Y lengths differ: {len(self.x)} vs {len(self.y)}"
            )
        if self.x.sample_rate != self.y.sample_rate:
            raise ValueError(
                f"X/Y sample rates differ: {self.x.sample_rate} vs {self.y.sample_rate}"
            )

    def __len__(self) -> int:
        return len(self.x)

    @property
    def sample_rate(self) -> float:
        return self.x.sample_rate

    @property
    def total_power(self) -> float:
        return self.x.power + self.y.power


def rrc_taps(beta: float, sps: int, span: int) -> np.ndarray:
    """Unit-energy root-raised-cosine impulse response.

    Parameters
    ----------
    beta : roll-off factor in [0, 1].
    sps : samples per symbol, >= 2.
    span : filter length in symbols, even and >= 8.  The returned filter has
        span*sps + 1 taps with the peak at index span*sps//2.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta must be in [0, 1], got {beta}")
    if sps < 2 or int(sps) != sps:
        raise ValueError(f"sps must be an integer >= 2, got {sps}")
    if span < 8 or span % 2:
        raise ValueError(f"span must be even and >= 8, got {span}")

    n = span * sps
    t = np.arange(-n // 2, n // 2 + 1) / sps
    h = np.zeros(t.size)

    # Piecewise definition: the generic expression has removable singularities
    # at t = 0 and |t| = 1/(4 beta).
    at_zero = t == 0
    if beta > 0:
        singular = np.isclose(np.abs(4 * beta * t), 1.0)
    else:
        singular = np.zeros(t.size, dtype=bool)
    regular = ~(at_zero | singular)

    h[at_zero] = 1.0 + beta * (4.0 / np.pi - 1.0)
    if beta > 0 and np.any(singular):
        a = np.pi / (4 * beta)
        h[singular] = (beta / np.sqrt(2.0)) * (
            (1 + 2 / np.pi) * np.sin(a) + (1 - 2 / np.pi) * np.cos(a)
        )
    tr = t[regular]
    h[regular] = (
        np.sin(np.pi * tr * (1 - beta))
        + 4 * beta * tr * np.cos(np.pi * tr * (1 + beta))
    ) / (np.pi * tr * (1 - (4 * beta * tr) ** 2))

    return h / np.sqrt(np.sum(h**2))


def upsample(symbols: np.ndarray, sps: int) -> np.ndarray:
    """Zero-stuff a symbol sequence to sps samples per symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    out = np.zeros(symbols.size * sps, dtype=np.complex128)
    out[::sps] = symbols
    return out


def _circular_filter(x: np.ndarray, taps: np.ndarray, center: int) -> np.ndarray:
    """Zero-delay circular convolution: tap `center` lands on lag 0."""
    n = x.size
    h = np.zeros(n, dtype=np.complex128)
    idx = (np.arange(taps.size) - center) % n
    np.add.at(h, idx, taps)
    return np.fft.ifft(np.fft.fft(x) * np.fft.fft(h))


def rrc_shape(
    symbols: np.ndarray,
    beta: float,
    sps: int,
    span: int = 64,
    sample_rate: float | None = None,
    circular: bool = False,
) -> ComplexWaveform:
    """Upsample symbols by sps and shape with a unit-energy RRC filter.

    Two length conventions:

    * ``circular=False`` (default): full linear convolution.  Output length is
      len(symbols)*sps + span*sps and the filter delay is span*sps//2 samples,
      i.e. symbol k peaks at sample k*sps + span*sps//2.
    * ``circular=True``: the record is treated as periodic and the filter is
      applied with zero delay, so symbol k peaks at sample k*sps and the
      output length is exactly len(symbols)*sps.

    ``sample_rate`` defaults to sps (symbol rate 1).
    """
    taps = rrc_taps(beta, sps, span)
    rate = float(sample_rate) if sample_rate is not None else float(sps)
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size == 0:
        return ComplexWaveform(np.zeros(0, dtype=np.complex128), rate)
    up = upsample(symbols, sps)
    if circular:
        out = _circular_filter(up, taps, taps.size // 2)
    else:
        out = np.convolve(up, taps)
    return ComplexWaveform(out, rate)


def matched_rrc(
    w: ComplexWaveform, beta: float, sps: int, span: int = 64, circular: bool = True
) -> ComplexWaveform:
    """Apply the receive-side RRC matched filter (zero delay when circular)."""
    taps = rrc_taps(beta, sps, span)
    if circular:
        out = _circular_filter(w.samples, taps, taps.size // 2)
    else:
        out = np.convolve(w.samples, taps, mode="same")
    return w.with_samples(out)


def resample(w: ComplexWaveform, new_rate: float) -> ComplexWaveform:
    """Band-limited FFT resampling to a new sample rate.

    Exact for circular signals band-limited below min(old, new)/2.  The output
    length is round(len * new_rate / old_rate); when the ratio is not
    commensurate with the record length the achieved rate deviates from the
    request by less than one part in the record length.
    """
    if new_rate <= 0:
        raise ValueError(f"new_rate must be > 0, got {new_rate}")
    n = len(w)
    if n == 0 or new_rate == w.sample_rate:
        return ComplexWaveform(w.samples.copy(), new_rate)
    m = int(round(n * new_rate / w.sample_rate))
    if m == n:
        return ComplexWaveform(w.samples.copy(), new_rate)

    spec = np.fft.fft(w.samples)
    out_spec = np.zeros(m, dtype=np.complex128)
    k = min(n, m)
    if k % 2:
        pos = (k + 1) // 2
        out_spec[:pos] = spec[:pos]
        if k > 1:
            out_spec[-(k // 2):] = spec[-(k // 2):]
    else:
        half = k // 2
        out_spec[:half] = spec[:half]
        out_spec[-half:] = spec[-half:]
        # Shared Nyquist bin: split on upsample, average on downsample.
        if m > n:
            out_spec[half] = spec[half] / 2.0
            out_spec[m - half] = spec[half] / 2.0
        else:
            out_spec[half] = (spec[half] + spec[n - half]) / 2.0
    return ComplexWaveform(np.fft.ifft(out_spec) * (m / n), new_rate)


def frequency_shift(w: ComplexWaveform, shift_hz: float) -> ComplexWaveform:
    """Multiply by exp(+j 2 pi shift t)."""
    n = np.arange(len(w))
    return w.with_samples(w.samples * np.exp(2j * np.pi * shift_hz * n / w.sample_rate))


def snap_to_bin(freq_hz: float, sample_rate: float, n_samples: int) -> float:
    """Round a frequency onto the FFT grid of an n-sample record.

    Keeps frequency-shifted subcarriers exactly periodic over the record so
    the circular-processing model stays artifact free.  The shift is below
    sample_rate / n_samples, negligible against any subcarrier bandwidth.
    """
    df = sample_rate / n_samples
    return round(freq_hz / df) * df
