"""Receiver DSP chain: GSOP, subcarrier demux, FD-CDC, sync and the
Alamouti 2x2 LMS equalizer with one-tap phase tracking.

Equalizer input convention: per Alamouti block the odd-branch observation
vector is a window of the received stream centered on the odd symbol slot,
and the even-branch observation is the conjugated window centered on the
even slot.  Conjugating the second observation makes both branches linear
in the source pair, so four ordinary FIR filters plus the one-tap phase
factors recover the symbols; the phase factor multiplies the odd branch by
p and the conjugated branch by conj(p).  The equalizer runs T/2 spaced
(windows slide over consecutive half-symbol samples, one output symbol per
slot), which also lets the taps absorb fractional timing and residual
dispersion memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .channel import cd_phase
from .constellation import Constellation, qam_demap
from .errors import ConfigurationError, EqualizerDivergence, SyncError
from .txdsp import AlamoutiFrame, DscmSignal, SubcarrierPlan
from .waveform import ComplexWaveform, rrc_taps, snap_to_bin


@dataclass(frozen=True)
class EqualizerConfig:
    """LMS settings; training switches hard to decision-directed mode."""

    n_taps: int = 9
    mu: float = 3e-3
    mu_p: float = 5e-2
    n_train: int = 10_000
    phase_update: str = "gradient"

    # "gradient" drives both phase factors from the Wirtinger gradient of the
    # odd-output error and tracks at every polarization angle; "verbatim" is
    # the update exactly as published (odd error into both factors) and
    # "split" feeds each factor its own output error.  The published variants
    # lose several dB at mixed polarization angles; see README.
    PHASE_MODES = ("verbatim", "split", "gradient")

    def __post_init__(self):
        if self.n_taps < 1 or self.n_taps % 2 == 0:
            raise ValueError(f"n_taps must be odd and >= 1, got {self.n_taps}")
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"mu must be in (0, 1), got {self.mu}")
        if not 0.0 < self.mu_p < 1.0:
            raise ValueError(f"mu_p must be in (0, 1), got {self.mu_p}")
        if self.phase_update not in self.PHASE_MODES:
            raise ValueError(f"unknown phase_update {self.phase_update!r}")


@dataclass
class EqualizerState:
    """Four FIR tap vectors plus the one-tap phase factors, p = (p1+p2)/2."""

    w11: np.ndarray
    w12: np.ndarray
    w21: np.ndarray
    w22: np.ndarray
    p1: complex
    p2: complex

    @property
    def p(self) -> complex:
        return (self.p1 + self.p2) / 2.0

    @classmethod
    def initial(cls, n_taps: int, spike: bool = False) -> "EqualizerState":
        """All-zero taps with unit phase factors.

        Training drives the taps up from zero at every polarization angle
        symmetrically.  ``spike=True`` puts the classic center spike on w11
        instead (useful for blind startup, but its decay rides near-singular
        fractionally-spaced modes when the detected polarization is far from
        the spike's assumption).
        """
        state = cls(
            w11=np.zeros(n_taps, dtype=np.complex128),
            w12=np.zeros(n_taps, dtype=np.complex128),
            w21=np.zeros(n_taps, dtype=np.complex128),
            w22=np.zeros(n_taps, dtype=np.complex128),
            p1=1.0 + 0.0j,
            p2=1.0 + 0.0j,
        )
        if spike:
            state.w11[n_taps // 2] = 1.0
        return state

    def copy(self) -> "EqualizerState":
        return EqualizerState(
            w11=self.w11.copy(), w12=self.w12.copy(),
            w21=self.w21.copy(), w22=self.w22.copy(),
            p1=self.p1, p2=self.p2,
        )


@dataclass(frozen=True)
class CdcConfig:
    """Overlap-save frequency-domain CD compensation parameters."""

    fft_size: int
    overlap: int
    fiber_km: float
    dispersion_ps_nm_km: float = 17.0
    wavelength_nm: float = 1550.0

    def __post_init__(self):
        n = self.fft_size
        if n < 2 or n & (n - 1):
            raise ConfigurationError(f"fft_size must be a power of two, got {n}")
        if self.overlap < 0:
            raise ConfigurationError(f"overlap must be >= 0, got {self.overlap}")
        if n <= 2 * self.overlap:
            raise ConfigurationError(
                f"fft_size {n} must exceed twice the overlap {self.overlap}"
            )


@dataclass(frozen=True)
class EqualizeResult:
    odd: np.ndarray
    even: np.ndarray
    state: EqualizerState
    err_odd: np.ndarray
    err_even: np.ndarray

    def interleaved(self) -> np.ndarray:
        out = np.empty(2 * self.odd.size, dtype=np.complex128)
        out[0::2] = self.odd
        out[1::2] = self.even
        return out


def gsop(w: ComplexWaveform) -> ComplexWaveform:
    """Gram-Schmidt orthogonalization of the I/Q rails.

    Q is orthogonalized against I and rescaled to the original I power; the
    output rails have exactly zero sample cross-correlation.
    """
    i = w.samples.real
    q = w.samples.imag
    p_i = float(np.mean(i * i)) if i.size else 0.0
    if p_i <= 0.0:
        raise ValueError("GSOP needs nonzero I-rail power")
    rho = float(np.mean(i * q)) / p_i
    q_orth = q - rho * i
    p_q = float(np.mean(q_orth * q_orth))
    if p_q <= 1e-24 * p_i:
        raise ValueError("GSOP degenerate input: Q rail is a multiple of I")
    q_out = q_orth * np.sqrt(p_i / p_q)
    return w.with_samples(i + 1j * q_out)


def subcarrier_demux(
    w: ComplexWaveform, plan: SubcarrierPlan, sps_out: int = 2
) -> list[ComplexWaveform]:
    """Split the composite into baseband subcarrier streams at sps_out.

    Per subcarrier: shift its center to 0 (snapped to the record's FFT grid,
    matching the transmit side), brick-wall low-pass to (1+beta)/2 times the
    subcarrier baud, and resample to sps_out samples per symbol.  All in one
    FFT pass over the composite.
    """
    target_rate = sps_out * plan.sc_baud
    if target_rate > w.sample_rate:
        raise ConfigurationError(
            f"target rate {target_rate} exceeds input rate {w.sample_rate}"
        )
    n = len(w)
    m = int(round(n * target_rate / w.sample_rate))
    if m < 2:
        raise ConfigurationError("record too short to demultiplex")

    spec = np.fft.fft(w.samples)
    df = w.sample_rate / n
    cutoff = (1.0 + plan.beta) / 2.0 * plan.sc_baud
    n_keep = int(np.floor(cutoff / df))  # bins on each side of DC
    n_keep = min(n_keep, (m - 1) // 2)

    out = []
    for center in plan.centers:
        f_c = snap_to_bin(center, w.sample_rate, n)
        shift_bins = int(round(f_c / df))
        shifted = np.roll(spec, -shift_bins)
        sub = np.zeros(m, dtype=np.complex128)
        sub[: n_keep + 1] = shifted[: n_keep + 1]
        if n_keep > 0:
            sub[-n_keep:] = shifted[-n_keep:]
        out.append(ComplexWaveform(np.fft.ifft(sub) * (m / n), target_rate))
    return out


def fd_cdc(w: ComplexWaveform, cfg: CdcConfig) -> ComplexWaveform:
    """Overlap-save frequency-domain CD compensation.

    Block-wise multiplication by the conjugate dispersion phase
    exp(-j pi D lambda^2 f^2 L / c), discarding ``overlap`` samples at each
    block edge; blocks advance by fft_size - 2*overlap samples.  The record is
    treated as circular, so the cascade with apply_cd is the identity whenever
    the overlap covers half the delay spread per edge.
    """
    n_fft = cfg.fft_size
    n_ol = cfg.overlap
    hop = n_fft - 2 * n_ol
    total = len(w)
    if total == 0 or cfg.fiber_km == 0:
        return w.with_samples(w.samples.copy())

    freqs = np.fft.fftfreq(n_fft, d=1.0 / w.sample_rate)
    comp = np.exp(
        -1j * cd_phase(freqs, cfg.fiber_km, cfg.dispersion_ps_nm_km, cfg.wavelength_nm)
    )

    out = np.empty(total, dtype=np.complex128)
    base = np.arange(n_fft)
    n_blocks = int(np.ceil(total / hop))
    x = w.samples
    for b in range(n_blocks):
        idx = (b * hop - n_ol + base) % total
        blk = np.fft.ifft(np.fft.fft(x[idx]) * comp)
        take = min(hop, total - b * hop)
        out[b * hop : b * hop + take] = blk[n_ol : n_ol + take]
    return w.with_samples(out)


def auto_overlap(cfg_fiber_km: float, dispersion_ps_nm_km: float,
                 wavelength_nm: float, sample_rate: float) -> int:
    """Default overlap: delay spread across the sampled band, in samples."""
    from .channel import cd_delay_spread_s

    spread = cd_delay_spread_s(cfg_fiber_km, dispersion_ps_nm_km, wavelength_nm,
                               sample_rate)
    return int(np.ceil(spread * sample_rate))


def synchronize(
    w: ComplexWaveform,
    reference,
    sps: int = 2,
    n_preamble: int = 512,
    min_peak_ratio: float = 3.0,
) -> tuple[ComplexWaveform, int]:
    """Circularly align a received stream to reference symbol 0.

    ``reference`` is an encoded symbol stream, a pair of streams, or an
    AlamoutiFrame (both encoded polarizations are then correlated and their
    magnitudes combined, which makes the lock polarization and phase
    rotation invariant).  The first ``n_preamble`` reference symbols act as
    the known preamble.  Raises SyncError when the combined correlation peak
    is below ``min_peak_ratio`` times the median sidelobe.

    Returns (aligned waveform, offset in samples).
    """
    if isinstance(reference, AlamoutiFrame):
        refs = [reference.ex, reference.ey]
    elif isinstance(reference, (tuple, list)):
        refs = [np.asarray(r) for r in reference]
    else:
        refs = [np.asarray(reference)]
    refs = [r[:n_preamble] for r in refs if np.asarray(r).size]
    if not refs or min(r.size for r in refs) < 256:
        raise ValueError("synchronize needs at least 256 reference symbols")

    n = len(w)
    spec_w = np.fft.fft(w.samples)
    metric = np.zeros(n)
    for r in refs:
        if not np.any(r):
            continue
        ref_up = np.zeros(n, dtype=np.complex128)
        ref_up[: r.size * sps : sps] = r
        corr = np.fft.ifft(spec_w * np.conj(np.fft.fft(ref_up)))
        metric += np.abs(corr) ** 2

    mag = np.sqrt(metric)
    offset = int(np.argmax(mag))
    peak = mag[offset]
    guard = np.ones(n, dtype=bool)
    for g in range(-2 * sps, 2 * sps + 1):
        guard[(offset + g) % n] = False
    sidelobe = float(np.median(mag[guard]))
    if sidelobe <= 0 or peak < min_peak_ratio * sidelobe:
        raise SyncError(
            f"correlation peak {peak:.3g} below {min_peak_ratio} x median "
            f"sidelobe {sidelobe:.3g}"
        )
    return w.with_samples(np.roll(w.samples, -offset)), offset


def _check_divergence(err_o: np.ndarray, err_e: np.ndarray, mu: float,
                      window: int = 1000) -> None:
    mag = np.abs(err_o) + np.abs(err_e)
    if not np.all(np.isfinite(mag)):
        raise EqualizerDivergence(
            f"LMS error overflowed; step size mu={mu} is too large"
        )
    if mag.size < 2 * window:
        return
    n_win = mag.size // window
    means = mag[: n_win * window].reshape(n_win, window).mean(axis=1)
    initial = means[0]
    if initial > 0 and np.any(means[1:] > 10.0 * initial):
        raise EqualizerDivergence(
            f"LMS error grew beyond 10x its initial level; step size mu={mu} "
            "is likely too large"
        )


def alamouti_equalize(
    received,
    cfg: EqualizerConfig,
    training: np.ndarray,
    constellation: Constellation,
    sps: int = 2,
    state: EqualizerState | None = None,
) -> EqualizeResult:
    """Run the 2x2 Alamouti LMS equalizer over a synchronized stream.

    ``received`` is the stream at ``sps`` in {1, 2} samples per symbol with
    sample 0 on source symbol 0; ``training`` is the source symbol stream,
    used for the first cfg.n_train blocks, after which decisions come from
    the constellation (hard switch).  Raises EqualizerDivergence when the
    error trace grows instead of converging.
    """
    if sps not in (1, 2):
        raise ValueError(f"sps must be 1 or 2, got {sps}")
    x = received.samples if isinstance(received, ComplexWaveform) else np.asarray(received)
    x = np.asarray(x, dtype=np.complex128).ravel()

    block_span = 2 * sps  # input samples per 2-symbol block
    n_blocks = x.size // block_span
    if n_blocks < 1:
        raise ValueError("received stream shorter than one Alamouti block")
    x = x[: n_blocks * block_span]

    # Direct and conjugated views of the full stream; the kernel centers the
    # direct windows on the odd slot and the conjugated ones on the even slot.
    pad = cfg.n_taps + block_span
    zeros = np.zeros(pad, dtype=np.complex128)
    branch_o = np.concatenate([zeros, x, zeros])
    branch_e = np.concatenate([zeros, np.conj(x), zeros])

    training = np.asarray(training, dtype=np.complex128).ravel()
    n_train = min(cfg.n_train, n_blocks, training.size // 2)
    train_o = np.ascontiguousarray(training[0 : 2 * n_train : 2])
    train_e = np.ascontiguousarray(training[1 : 2 * n_train : 2])

    st = state.copy() if state is not None else EqualizerState.initial(cfg.n_taps)
    if st.w11.size != cfg.n_taps:
        raise ValueError("state tap length does not match cfg.n_taps")
    p_state = np.array([st.p1, st.p2], dtype=np.complex128)

    y_o = np.empty(n_blocks, dtype=np.complex128)
    y_e = np.empty(n_blocks, dtype=np.complex128)
    err_o = np.empty(n_blocks, dtype=np.complex128)
    err_e = np.empty(n_blocks, dtype=np.complex128)

    _kernels.alamouti_lms(
        branch_o, branch_e, n_blocks, sps, pad,
        st.w11, st.w12, st.w21, st.w22, p_state,
        float(cfg.mu), float(cfg.mu_p), n_train, train_o, train_e,
        np.ascontiguousarray(constellation.points),
        EqualizerConfig.PHASE_MODES.index(cfg.phase_update),
        y_o, y_e, err_o, err_e,
    )
    st.p1 = complex(p_state[0])
    st.p2 = complex(p_state[1])

    _check_divergence(err_o, err_e, cfg.mu)
    return EqualizeResult(odd=y_o, even=y_e, state=st, err_odd=err_o, err_even=err_e)


def single_pol_equalize(
    received,
    cfg: EqualizerConfig,
    training: np.ndarray,
    constellation: Constellation,
    sps: int = 2,
) -> tuple[np.ndarray, np.ndarray]:
    """Conventional T/2 LMS equalizer with one-tap phase, no Alamouti structure.

    The fading-contrast baseline receiver.  Returns (symbols, error trace).
    """
    x = received.samples if isinstance(received, ComplexWaveform) else np.asarray(received)
    x = np.asarray(x, dtype=np.complex128).ravel()
    n_symbols = x.size // sps
    if n_symbols < 1:
        raise ValueError("received stream shorter than one symbol")
    x = x[: n_symbols * sps]

    pad = cfg.n_taps
    xp = np.concatenate([
        np.zeros(pad, dtype=np.complex128), x, np.zeros(pad, dtype=np.complex128)
    ])
    training = np.asarray(training, dtype=np.complex128).ravel()
    n_train = min(cfg.n_train * 2, n_symbols, training.size)

    w = np.zeros(cfg.n_taps, dtype=np.complex128)
    w[cfg.n_taps // 2] = 1.0
    p_state = np.array([1.0 + 0.0j], dtype=np.complex128)
    y = np.empty(n_symbols, dtype=np.complex128)
    err = np.empty(n_symbols, dtype=np.complex128)

    _kernels.single_lms(
        xp, n_symbols, sps, pad, w, p_state,
        float(cfg.mu), float(cfg.mu_p), n_train,
        np.ascontiguousarray(training[:n_train]),
        np.ascontiguousarray(constellation.points),
        y, err,
    )
    return y, err


@dataclass(frozen=True)
class SubcarrierResult:
    """Per-subcarrier receiver outputs, training region already discarded."""

    bits: np.ndarray
    ref_bits: np.ndarray
    symbols: np.ndarray
    ref_symbols: np.ndarray
    sync_offset: int
    evm_db: float
    snr_db: float
    err_trace: np.ndarray


@dataclass(frozen=True)
class RxResult:
    subcarriers: tuple

    @property
    def bits(self) -> list[np.ndarray]:
        return [sc.bits for sc in self.subcarriers]

    @property
    def ref_bits(self) -> list[np.ndarray]:
        return [sc.ref_bits for sc in self.subcarriers]


def _normalize_symbol_power(x: np.ndarray, sps: int) -> np.ndarray:
    p = np.mean(np.abs(x[::sps]) ** 2)
    return x / np.sqrt(p) if p > 0 else x


def prepare_subcarriers(
    detected: ComplexWaveform,
    tx: DscmSignal,
    cdc: CdcConfig | str | None = "absorb-in-equalizer",
    sync: str | int = "auto",
    sps: int = 2,
) -> list[tuple[ComplexWaveform, int]]:
    """Pre-equalizer receiver stages: GSOP, demux, matched RRC, optional
    FD-CDC, unit-power normalization and synchronization.

    Returns one (aligned stream, sync offset) pair per subcarrier, ready for
    the equalizer.  Splitting here lets tap sweeps rerun only the equalizer.
    """
    plan = tx.plan
    cleaned = gsop(detected)
    streams = subcarrier_demux(cleaned, plan, sps_out=sps)
    mf_taps = rrc_taps(plan.beta, sps, tx.rrc_span)

    prepared = []
    for sc_idx, stream in enumerate(streams):
        filtered = _matched_filter_cached(stream, mf_taps)
        if cdc not in (None, "absorb-in-equalizer", "none"):
            filtered = fd_cdc(filtered, cdc)
        filtered = filtered.with_samples(
            _normalize_symbol_power(filtered.samples, sps)
        )
        if isinstance(sync, int):
            offset = sync
            aligned = filtered.with_samples(np.roll(filtered.samples, -offset))
        else:
            aligned, offset = synchronize(filtered, tx.frames[sc_idx], sps=sps)
        prepared.append((aligned, offset))
    return prepared


def equalize_and_demap(
    prepared: list[tuple[ComplexWaveform, int]],
    tx: DscmSignal,
    eq: EqualizerConfig,
    sps: int = 2,
    coding: str = "alamouti",
) -> RxResult:
    """Equalize prepared subcarrier streams and hard-demap the payload.

    The training region is dropped from the returned bit and symbol streams.
    """
    const = tx.constellation
    k = const.bits_per_symbol

    results = []
    for sc_idx, (aligned, offset) in enumerate(prepared):
        frame = tx.frames[sc_idx]
        if coding == "alamouti":
            res = alamouti_equalize(aligned, eq, frame.source, const, sps=sps)
            symbols = res.interleaved()
            err_trace = np.abs(res.err_odd) + np.abs(res.err_even)
            n_train_sym = 2 * min(eq.n_train, res.odd.size)
        else:
            symbols, err = single_pol_equalize(aligned, eq, frame.source, const, sps=sps)
            err_trace = np.abs(err)
            n_train_sym = min(eq.n_train * 2, symbols.size)

        payload = symbols[n_train_sym:]
        ref_symbols = frame.source[n_train_sym : n_train_sym + payload.size]
        payload = payload[: ref_symbols.size]

        bits = qam_demap(payload, const)
        ref_bits = tx.bits[sc_idx][n_train_sym * k : (n_train_sym + payload.size) * k]

        if payload.size:
            mse = float(np.mean(np.abs(payload - ref_symbols) ** 2))
            ref_pow = float(np.mean(np.abs(ref_symbols) ** 2))
            evm = 10.0 * np.log10(max(mse / ref_pow, 1e-10))
        else:
            evm = 0.0
        results.append(
            SubcarrierResult(
                bits=bits,
                ref_bits=np.asarray(ref_bits, dtype=np.uint8),
                symbols=payload,
                ref_symbols=ref_symbols,
                sync_offset=offset,
                evm_db=evm,
                snr_db=-evm,
                err_trace=err_trace,
            )
        )
    return RxResult(subcarriers=tuple(results))


def rx_pipeline(
    detected: ComplexWaveform,
    tx: DscmSignal,
    eq: EqualizerConfig,
    cdc: CdcConfig | str | None = "absorb-in-equalizer",
    sync: str | int = "auto",
    sps: int = 2,
    coding: str | None = None,
) -> RxResult:
    """Full receiver: GSOP, demux, matched RRC, optional FD-CDC, sync,
    equalization and hard demapping, per subcarrier.

    ``cdc`` is a CdcConfig (fft_size/overlap; fiber parameters must match the
    channel) or "absorb-in-equalizer"/None to let the LMS taps handle the
    dispersion.  ``sync`` is "auto" or a forced integer sample offset.
    ``coding`` defaults to the transmission's own; "none" runs the
    single-polarization baseline equalizer instead of the Alamouti structure.
    """
    prepared = prepare_subcarriers(detected, tx, cdc=cdc, sync=sync, sps=sps)
    return equalize_and_demap(prepared, tx, eq, sps=sps,
                              coding=coding or tx.coding)


_MF_CACHE: dict = {}


def _matched_filter_cached(w: ComplexWaveform, taps: np.ndarray) -> ComplexWaveform:
    """Zero-delay circular matched filter with a cached taps spectrum."""
    n = len(w)
    key = (n, taps.size, float(taps[0]), float(taps[taps.size // 2]))
    spec_h = _MF_CACHE.get(key)
    if spec_h is None:
        h = np.zeros(n, dtype=np.complex128)
        idx = (np.arange(taps.size) - taps.size // 2) % n
        np.add.at(h, idx, taps)
        spec_h = np.fft.fft(h)
        if len(_MF_CACHE) > 32:
            _MF_CACHE.clear()
        _MF_CACHE[key] = spec_h
    return w.with_samples(np.fft.ifft(np.fft.fft(w.samples) * spec_h))
