"""BER counting, Q^2, EVM, OSNR bookkeeping and theoretical QAM references.

OSNR convention used everywhere: total dual-polarization signal power against
noise power in a 12.5 GHz (0.1 nm at 1550 nm) reference bandwidth.  The
equivalent per-symbol SNR of a stream at symbol rate Rs is then
SNR = OSNR + 10 log10(12.5 GHz / Rs), with Rs the aggregate source symbol
rate; theory overlays are generated through exactly this conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, erfcinv

LOW_CONFIDENCE_ERRORS = 100


@dataclass(frozen=True)
class BerReport:
    bits_compared: int
    bit_errors: int
    per_subcarrier: tuple = field(default=())

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_compared

    @property
    def low_confidence(self) -> bool:
        """Fewer than 100 counted errors: treat the ratio with suspicion."""
        return self.bit_errors < LOW_CONFIDENCE_ERRORS


def count_ber(tx_bits: np.ndarray, rx_bits: np.ndarray) -> BerReport:
    """Exact Hamming comparison of two equal-length bit sequences."""
    tx_bits = np.asarray(tx_bits).ravel()
    rx_bits = np.asarray(rx_bits).ravel()
    if tx_bits.size != rx_bits.size:
        raise ValueError(f"length mismatch: {tx_bits.size} vs {rx_bits.size}")
    if tx_bits.size == 0:
        raise ValueError("cannot count BER over zero bits")
    errors = int(np.count_nonzero(tx_bits != rx_bits))
    return BerReport(bits_compared=tx_bits.size, bit_errors=errors)


def count_ber_per_subcarrier(tx_streams, rx_streams) -> BerReport:
    """Aggregate BER over per-subcarrier bit streams, keeping the breakdown."""
    if len(tx_streams) != len(rx_streams):
        raise ValueError("per-subcarrier stream counts differ")
    reports = tuple(count_ber(t, r) for t, r in zip(tx_streams, rx_streams))
    return BerReport(
        bits_compared=sum(r.bits_compared for r in reports),
        bit_errors=sum(r.bit_errors for r in reports),
        per_subcarrier=reports,
    )


def _square_qam_ber(m: int, snr_lin: np.ndarray) -> np.ndarray:
    """Exact Gray-coded square-QAM bit error probability (per-axis PAM sum)."""
    levels = int(np.sqrt(m))
    n_axis_bits = int(np.log2(levels))
    snr_lin = np.asarray(snr_lin, dtype=float)
    arg = np.sqrt(3.0 * snr_lin / (2.0 * (m - 1)))
    total = np.zeros_like(snr_lin)
    for k in range(1, n_axis_bits + 1):
        pk = np.zeros_like(total)
        top = int((1 - 2.0 ** (-k)) * levels)
        for i in range(top):
            sign = (-1) ** (i * 2 ** (k - 1) // levels)
            weight = 2 ** (k - 1) - math.floor(i * 2 ** (k - 1) / levels + 0.5)
            pk = pk + sign * weight * erfc((2 * i + 1) * arg)
        total = total + pk / levels
    return total / n_axis_bits


def _cross32_ber(snr_lin: np.ndarray) -> np.ndarray:
    """Nearest-neighbor bound for the unit-energy 32-cross constellation.

    d_min^2/Es = 1/5 and 3.25 average nearest neighbors; one bit per symbol
    error under the quasi-Gray labeling.
    """
    ser = 3.25 * 0.5 * erfc(np.sqrt(snr_lin / 20.0))
    return ser / 5.0


def theory_ber_qam(m: int, snr_per_symbol_db) -> np.ndarray | float:
    """Reference BER for Gray-coded M-QAM over AWGN at a given symbol SNR.

    Exact for the square orders 4/16/64, nearest-neighbor cross bound for 32.
    """
    if m not in (4, 16, 32, 64):
        raise ValueError(f"unsupported modulation order {m}")
    snr_db = np.asarray(snr_per_symbol_db, dtype=float)
    snr_lin = 10.0 ** (snr_db / 10.0)
    ber = _cross32_ber(snr_lin) if m == 32 else _square_qam_ber(m, snr_lin)
    if np.ndim(snr_per_symbol_db) == 0:
        return float(ber)
    return ber


def q_factor_db(ber: float) -> float:
    """Q^2 in dB from a bit error ratio: 20 log10(sqrt(2) erfcinv(2 ber))."""
    if not 0.0 < ber < 0.5:
        raise ValueError(f"ber must be in (0, 0.5), got {ber}")
    return float(20.0 * np.log10(np.sqrt(2.0) * erfcinv(2.0 * ber)))


def ber_from_q_factor_db(q2_db: float) -> float:
    """Inverse of q_factor_db."""
    q = 10.0 ** (q2_db / 20.0)
    return float(0.5 * erfc(q / np.sqrt(2.0)))


def evm_db(rx_symbols: np.ndarray, ref_symbols: np.ndarray) -> float:
    """Error vector magnitude, 10 log10(mean|rx-ref|^2 / mean|ref|^2).

    Floored at -100 dB so identical inputs stay finite.
    """
    rx = np.asarray(rx_symbols, dtype=np.complex128).ravel()
    ref = np.asarray(ref_symbols, dtype=np.complex128).ravel()
    if rx.size != ref.size:
        raise ValueError(f"length mismatch: {rx.size} vs {ref.size}")
    ref_power = float(np.mean(np.abs(ref) ** 2)) if ref.size else 0.0
    if ref_power <= 0.0:
        raise ValueError("reference power is zero")
    mse = float(np.mean(np.abs(rx - ref) ** 2))
    if mse <= 0.0:
        return -100.0
    return max(10.0 * np.log10(mse / ref_power), -100.0)


def osnr_to_snr_db(osnr_db: float, symbol_rate: float,
                   ref_bandwidth: float = 12.5e9) -> float:
    """Per-symbol SNR of the polarization-equivalent stream at a given OSNR."""
    return osnr_db + 10.0 * np.log10(ref_bandwidth / symbol_rate)


def measured_osnr_db(clean, noisy, ref_bandwidth: float = 12.5e9) -> float:
    """Estimate the loaded OSNR by differencing clean and noisy records.

    Both arguments are DualPolWaveform; the noise record is noisy - clean and
    its power is rescaled from the simulation bandwidth to the reference.
    """
    nx = noisy.x.samples - clean.x.samples
    ny = noisy.y.samples - clean.y.samples
    noise_power = float(np.mean(np.abs(nx) ** 2) + np.mean(np.abs(ny) ** 2))
    if noise_power <= 0.0:
        raise ValueError("no noise present between the two records")
    sig_power = clean.total_power
    fs = clean.sample_rate
    return float(10.0 * np.log10(sig_power / (noise_power * ref_bandwidth / fs)))


def snr_db_from_symbols(rx_symbols: np.ndarray, ref_symbols: np.ndarray) -> float:
    """EVM-derived SNR estimate, the negative of evm_db for unit-energy refs."""
    return -evm_db(rx_symbols, ref_symbols)
