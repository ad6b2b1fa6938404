"""Gray-coded QAM alphabets, bit mapping and hard-decision demapping.

Labeling conventions (fixed, relied on by golden tests):

* M = 4, 16, 64: rectangular per-axis Gray code.  The first half of each
  label selects the I level, the second half the Q level, both through a
  binary-reflected Gray code over PAM levels ordered low to high.
* M = 32: cross constellation (6x6 grid minus corners) labeled by folding a
  Gray-coded 8x4 rectangle, Smith style: the two outer columns relocate to
  the top/bottom caps.  Quasi-Gray at the fold seams; a true Gray code does
  not exist for the cross.

All constellations are normalized to unit mean symbol energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 32, 64)


@dataclass(frozen=True)
class Constellation:
    """A QAM alphabet: points[i] carries the bit label bin(i) (MSB first)."""

    order: int
    points: np.ndarray
    bit_labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    def __post_init__(self):
        if self.order not in SUPPORTED_ORDERS:
            raise ValueError(f"unsupported order {self.order}, want one of {SUPPORTED_ORDERS}")


def _gray(n: int) -> int:
    return n ^ (n >> 1)


def _pam_gray_levels(bits: int) -> np.ndarray:
    """PAM levels indexed by Gray code, ordered so all-zeros gets the top level."""
    n = 1 << bits
    levels = np.zeros(n)
    for pos in range(n):
        levels[_gray(pos)] = (n - 1) - 2 * pos
    return levels


def _square_points(order: int) -> np.ndarray:
    k = int(np.log2(order))
    ki = k // 2
    kq = k - ki
    i_levels = _pam_gray_levels(ki)
    q_levels = _pam_gray_levels(kq)
    pts = np.zeros(order, dtype=np.complex128)
    for label in range(order):
        i_bits = label >> kq
        q_bits = label & ((1 << kq) - 1)
        pts[label] = i_levels[i_bits] + 1j * q_levels[q_bits]
    return pts


def _cross32_points() -> np.ndarray:
    # Gray 8x4 rectangle: 3 I bits, 2 Q bits, then fold |I|=7 columns onto
    # the Q=+-5 caps (I' = sign(I)*(4-|Q|), Q' = sign(Q)*5).
    i_levels = _pam_gray_levels(3)
    q_levels = _pam_gray_levels(2)
    pts = np.zeros(32, dtype=np.complex128)
    for label in range(32):
        i = i_levels[label >> 2]
        q = q_levels[label & 3]
        if abs(i) > 6:
            i, q = np.sign(i) * (4 - abs(q)), np.sign(q) * 5
        pts[label] = i + 1j * q
    return pts


def make_constellation(order: int) -> Constellation:
    """Build the unit-energy Gray-labeled constellation for M in {4,16,32,64}."""
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported order {order}, want one of {SUPPORTED_ORDERS}")
    pts = _cross32_points() if order == 32 else _square_points(order)
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    k = int(np.log2(order))
    labels = ((np.arange(order)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.uint8)
    return Constellation(order=order, points=pts, bit_labels=labels)


def qam_map(bits: np.ndarray, c: Constellation) -> np.ndarray:
    """Map a bit sequence to constellation symbols, log2(M) bits per symbol.

    Raises ValueError when the bit count is not divisible by log2(M).
    """
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    k = c.bits_per_symbol
    if bits.size % k:
        raise ValueError(f"bit count {bits.size} not divisible by log2(M)={k}")
    if bits.size == 0:
        return np.zeros(0, dtype=np.complex128)
    groups = bits.reshape(-1, k)
    idx = groups @ (1 << np.arange(k - 1, -1, -1))
    return c.points[idx]


def qam_demap(symbols: np.ndarray, c: Constellation) -> np.ndarray:
    """Hard decision to the nearest point, ties broken by lowest point index."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    if symbols.size == 0:
        return np.zeros(0, dtype=np.uint8)
    d2 = np.abs(symbols[:, None] - c.points[None, :]) ** 2
    idx = np.argmin(d2, axis=1)
    return c.bit_labels[idx].ravel()


def nearest_point_index(symbols: np.ndarray, c: Constellation) -> np.ndarray:
    """Index of the nearest constellation point per symbol."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    d2 = np.abs(symbols[:, None] - c.points[None, :]) ** 2
    return np.argmin(d2, axis=1)
