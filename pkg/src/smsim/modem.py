"""Gray-coded QAM constellations and the bit mappings used by SM and SMX transmitters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "QamConstellation",
    "SmFrame",
    "SmxFrame",
    "gray_qam",
    "map_bits_sm",
    "map_bits_smx",
    "demap_sm_frame",
    "demap_smx_frame",
    "bits_to_word",
    "word_to_bits",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def bits_to_word(bits) -> int:
    """Interpret a 0/1 sequence (MSB first) as an unsigned integer."""
    arr = np.asarray(bits, dtype=np.int64).ravel()
    if np.any((arr != 0) & (arr != 1)):
        raise ValueError("bit word may only contain 0 and 1")
    word = 0
    for b in arr:
        word = (word << 1) | int(b)
    return word


def word_to_bits(word: int, width: int) -> np.ndarray:
    """Expand an unsigned integer into ``width`` bits, MSB first."""
    if width < 0 or word < 0 or word >> width:
        raise ValueError(f"word {word} does not fit into {width} bits")
    return np.array([(word >> (width - 1 - i)) & 1 for i in range(width)], dtype=np.uint8)


def _gray_decode(label: int) -> int:
    # position p carries Gray label p ^ (p >> 1); this inverts that
    mask = label
    while mask:
        mask >>= 1
        label ^= mask
    return label


@dataclass(frozen=True)
class QamConstellation:
    """Unit-energy QAM constellation; ``points[w]`` is the symbol carrying bit word ``w``.

    The word-indexed point array is the bit map: it is a bijection as long as
    the points are distinct, which construction enforces.
    """

    order: int
    points: np.ndarray

    def __post_init__(self):
        if not _is_power_of_two(self.order) or self.order < 2:
            raise ValueError("constellation order must be a power of two, at least 2")
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.shape != (self.order,):
            raise ValueError(f"expected {self.order} points, got shape {pts.shape}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)
        energy = float(np.mean(np.abs(pts) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"constellation average energy is {energy!r}, expected 1")
        if np.unique(pts).size != self.order:
            raise ValueError("constellation points must be distinct")

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    def word_for(self, symbol: complex) -> int:
        """Exact lookup of the bit word a constellation point carries."""
        hits = np.nonzero(np.isclose(self.points, symbol, rtol=0.0, atol=1e-12))[0]
        if hits.size != 1:
            raise ValueError(f"{symbol!r} is not a constellation point")
        return int(hits[0])


def gray_qam(order: int) -> QamConstellation:
    """Gray-labelled square QAM, rectangular for odd bit counts, BPSK {-1,+1} for order 2.

    Bit convention (documented, the labelling itself is a free choice): the word
    is split MSB-first into I bits followed by Q bits, each axis Gray-coded so
    neighbouring amplitude levels differ in exactly one bit.
    """
    if not _is_power_of_two(order) or order < 2:
        raise ValueError("QAM order must be a power of two, at least 2")
    k = order.bit_length() - 1
    k_q = k // 2
    k_i = k - k_q
    points = np.empty(order, dtype=np.complex128)
    for word in range(order):
        w_i = word >> k_q
        w_q = word & ((1 << k_q) - 1)
        re = 2 * _gray_decode(w_i) - (2**k_i - 1)
        im = 2 * _gray_decode(w_q) - (2**k_q - 1) if k_q else 0
        points[word] = complex(re, im)
    points /= np.sqrt(np.mean(np.abs(points) ** 2))
    return QamConstellation(order, points)


@dataclass(frozen=True)
class SmFrame:
    """One SM channel use: the single active antenna plus the symbol it emits."""

    antenna_index: int  # 1-based
    symbol: complex
    source_bits: tuple[int, ...]

    def to_vector(self, nt: int) -> np.ndarray:
        """Materialize the transmit vector: all zeros except ``symbol`` at the active antenna."""
        if not 1 <= self.antenna_index <= nt:
            raise ValueError(f"antenna index {self.antenna_index} out of range 1..{nt}")
        x = np.zeros(nt, dtype=np.complex128)
        x[self.antenna_index - 1] = self.symbol
        return x


@dataclass(frozen=True)
class SmxFrame:
    """One SMX channel use: an independent constellation symbol per transmit antenna."""

    symbols: tuple[complex, ...]
    source_bits: tuple[int, ...]

    def to_vector(self) -> np.ndarray:
        return np.asarray(self.symbols, dtype=np.complex128)


def _antenna_bits(nt: int) -> int:
    if not _is_power_of_two(nt):
        raise ValueError(f"number of transmit antennas must be a power of two, got {nt}")
    return nt.bit_length() - 1


def map_bits_sm(bits, nt: int, constellation: QamConstellation) -> SmFrame:
    """Map an m-bit word to an SM frame: leading bits pick the antenna, the rest the symbol."""
    k_ant = _antenna_bits(nt)
    k_sym = constellation.bits_per_symbol
    arr = np.asarray(bits).ravel()
    if arr.size != k_ant + k_sym:
        raise ValueError(
            f"SM with nt={nt}, M={constellation.order} consumes {k_ant + k_sym} bits, got {arr.size}"
        )
    word = bits_to_word(arr)
    antenna = (word >> k_sym) + 1
    symbol = complex(constellation.points[word & (constellation.order - 1)])
    return SmFrame(antenna, symbol, tuple(int(b) for b in arr))


def map_bits_smx(bits, nt: int, constellation: QamConstellation) -> SmxFrame:
    """Map an (nt*log2(M))-bit word to per-antenna symbols, one bit group per antenna."""
    _antenna_bits(nt)  # nt must still be a power of two
    k_sym = constellation.bits_per_symbol
    arr = np.asarray(bits).ravel()
    if arr.size != nt * k_sym:
        raise ValueError(
            f"SMX with nt={nt}, M={constellation.order} consumes {nt * k_sym} bits, got {arr.size}"
        )
    word = bits_to_word(arr)
    symbols = []
    for i in range(nt):
        shift = (nt - 1 - i) * k_sym
        symbols.append(complex(constellation.points[(word >> shift) & (constellation.order - 1)]))
    return SmxFrame(tuple(symbols), tuple(int(b) for b in arr))


def demap_sm_frame(frame: SmFrame, nt: int, constellation: QamConstellation) -> np.ndarray:
    """Invert :func:`map_bits_sm`; exact round trip for every valid frame."""
    k_ant = _antenna_bits(nt)
    k_sym = constellation.bits_per_symbol
    if not 1 <= frame.antenna_index <= nt:
        raise ValueError(f"antenna index {frame.antenna_index} out of range 1..{nt}")
    word = ((frame.antenna_index - 1) << k_sym) | constellation.word_for(frame.symbol)
    return word_to_bits(word, k_ant + k_sym)


def demap_smx_frame(frame: SmxFrame, nt: int, constellation: QamConstellation) -> np.ndarray:
    """Invert :func:`map_bits_smx`."""
    _antenna_bits(nt)
    k_sym = constellation.bits_per_symbol
    if len(frame.symbols) != nt:
        raise ValueError(f"frame carries {len(frame.symbols)} symbols, expected {nt}")
    word = 0
    for s in frame.symbols:
        word = (word << k_sym) | constellation.word_for(s)
    return word_to_bits(word, nt * k_sym)
