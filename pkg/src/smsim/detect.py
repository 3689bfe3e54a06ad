"""Exhaustive maximum-likelihood detection for SM and SMX receivers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .modem import QamConstellation, SmFrame, SmxFrame, word_to_bits

__all__ = [
    "DEFAULT_SEARCH_CAP",
    "SearchSpaceError",
    "DetectionResult",
    "detect_sm_ml",
    "detect_smx_ml",
    "count_bit_errors",
    "smx_candidates",
    "sm_ml_words",
    "smx_ml_words",
]

DEFAULT_SEARCH_CAP = 2**20


class SearchSpaceError(ValueError):
    """The exhaustive ML candidate set exceeds the configured cap."""


@dataclass(frozen=True)
class DetectionResult:
    """ML estimate plus the minimum squared Frobenius distance that selected it."""

    estimate: SmFrame | SmxFrame
    metric: float

    def bit_errors_vs(self, reference) -> int:
        return count_bit_errors(self.estimate.source_bits, reference.source_bits)


def _entries(h) -> np.ndarray:
    if isinstance(h, ChannelMatrix):
        return h.entries
    return np.asarray(h, dtype=np.complex128)


def count_bit_errors(tx_bits, rx_bits) -> int:
    """Hamming distance between two equal-length bit words."""
    a = np.asarray(tx_bits).ravel()
    b = np.asarray(rx_bits).ravel()
    if a.size != b.size:
        raise ValueError(f"bit words differ in length: {a.size} vs {b.size}")
    return int(np.count_nonzero(a != b))


def sm_ml_words(
    y: np.ndarray, h: np.ndarray, constellation: QamConstellation
) -> tuple[np.ndarray, np.ndarray]:
    """Batch SM-ML detection over stacked receive vectors.

    ``y`` has shape (B, nr) and ``h`` shape (B, nr, nt). Returns the detected
    m-bit words (antenna bits above symbol bits) and the winning metrics.
    Candidates are scanned in (antenna, symbol-word) order, so the first
    minimum implements the lexicographic tie-break.
    """
    pts = constellation.points
    # (B, nr, nt, M) residuals; summation order over nr is fixed by the axis reduce
    diff = y[:, :, None, None] - h[:, :, :, None] * pts[None, None, None, :]
    metrics = np.sum(diff.real**2 + diff.imag**2, axis=1)
    flat = metrics.reshape(metrics.shape[0], -1)
    words = np.argmin(flat, axis=1)
    return words, flat[np.arange(flat.shape[0]), words]


def smx_ml_words(
    y: np.ndarray, h: np.ndarray, candidates: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Batch SMX-ML detection against a precomputed (C, nt) candidate matrix.

    Candidate index equals the transmitted bit word, so argmin's first-hit
    rule gives the bit-word tie-break.
    """
    y_hat = np.einsum("brt,ct->brc", h, candidates)
    diff = y[:, :, None] - y_hat
    metrics = np.sum(diff.real**2 + diff.imag**2, axis=1)
    words = np.argmin(metrics, axis=1)
    return words, metrics[np.arange(metrics.shape[0]), words]


def smx_candidates(nt: int, constellation: QamConstellation, cap: int = DEFAULT_SEARCH_CAP) -> np.ndarray:
    """All M^nt SMX transmit vectors, row ``w`` holding the vector for bit word ``w``."""
    m_order = constellation.order
    count = m_order**nt
    if count > cap:
        raise SearchSpaceError(
            f"SMX-ML with nt={nt}, M={m_order} needs {count} candidates, cap is {cap}"
        )
    k = constellation.bits_per_symbol
    words = np.arange(count, dtype=np.int64)
    shifts = (nt - 1 - np.arange(nt)) * k
    digits = (words[:, None] >> shifts[None, :]) & (m_order - 1)
    return constellation.points[digits]


def detect_sm_ml(
    y: np.ndarray, h, constellation: QamConstellation, nt: int
) -> DetectionResult:
    """SM-ML detection: minimize sum_r |y_r - h_{l,r} s|^2 over all (antenna, symbol) pairs.

    Ties break toward the smallest antenna index, then the smallest symbol word.
    """
    entries = _entries(h)
    if entries.shape[1] != nt:
        raise ValueError(f"channel has {entries.shape[1]} columns, expected nt={nt}")
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size != entries.shape[0]:
        raise ValueError(f"received vector length {y.size} does not match nr={entries.shape[0]}")
    words, metrics = sm_ml_words(y[None, :], entries[None, :, :], constellation)
    word, metric = int(words[0]), float(metrics[0])
    k_sym = constellation.bits_per_symbol
    frame = SmFrame(
        antenna_index=(word >> k_sym) + 1,
        symbol=complex(constellation.points[word & (constellation.order - 1)]),
        source_bits=tuple(int(b) for b in word_to_bits(word, nt.bit_length() - 1 + k_sym)),
    )
    return DetectionResult(frame, metric)


def detect_smx_ml(
    y: np.ndarray, h, constellation: QamConstellation, cap: int = DEFAULT_SEARCH_CAP
) -> DetectionResult:
    """SMX-ML detection: minimize ||y - Hx||^2 over all M^nt candidate vectors.

    Raises :class:`SearchSpaceError` instead of approximating when the
    exhaustive search would exceed ``cap`` candidates.
    """
    entries = _entries(h)
    nt = entries.shape[1]
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size != entries.shape[0]:
        raise ValueError(f"received vector length {y.size} does not match nr={entries.shape[0]}")
    cands = smx_candidates(nt, constellation, cap=cap)
    words, metrics = smx_ml_words(y[None, :], entries[None, :, :], cands)
    word, metric = int(words[0]), float(metrics[0])
    k_sym = constellation.bits_per_symbol
    frame = SmxFrame(
        symbols=tuple(complex(c) for c in cands[word]),
        source_bits=tuple(int(b) for b in word_to_bits(word, nt * k_sym)),
    )
    return DetectionResult(frame, metric)
