"""Closed-form ABER union bound for SM over Rayleigh fading, and ML receiver complexity counts."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import CorrelationSpec
from .modem import QamConstellation

__all__ = [
    "DEFAULT_QUADRATURE_NODES",
    "PepTerm",
    "ComplexityReport",
    "pep_term",
    "pep_exact",
    "pep_chernoff",
    "union_bound_aber",
    "complexity_report",
]

DEFAULT_QUADRATURE_NODES = 64


@dataclass(frozen=True)
class PepTerm:
    """One ordered transmit/hypothesis pair reduced to its fading-average ingredients.

    ``mu`` is the transmit-side quadratic form of the difference vector and
    ``rx_eigenvalues`` are the receive-correlation eigenvalues; together they
    fully determine the pairwise error probability.
    """

    tx_antenna: int
    tx_symbol: complex
    hyp_antenna: int
    hyp_symbol: complex
    mu: float
    rx_eigenvalues: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.rx_eigenvalues, dtype=np.float64)
        if np.any(lam < 0):
            raise ValueError("receive eigenvalues must be nonnegative")
        lam = lam.copy()
        lam.flags.writeable = False
        object.__setattr__(self, "rx_eigenvalues", lam)
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")


def _mu(tx_antenna, tx_symbol, hyp_antenna, hyp_symbol, r_tx) -> float:
    # Hermitian quadratic form of the difference vector; reduces to
    # |s_t|^2 + |s|^2 - 2 Re{s_t s*} R(l_t, l) when R is real.
    st, s = complex(tx_symbol), complex(hyp_symbol)
    r = complex(r_tx[tx_antenna - 1, hyp_antenna - 1])
    mu = abs(st) ** 2 + abs(s) ** 2 - 2.0 * (np.conj(st) * s * r).real
    return max(float(mu), 0.0)


def pep_term(tx: tuple[int, complex], hyp: tuple[int, complex], spec: CorrelationSpec) -> PepTerm:
    """Build the pairwise term for deciding ``hyp`` when ``tx`` was sent."""
    (lt, st), (l, s) = tx, hyp
    nt = spec.nt
    if not (1 <= lt <= nt and 1 <= l <= nt):
        raise ValueError(f"antenna indices must lie in 1..{nt}")
    lam = np.clip(np.linalg.eigvalsh(spec.r_rx), 0.0, None)
    return PepTerm(lt, complex(st), l, complex(s), _mu(lt, st, l, s, spec.r_tx), lam)


@lru_cache(maxsize=8)
def _quadrature(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre on (0, pi/2); open nodes avoid the theta=0 endpoint
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.25 * np.pi * (x + 1.0), w


def pep_exact(term: PepTerm, sigma2: float, nodes: int = DEFAULT_QUADRATURE_NODES) -> float:
    """Fading-averaged pairwise error probability by quadrature of the MGF integral.

    ``sigma2`` is the noise variance per complex receive sample.
    """
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    theta, w = _quadrature(nodes)
    scale = term.mu / (4.0 * sigma2 * np.sin(theta) ** 2)
    integrand = np.prod(1.0 / (1.0 + np.outer(scale, term.rx_eigenvalues)), axis=1)
    value = 0.25 * float(w @ integrand)  # (1/pi) * (pi/4) * sum
    return min(max(value, 0.0), 0.5)


def pep_chernoff(term: PepTerm, sigma2: float) -> float:
    """Chernoff upper bound on the fading-averaged pairwise error probability.

    One half times the MGF product; never below :func:`pep_exact` for the
    same term, which the looser theta = pi/2 integrand guarantees.
    """
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    return 0.5 * float(np.prod(1.0 / (1.0 + term.rx_eigenvalues * term.mu / (4.0 * sigma2))))


def union_bound_aber(
    nt: int,
    constellation: QamConstellation,
    spec: CorrelationSpec,
    sigma2: float,
    pep_mode: str = "exact",
    nodes: int = DEFAULT_QUADRATURE_NODES,
) -> float:
    """Union bound on SM ABER: bit-weighted sum of pairwise error probabilities.

    Sums N(pair)/(m * 2^m) * PEP over all ordered pairs of the 2^m SM transmit
    vectors; the result is clipped to [0, 0.5] for reporting.
    """
    if pep_mode not in ("exact", "chernoff"):
        raise ValueError(f"unknown pep mode {pep_mode!r}")
    if sigma2 <= 0:
        raise ValueError("noise variance must be positive")
    if nt & (nt - 1) or nt < 1:
        raise ValueError(f"number of transmit antennas must be a power of two, got {nt}")
    if spec.nt != nt:
        raise ValueError(f"correlation spec is for nt={spec.nt}, expected {nt}")

    m_order = constellation.order
    k_sym = constellation.bits_per_symbol
    m = (nt.bit_length() - 1) + k_sym
    words = np.arange(nt * m_order, dtype=np.int64)
    ant = (words >> k_sym).astype(np.intp)  # 0-based
    sym = constellation.points[words & (m_order - 1)]

    power = np.abs(sym) ** 2
    cross = (np.conj(sym)[:, None] * sym[None, :]) * spec.r_tx[np.ix_(ant, ant)]
    mu = np.clip(power[:, None] + power[None, :] - 2.0 * cross.real, 0.0, None)
    n_bits = np.bitwise_count(words[:, None] ^ words[None, :]).astype(np.float64)
    lam = np.clip(np.linalg.eigvalsh(spec.r_rx), 0.0, None)

    if pep_mode == "chernoff":
        pep = np.ones_like(mu) * 0.5
        for lam_j in lam:
            pep /= 1.0 + lam_j * mu / (4.0 * sigma2)
    else:
        theta, w = _quadrature(nodes)
        pep = np.zeros_like(mu)
        for theta_i, w_i in zip(theta, w):
            factor = np.ones_like(mu)
            scale = mu / (4.0 * sigma2 * np.sin(theta_i) ** 2)
            for lam_j in lam:
                factor /= 1.0 + lam_j * scale
            pep += 0.25 * w_i * factor

    bound = float((n_bits * pep).sum() / (m * words.size))
    return min(max(bound, 0.0), 0.5)


@dataclass(frozen=True)
class ComplexityReport:
    """Real-multiplication counts of the two ML receivers and the relative saving."""

    c_sm: int
    c_smx: int
    c_rel: float


def complexity_report(nt: int, nr: int, m: int) -> ComplexityReport:
    """Receiver complexity in real multiplications at spectral efficiency ``m``."""
    if nt < 1 or nr < 1 or m < 1:
        raise ValueError("nt, nr and m must be positive")
    c_sm = 8 * nr * 2**m
    c_smx = 4 * (nt + 1) * nr * 2**m
    c_rel = 100.0 * (1.0 - 2.0 / (nt + 1))
    return ComplexityReport(c_sm, c_smx, c_rel)
