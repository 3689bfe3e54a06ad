"""Synthesis of i.i.d. and spatially correlated Rayleigh MIMO channels, plus AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ChannelMatrix",
    "CorrelationSpec",
    "NoisySnapshot",
    "exponential_correlation",
    "hermitian_sqrt",
    "draw_iid_rayleigh",
    "draw_kronecker_channel",
    "apply_awgn",
]

_HERMITIAN_TOL = 1e-10
_EIGENVALUE_FLOOR = -1e-6  # below this the input is treated as genuinely indefinite


@dataclass(frozen=True)
class ChannelMatrix:
    """An nr-by-nt complex channel realization."""

    entries: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.entries, dtype=np.complex128)
        if h.ndim != 2 or min(h.shape) < 1:
            raise ValueError(f"channel matrix must be 2-D and non-empty, got shape {h.shape}")
        if not np.all(np.isfinite(h.view(np.float64))):
            raise ValueError("channel matrix entries must be finite")
        h = h.copy()
        h.flags.writeable = False
        object.__setattr__(self, "entries", h)

    @property
    def nr(self) -> int:
        return self.entries.shape[0]

    @property
    def nt(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class NoisySnapshot:
    """A received vector together with the per-dimension noise variance that produced it."""

    y: np.ndarray
    sigma2: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.complex128)
        if not np.all(np.isfinite(y.view(np.float64))):
            raise ValueError("received vector must be finite")
        if self.sigma2 < 0:
            raise ValueError("noise variance must be nonnegative")
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "y", y)


def _check_correlation_matrix(r: np.ndarray, name: str) -> np.ndarray:
    r = np.asarray(r, dtype=np.complex128)
    if r.ndim != 2 or r.shape[0] != r.shape[1] or r.shape[0] < 1:
        raise ValueError(f"{name} must be a square matrix, got shape {r.shape}")
    if np.max(np.abs(r - r.conj().T)) > 1e-12:
        raise ValueError(f"{name} is not Hermitian within 1e-12")
    if np.max(np.abs(np.diagonal(r) - 1.0)) > 1e-10:
        raise ValueError(f"{name} must have a unit diagonal")
    if np.linalg.eigvalsh(r).min() < -1e-10:
        raise ValueError(f"{name} is not positive semidefinite")
    r = r.copy()
    r.flags.writeable = False
    return r


@dataclass(frozen=True)
class CorrelationSpec:
    """Transmit/receive correlation matrices with a record of where they came from."""

    r_tx: np.ndarray
    r_rx: np.ndarray
    provenance: str  # "identity" | "exponential" | "estimated"
    beta_tx: float | None = None
    beta_rx: float | None = None

    def __post_init__(self):
        if self.provenance not in ("identity", "exponential", "estimated"):
            raise ValueError(f"unknown correlation provenance {self.provenance!r}")
        object.__setattr__(self, "r_tx", _check_correlation_matrix(self.r_tx, "r_tx"))
        object.__setattr__(self, "r_rx", _check_correlation_matrix(self.r_rx, "r_rx"))

    @property
    def nt(self) -> int:
        return self.r_tx.shape[0]

    @property
    def nr(self) -> int:
        return self.r_rx.shape[0]

    @classmethod
    def identity(cls, nt: int, nr: int) -> "CorrelationSpec":
        return cls(np.eye(nt), np.eye(nr), "identity")

    @classmethod
    def exponential(cls, nt: int, nr: int, beta_tx: float, beta_rx: float) -> "CorrelationSpec":
        return cls(
            exponential_correlation(nt, beta_tx),
            exponential_correlation(nr, beta_rx),
            "exponential",
            beta_tx=beta_tx,
            beta_rx=beta_rx,
        )

    @classmethod
    def estimated(cls, r_tx: np.ndarray, r_rx: np.ndarray) -> "CorrelationSpec":
        return cls(r_tx, r_rx, "estimated")


def exponential_correlation(n: int, beta: float) -> np.ndarray:
    """Toeplitz correlation matrix with entry (i, j) = exp(-beta)^|i-j|."""
    if n < 1:
        raise ValueError("matrix size must be at least 1")
    if beta < 0:
        raise ValueError("decay coefficient must be nonnegative")
    r_c = np.exp(-beta)
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n)))
    return r_c ** lags.astype(float)


def hermitian_sqrt(r: np.ndarray) -> np.ndarray:
    """Unique Hermitian PSD square root via eigendecomposition.

    Eigenvalues in [-1e-6, 0) are rounding noise and clipped to 0; anything
    lower means the input is not PSD and is rejected.
    """
    r = np.asarray(r, dtype=np.complex128)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {r.shape}")
    if np.max(np.abs(r - r.conj().T)) > _HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(r)
    if w.min() < _EIGENVALUE_FLOOR:
        raise ValueError(f"matrix has a significantly negative eigenvalue ({w.min():.3e})")
    w = np.clip(w, 0.0, None)
    s = (v * np.sqrt(w)) @ v.conj().T
    return (s + s.conj().T) / 2


def draw_iid_rayleigh(nr: int, nt: int, rng: np.random.Generator) -> ChannelMatrix:
    """Draw an nr-by-nt matrix of i.i.d. CN(0, 1) entries (variance 1/2 per real dimension)."""
    if nr < 1 or nt < 1:
        raise ValueError("channel dimensions must be at least 1")
    h = (rng.standard_normal((nr, nt)) + 1j * rng.standard_normal((nr, nt))) / np.sqrt(2.0)
    return ChannelMatrix(h)


def draw_kronecker_channel(spec: CorrelationSpec, rng: np.random.Generator) -> ChannelMatrix:
    """Draw a correlated channel by coloring an i.i.d. draw with the spec's matrix roots."""
    h_bar = draw_iid_rayleigh(spec.nr, spec.nt, rng).entries
    h = hermitian_sqrt(spec.r_rx) @ h_bar @ hermitian_sqrt(spec.r_tx)
    return ChannelMatrix(h)


def apply_awgn(
    x: np.ndarray, h: ChannelMatrix, sigma2: float, rng: np.random.Generator
) -> NoisySnapshot:
    """Propagate a transmit vector and add complex Gaussian noise.

    ``sigma2`` is the noise variance per real dimension, so each received
    entry carries total noise power 2*sigma2.
    """
    if sigma2 < 0:
        raise ValueError("noise variance must be nonnegative")
    entries = h.entries if isinstance(h, ChannelMatrix) else np.asarray(h, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.size != entries.shape[1]:
        raise ValueError(f"transmit vector length {x.size} does not match nt={entries.shape[1]}")
    nr = entries.shape[0]
    noise = np.sqrt(sigma2) * (rng.standard_normal(nr) + 1j * rng.standard_normal(nr))
    return NoisySnapshot(entries @ x + noise, float(sigma2))
