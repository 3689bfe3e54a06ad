"""Measured-channel file ingestion and the statistics pipeline built on top of it.

File format (little-endian throughout):

* 32-byte header: 24 bytes ASCII magic ``SM-MEASUREMENT-CAPTURE`` (zero padded),
  uint32 format version (currently 1), 4 reserved zero bytes.
* uint32 nr, nt, num_snapshots, num_bins.
* payload: complex64 values, C order, shape (snapshot, bin, rx row, tx column).
* trailer: uint32 byte length followed by that many bytes of UTF-8 JSON
  metadata carrying ``device_tag`` and ``location_tag``.
"""

from __future__ import annotations

import json
import math
import struct
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import CorrelationSpec, hermitian_sqrt

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "REFERENCE_DEVICE_TAG",
    "MeasurementSet",
    "RayleighFitReport",
    "VirtualArray",
    "RankedChannel",
    "write_measurement_file",
    "load_measurement_file",
    "export_measurement_csv",
    "synthesize_measurement_file",
    "chi_squared_rayleigh_gof",
    "estimate_correlation_matrices",
    "fit_exponential_decay",
    "select_channels",
    "build_virtual_array",
    "save_virtual_array",
]

MAGIC = b"SM-MEASUREMENT-CAPTURE".ljust(24, b"\x00")
FORMAT_VERSION = 1
REFERENCE_DEVICE_TAG = "reference"

_HEADER = struct.Struct("<24sI4x")
_DIMS = struct.Struct("<IIII")
_U32 = struct.Struct("<I")


class MeasurementFormatError(ValueError):
    """The file does not follow the documented measurement format."""


@dataclass(frozen=True)
class MeasurementSet:
    """Snapshots of one frequency bin from a measurement file."""

    snapshots: np.ndarray  # (num_snapshots, nr, nt) complex
    num_bins: int
    selected_bin: int
    device_tag: str
    location_tag: str

    def __post_init__(self):
        snaps = np.asarray(self.snapshots, dtype=np.complex128)
        if snaps.ndim != 3 or snaps.shape[0] < 1:
            raise ValueError(f"snapshots must be a (count, nr, nt) stack, got {snaps.shape}")
        if not 1 <= self.selected_bin <= self.num_bins:
            raise ValueError(
                f"selected bin {self.selected_bin} out of range 1..{self.num_bins}"
            )
        snaps = snaps.copy()
        snaps.flags.writeable = False
        object.__setattr__(self, "snapshots", snaps)

    @property
    def nr(self) -> int:
        return self.snapshots.shape[1]

    @property
    def nt(self) -> int:
        return self.snapshots.shape[2]

    def __len__(self) -> int:
        return self.snapshots.shape[0]


@dataclass(frozen=True)
class RayleighFitReport:
    """Outcome of the chi-squared Rayleigh goodness-of-fit screen."""

    chi2_statistic: float
    dof: int
    p_value: float
    passed: bool
    scale_estimate: float


@dataclass(frozen=True)
class VirtualArray:
    """Large virtual transmit array assembled from a walked measurement."""

    channel: np.ndarray  # (receive rows, nt_virtual), unnormalized
    nt_virtual: int
    rayleigh_mean: float
    rayleigh_variance: float


@dataclass(frozen=True)
class RankedChannel:
    """One entry of a channel-selection ranking."""

    mset: MeasurementSet
    score: float


def write_measurement_file(
    path, data: np.ndarray, device_tag: str = "", location_tag: str = ""
) -> None:
    """Write a (num_snapshots, num_bins, nr, nt) complex array in the capture format.

    Values are stored as complex64; feeding complex64 data makes the
    write -> load -> write cycle byte-exact.
    """
    data = np.asarray(data)
    if data.ndim != 4:
        raise ValueError(f"expected a 4-D (snapshot, bin, rx, tx) array, got shape {data.shape}")
    num_snapshots, num_bins, nr, nt = data.shape
    meta = json.dumps({"device_tag": device_tag, "location_tag": location_tag}).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION))
        fh.write(_DIMS.pack(nr, nt, num_snapshots, num_bins))
        fh.write(np.ascontiguousarray(data, dtype="<c8").tobytes())
        fh.write(_U32.pack(len(meta)))
        fh.write(meta)


def _read_raw(path) -> tuple[np.ndarray, str, str]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + _DIMS.size:
        raise MeasurementFormatError(f"{path}: file too short for a measurement header")
    magic, version = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise MeasurementFormatError(f"{path}: bad magic, not a measurement capture")
    if version != FORMAT_VERSION:
        raise MeasurementFormatError(f"{path}: unsupported format version {version}")
    nr, nt, num_snapshots, num_bins = _DIMS.unpack_from(blob, _HEADER.size)
    if min(nr, nt, num_snapshots, num_bins) < 1:
        raise MeasurementFormatError(f"{path}: nonpositive dimension in header")
    count = num_snapshots * num_bins * nr * nt
    start = _HEADER.size + _DIMS.size
    end = start + 8 * count
    if len(blob) < end + _U32.size:
        raise MeasurementFormatError(f"{path}: truncated payload")
    payload = np.frombuffer(blob, dtype="<c8", count=count, offset=start)
    payload = payload.reshape(num_snapshots, num_bins, nr, nt)
    (meta_len,) = _U32.unpack_from(blob, end)
    meta_raw = blob[end + _U32.size : end + _U32.size + meta_len]
    if len(meta_raw) != meta_len:
        raise MeasurementFormatError(f"{path}: truncated metadata block")
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MeasurementFormatError(f"{path}: unreadable metadata block") from exc
    return payload, str(meta.get("device_tag", "")), str(meta.get("location_tag", ""))


def load_measurement_file(path, selected_bin: int, normalize: bool = True) -> MeasurementSet:
    """Load the snapshot sequence of one frequency bin.

    By default snapshots are jointly rescaled to unit average entry power;
    pass ``normalize=False`` to keep raw values.
    """
    payload, device_tag, location_tag = _read_raw(path)
    num_bins = payload.shape[1]
    if not 1 <= selected_bin <= num_bins:
        raise ValueError(f"requested bin {selected_bin} of {num_bins}")
    snaps = payload[:, selected_bin - 1].astype(np.complex128)
    if normalize:
        power = float(np.mean(np.abs(snaps) ** 2))
        if power <= 0:
            raise ValueError(f"{path}: selected bin carries zero power, cannot normalize")
        snaps = snaps / np.sqrt(power)
    return MeasurementSet(snaps, num_bins, selected_bin, device_tag, location_tag)


def export_measurement_csv(path, csv_path) -> None:
    """Dump a capture file as CSV: one row per entry (snapshot, bin, rx, tx, re, im)."""
    payload, _, _ = _read_raw(path)
    num_snapshots, num_bins, nr, nt = payload.shape
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("snapshot,bin,rx,tx,re,im\n")
        for k in range(num_snapshots):
            for b in range(num_bins):
                for r in range(nr):
                    for t in range(nt):
                        v = payload[k, b, r, t]
                        fh.write(
                            f"{k + 1},{b + 1},{r + 1},{t + 1},"
                            f"{float(v.real)!r},{float(v.imag)!r}\n"
                        )


def synthesize_measurement_file(
    path,
    spec: CorrelationSpec,
    num_snapshots: int,
    num_bins: int,
    rng: np.random.Generator,
    device_tag: str = REFERENCE_DEVICE_TAG,
    location_tag: str = "synthetic",
) -> None:
    """Fixture generator: write a capture file of i.i.d. Kronecker-model snapshots."""
    if num_snapshots < 1 or num_bins < 1:
        raise ValueError("snapshot and bin counts must be positive")
    nr, nt = spec.nr, spec.nt
    rx_root = hermitian_sqrt(spec.r_rx)
    tx_root = hermitian_sqrt(spec.r_tx)
    shape = (num_snapshots, num_bins, nr, nt)
    h_bar = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    data = np.einsum("ij,sbjk,kl->sbil", rx_root, h_bar, tx_root)
    write_measurement_file(path, data.astype(np.complex64), device_tag, location_tag)


def chi_squared_rayleigh_gof(samples, significance: float = 0.01) -> RayleighFitReport:
    """Pearson chi-squared test of amplitude samples against a fitted Rayleigh law.

    The scale is the ML estimate, bins are equiprobable under the fit, and one
    degree of freedom is dropped for the estimated scale.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 200:
        raise ValueError(f"need at least 200 samples, got {x.size}")
    if np.any(x <= 0):
        raise ValueError("amplitude samples must be positive")
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must lie in (0, 1)")
    n = x.size
    sigma = math.sqrt(float(np.mean(x**2)) / 2.0)
    k = min(64, max(8, n // 50))
    # equiprobable bin edges under Rayleigh(sigma)
    inner = sigma * np.sqrt(-2.0 * np.log1p(-np.arange(1, k) / k))
    edges = np.concatenate(([0.0], inner, [np.inf]))
    observed, _ = np.histogram(x, bins=edges)
    expected = n / k
    statistic = float(np.sum((observed - expected) ** 2) / expected)
    dof = k - 2
    p_value = float(stats.chi2.sf(statistic, dof))
    return RayleighFitReport(statistic, dof, p_value, p_value >= significance, sigma)


def estimate_correlation_matrices(mset: MeasurementSet) -> CorrelationSpec:
    """One-sided Kronecker-factor estimates across snapshots, unit-diagonal normalized."""
    if len(mset) < 32:
        raise ValueError(f"need at least 32 snapshots to estimate correlation, got {len(mset)}")
    h = mset.snapshots

    def _normalized(raw: np.ndarray, name: str) -> np.ndarray:
        raw = (raw + raw.conj().T) / 2.0
        diag = np.real(np.diagonal(raw))
        if np.any(diag <= 0):
            raise ValueError(f"{name} estimate has a zero-power antenna, cannot normalize")
        d = 1.0 / np.sqrt(diag)
        return d[:, None] * raw * d[None, :]

    r_tx = _normalized(np.mean(np.conj(np.swapaxes(h, 1, 2)) @ h, axis=0), "transmit")
    r_rx = _normalized(np.mean(h @ np.conj(np.swapaxes(h, 1, 2)), axis=0), "receive")
    return CorrelationSpec.estimated(r_tx, r_rx)


def _decay_mse(r_abs: np.ndarray, lags: np.ndarray, r_c: float) -> float:
    return float(np.mean((r_abs - r_c**lags) ** 2))


def fit_exponential_decay(r_hat: np.ndarray, tol: float = 1e-6) -> tuple[float, float]:
    """Fit |entries| of a unit-diagonal correlation matrix to r_c^|i-j|.

    Golden-section search over r_c in [0, 1), bracketed by a coarse scan so a
    dense grid search would land on the same minimum. Returns
    (beta = -ln(r_c), mse); beta is +inf when the best fit is r_c = 0.
    """
    r = np.asarray(r_hat)
    n = r.shape[0]
    if r.ndim != 2 or r.shape[0] != r.shape[1] or n < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got shape {r.shape}")
    if np.max(np.abs(np.diagonal(r) - 1.0)) > 1e-8:
        raise ValueError("correlation matrix must have a unit diagonal")
    r_abs = np.abs(r)
    lags = np.abs(np.subtract.outer(np.arange(n), np.arange(n))).astype(float)

    grid = np.linspace(0.0, 1.0 - 1e-9, 201)
    errs = [_decay_mse(r_abs, lags, g) for g in grid]
    best = int(np.argmin(errs))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid.size - 1)]

    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = _decay_mse(r_abs, lags, c), _decay_mse(r_abs, lags, d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = _decay_mse(r_abs, lags, c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = _decay_mse(r_abs, lags, d)
    r_star = (a + b) / 2.0
    mse = _decay_mse(r_abs, lags, r_star)
    if mse >= _decay_mse(r_abs, lags, 0.0):
        r_star, mse = 0.0, _decay_mse(r_abs, lags, 0.0)
    beta = math.inf if r_star <= 0.0 else -math.log(r_star)
    return beta, mse


def _mean_offdiagonal(r: np.ndarray) -> float:
    n = r.shape[0]
    if n == 1:
        return 0.0
    mask = ~np.eye(n, dtype=bool)
    return float(np.mean(np.abs(r[mask])))


def select_channels(sets: list[MeasurementSet], mode: str) -> list[RankedChannel]:
    """Rank measurement sets the way the small-scale channels were chosen.

    ``uncorrelated`` ranks by ascending mean off-diagonal correlation
    magnitude; ``correlated`` by ascending exponential-decay fit MSE. Ties
    break on location_tag.
    """
    if mode not in ("uncorrelated", "correlated"):
        raise ValueError(f"unknown selection mode {mode!r}")
    if not sets:
        raise ValueError("no measurement sets to rank")
    entries = []
    for mset in sets:
        spec = estimate_correlation_matrices(mset)
        if mode == "uncorrelated":
            score = (_mean_offdiagonal(spec.r_tx) + _mean_offdiagonal(spec.r_rx)) / 2.0
        else:
            _, mse_tx = fit_exponential_decay(spec.r_tx)
            _, mse_rx = fit_exponential_decay(spec.r_rx)
            score = (mse_tx + mse_rx) / 2.0
        entries.append(RankedChannel(mset, score))
    entries.sort(key=lambda e: (e.score, e.mset.location_tag))
    return entries


def build_virtual_array(
    walk: MeasurementSet, max_size: int = 256, allow_any_device: bool = False
) -> VirtualArray:
    """Assemble a large virtual transmit array from a walked measurement.

    Each snapshot is conjugate-transposed so the mobile side transmits, the
    first column of every reversed snapshot becomes one virtual transmit
    element, and every fourth element of the first 4*max_size snapshots is
    kept to decorrelate neighbours. The Rayleigh statistics are computed on a
    globally power-normalized copy; ``channel`` itself stays unnormalized.
    """
    if max_size < 1:
        raise ValueError("max_size must be positive")
    if len(walk) < 4 * max_size:
        raise ValueError(
            f"walk has {len(walk)} snapshots, need {4 * max_size} for {max_size} elements"
        )
    if walk.device_tag != REFERENCE_DEVICE_TAG:
        if not allow_any_device:
            raise ValueError(
                f"walk was captured with device {walk.device_tag!r}; the virtual array "
                f"uses {REFERENCE_DEVICE_TAG!r} captures to exclude body shadowing "
                "(pass allow_any_device=True to override)"
            )
        warnings.warn(
            f"building virtual array from non-{REFERENCE_DEVICE_TAG} device {walk.device_tag!r}",
            stacklevel=2,
        )
    picks = np.arange(max_size) * 4
    reversed_snaps = np.conj(np.swapaxes(walk.snapshots[picks], 1, 2))
    channel = reversed_snaps[:, :, 0].T.copy()  # (walk.nt rows, max_size columns)

    normalized = channel / np.sqrt(np.mean(np.abs(channel) ** 2))
    element_means = np.mean(np.abs(normalized), axis=0)
    return VirtualArray(
        channel=channel,
        nt_virtual=max_size,
        rayleigh_mean=float(np.mean(element_means)),
        rayleigh_variance=float(np.var(element_means)),
    )


def save_virtual_array(
    va: VirtualArray, path, device_tag: str = REFERENCE_DEVICE_TAG, location_tag: str = "virtual"
) -> None:
    """Store a virtual array as a single-snapshot, single-bin capture file."""
    data = va.channel[None, None, :, :].astype(np.complex64)
    write_measurement_file(path, data, device_tag, location_tag)
