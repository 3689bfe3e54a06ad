"""Configuration-driven Monte Carlo ABER engine, bound evaluation, and CSV emission."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .analysis import union_bound_aber
from .channel import CorrelationSpec, hermitian_sqrt
from .detect import smx_candidates, sm_ml_words, smx_ml_words
from .measurements import MeasurementSet, estimate_correlation_matrices, load_measurement_file
from .modem import QamConstellation, gray_qam

__all__ = [
    "WORKERS_ENV",
    "ChannelSource",
    "SimulationConfig",
    "AberPoint",
    "AberCurve",
    "GapEntry",
    "ComparisonReport",
    "parse_channel_source",
    "run_monte_carlo",
    "run_bound",
    "compare_sm_smx",
    "emit_csv",
    "read_csv",
    "snr_db_to_sigma2",
    "snr_db_to_noise_power",
    "snr_at_aber",
]

WORKERS_ENV = "SMSIM_WORKERS"
CSV_HEADER = "snr_db,aber,bits,errors,bound"


def snr_db_to_sigma2(snr_db: float) -> float:
    """Noise variance per real dimension at unit symbol energy (SNR = 1/(2 sigma^2))."""
    return 10.0 ** (-snr_db / 10.0) / 2.0


def snr_db_to_noise_power(snr_db: float) -> float:
    """Noise variance per complex receive sample; this is what the PEP formulas take."""
    return 10.0 ** (-snr_db / 10.0)


@dataclass(frozen=True)
class ChannelSource:
    """Where channel realizations come from: synthetic i.i.d./Kronecker draws or a capture file."""

    kind: str  # "iid" | "kronecker" | "measurement"
    beta_tx: float | None = None
    beta_rx: float | None = None
    path: str | None = None
    bin: int = 1
    normalize: bool = True

    def __post_init__(self):
        if self.kind == "iid":
            pass
        elif self.kind == "kronecker":
            if self.beta_tx is None or self.beta_rx is None:
                raise ValueError("kronecker source needs beta_tx and beta_rx")
            if self.beta_tx < 0 or self.beta_rx < 0:
                raise ValueError("decay coefficients must be nonnegative")
        elif self.kind == "measurement":
            if not self.path:
                raise ValueError("measurement source needs a file path")
            if self.bin < 1:
                raise ValueError("bin index must be at least 1")
        else:
            raise ValueError(f"unknown channel source {self.kind!r}")

    def describe(self) -> str:
        if self.kind == "iid":
            return "iid"
        if self.kind == "kronecker":
            return f"expcorr:{self.beta_tx},{self.beta_rx}"
        return f"file:{self.path}"


def parse_channel_source(text: str, bin: int = 1, normalize: bool = True) -> ChannelSource:
    """Parse the CLI channel syntax: ``iid``, ``expcorr:btx,brx`` or ``file:<path>``."""
    if text == "iid":
        return ChannelSource("iid")
    if text.startswith("expcorr:"):
        parts = text[len("expcorr:"):].split(",")
        if len(parts) != 2:
            raise ValueError(f"expected expcorr:beta_tx,beta_rx, got {text!r}")
        return ChannelSource("kronecker", beta_tx=float(parts[0]), beta_rx=float(parts[1]))
    if text.startswith("file:"):
        return ChannelSource("measurement", path=text[len("file:"):], bin=bin, normalize=normalize)
    raise ValueError(f"unknown channel source {text!r}")


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class SimulationConfig:
    """One ABER experiment: scheme, geometry, SNR grid, channel source and stop rule."""

    scheme: str  # "SM" | "SMX"
    nt: int
    nr: int
    mod_order: int
    snr_grid_db: tuple[float, ...]
    channel_source: ChannelSource
    min_bit_errors: int = 500
    max_bits: int = 100_000_000
    seed: int = 0
    pep_mode: str = "exact"
    output_path: str | None = None

    def __post_init__(self):
        if self.scheme not in ("SM", "SMX"):
            raise ValueError(f"scheme must be SM or SMX, got {self.scheme!r}")
        if not _is_power_of_two(self.nt):
            raise ValueError(f"nt must be a power of two, got {self.nt}")
        if self.nr < 1:
            raise ValueError("nr must be positive")
        if not _is_power_of_two(self.mod_order) or self.mod_order < 2:
            raise ValueError(f"modulation order must be a power of two >= 2, got {self.mod_order}")
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise ValueError("SNR grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_grid_db", grid)
        if self.min_bit_errors < 1 or self.max_bits < 1:
            raise ValueError("stop rule must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")
        if self.pep_mode not in ("exact", "chernoff"):
            raise ValueError(f"pep mode must be exact or chernoff, got {self.pep_mode!r}")

    @property
    def m(self) -> int:
        """Bits per channel use."""
        k_sym = self.mod_order.bit_length() - 1
        if self.scheme == "SM":
            return (self.nt.bit_length() - 1) + k_sym
        return self.nt * k_sym

    def digest(self) -> str:
        payload = {
            "scheme": self.scheme,
            "nt": self.nt,
            "nr": self.nr,
            "mod_order": self.mod_order,
            "snr_grid_db": list(self.snr_grid_db),
            "channel": [
                self.channel_source.kind,
                self.channel_source.beta_tx,
                self.channel_source.beta_rx,
                self.channel_source.path,
                self.channel_source.bin,
                self.channel_source.normalize,
            ],
            "min_bit_errors": self.min_bit_errors,
            "max_bits": self.max_bits,
            "seed": self.seed,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class AberPoint:
    snr_db: float
    aber: float
    bits: int
    errors: int
    hit_max_bits: bool = False


@dataclass(frozen=True)
class AberCurve:
    """Per-SNR ABER estimates, an optional bound overlay, and the config fingerprint."""

    points: tuple[AberPoint, ...]
    bound: tuple[tuple[float, float], ...] | None = None
    config_digest: str = ""

    def with_bound(self, bound) -> "AberCurve":
        return AberCurve(self.points, tuple((float(s), float(v)) for s, v in bound), self.config_digest)


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


class _BlockRunner:
    """Simulates fixed-size blocks of channel uses; pure given (point, block) indices."""

    def __init__(self, config: SimulationConfig, constellation: QamConstellation):
        self.config = config
        self.constellation = constellation
        self.points = constellation.points
        self.m = config.m
        self.k_sym = constellation.bits_per_symbol
        self.nt, self.nr = config.nt, config.nr
        source = config.channel_source
        self.snapshots = None
        if source.kind == "measurement":
            mset = load_measurement_file(source.path, source.bin, normalize=source.normalize)
            if mset.nr < self.nr or mset.nt < self.nt:
                raise ValueError(
                    f"measurement is {mset.nr}x{mset.nt}, cannot serve nr={self.nr}, nt={self.nt}"
                )
            # leading rows/columns serve smaller geometries (virtual-array subsets)
            self.snapshots = np.ascontiguousarray(mset.snapshots[:, : self.nr, : self.nt])
        self.tx_root = self.rx_root = None
        if source.kind == "kronecker":
            spec = CorrelationSpec.exponential(self.nt, self.nr, source.beta_tx, source.beta_rx)
            self.tx_root = hermitian_sqrt(spec.r_tx)
            self.rx_root = hermitian_sqrt(spec.r_rx)
        if config.scheme == "SMX":
            self.candidates = smx_candidates(self.nt, constellation)
            cost = self.nr * self.candidates.shape[0]
            # SMX radiates one unit-energy symbol per antenna; scaling the channel
            # by 1/sqrt(nt) holds the total transmit energy per channel use at 1,
            # the same as SM, so the SNR axis means the same thing for both
            # schemes. Applied to generation and detection alike: ML stays exact.
            self.power_scale = 1.0 / np.sqrt(self.nt)
        else:
            self.candidates = None
            cost = self.nr * self.nt * constellation.order
            self.power_scale = 1.0
        self.block_symbols = int(np.clip(2**21 // max(cost, 1), 64, 8192))

    def _draw_channels(self, rng, block_index: int, count: int) -> np.ndarray:
        if self.snapshots is not None:
            offset = block_index * self.block_symbols
            idx = (offset + np.arange(count)) % self.snapshots.shape[0]
            return self.snapshots[idx]
        shape = (count, self.nr, self.nt)
        h = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        if self.tx_root is not None:
            h = np.einsum("ij,bjk,kl->bil", self.rx_root, h, self.tx_root)
        return h

    def run_block(self, point_index: int, block_index: int, sigma2: float) -> tuple[int, int]:
        """Return (bit errors, bits) for one block; deterministic in its indices."""
        seq = np.random.SeedSequence(entropy=self.config.seed, spawn_key=(point_index, block_index))
        rng = np.random.default_rng(seq)
        b = self.block_symbols
        words = rng.integers(0, 1 << self.m, size=b, dtype=np.int64)
        h = self._draw_channels(rng, block_index, b)
        noise = np.sqrt(sigma2) * (
            rng.standard_normal((b, self.nr)) + 1j * rng.standard_normal((b, self.nr))
        )
        if self.config.scheme == "SM":
            ant = (words >> self.k_sym).astype(np.intp)
            sym = self.points[words & (self.constellation.order - 1)]
            y = h[np.arange(b), :, ant] * sym[:, None] + noise
            rx_words, _ = sm_ml_words(y, h, self.constellation)
        else:
            h = h * self.power_scale
            shifts = (self.nt - 1 - np.arange(self.nt)) * self.k_sym
            digits = (words[:, None] >> shifts[None, :]) & (self.constellation.order - 1)
            x = self.points[digits]
            y = np.einsum("brt,bt->br", h, x) + noise
            rx_words, _ = smx_ml_words(y, h, self.candidates)
        errors = int(np.bitwise_count(words ^ rx_words).sum())
        return errors, b * self.m


def _run_point(
    runner: _BlockRunner, point_index: int, snr_db: float, workers: int
) -> AberPoint:
    config = runner.config
    sigma2 = snr_db_to_sigma2(snr_db)
    errors = bits = 0

    def done() -> bool:
        return errors >= config.min_bit_errors or bits >= config.max_bits

    if workers <= 1:
        block = 0
        while not done():
            e, n = runner.run_block(point_index, block, sigma2)
            errors += e
            bits += n
            block += 1
    else:
        # blocks are independent; consuming results in index order keeps the
        # outcome identical to the single-worker run
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = {}
            next_submit = next_consume = 0
            while not done():
                while len(pending) < 2 * workers:
                    pending[next_submit] = pool.submit(
                        runner.run_block, point_index, next_submit, sigma2
                    )
                    next_submit += 1
                e, n = pending.pop(next_consume).result()
                next_consume += 1
                errors += e
                bits += n
            for fut in pending.values():
                fut.cancel()
    return AberPoint(
        snr_db=float(snr_db),
        aber=errors / bits,
        bits=bits,
        errors=errors,
        hit_max_bits=errors < config.min_bit_errors,
    )


def run_monte_carlo(config: SimulationConfig, workers: int | None = None) -> AberCurve:
    """Estimate the ABER curve by simulation.

    Synthetic sources draw a fresh channel per transmitted vector; measurement
    sources cycle through the file's snapshots in order, restarting at every
    SNR point. Both schemes radiate unit average total energy per channel use
    (SMX is scaled by 1/sqrt(nt)), so SNR is the total-transmit-energy to
    noise ratio in either case. Output is fully determined by (config, seed)
    regardless of the worker count (workers default to the SMSIM_WORKERS
    environment variable).
    """
    if workers is None:
        workers = _default_workers()
    constellation = gray_qam(config.mod_order)
    runner = _BlockRunner(config, constellation)
    points = tuple(
        _run_point(runner, p, snr_db, workers)
        for p, snr_db in enumerate(config.snr_grid_db)
    )
    return AberCurve(points=points, bound=None, config_digest=config.digest())


def _bound_correlation(config: SimulationConfig) -> CorrelationSpec:
    source = config.channel_source
    if source.kind == "iid":
        return CorrelationSpec.identity(config.nt, config.nr)
    if source.kind == "kronecker":
        return CorrelationSpec.exponential(config.nt, config.nr, source.beta_tx, source.beta_rx)
    mset = load_measurement_file(source.path, source.bin, normalize=source.normalize)
    if mset.nr < config.nr or mset.nt < config.nt:
        raise ValueError(
            f"measurement is {mset.nr}x{mset.nt}, cannot serve nr={config.nr}, nt={config.nt}"
        )
    sliced = MeasurementSet(
        mset.snapshots[:, : config.nr, : config.nt],
        mset.num_bins,
        mset.selected_bin,
        mset.device_tag,
        mset.location_tag,
    )
    return estimate_correlation_matrices(sliced)


def run_bound(config: SimulationConfig) -> tuple[tuple[float, float], ...]:
    """Evaluate the SM union bound over the config's SNR grid."""
    if config.scheme != "SM":
        raise ValueError("no analytical ABER bound exists for SMX")
    constellation = gray_qam(config.mod_order)
    spec = _bound_correlation(config)
    return tuple(
        (
            float(snr_db),
            union_bound_aber(
                config.nt, constellation, spec, snr_db_to_noise_power(snr_db), config.pep_mode
            ),
        )
        for snr_db in config.snr_grid_db
    )


def snr_at_aber(points, target: float) -> float | None:
    """SNR where the curve crosses ``target``, log-linear interpolated; None if not bracketed."""
    if target <= 0:
        raise ValueError("target ABER must be positive")
    usable = [(p.snr_db, p.aber) for p in points if p.aber > 0]
    for (s0, a0), (s1, a1) in zip(usable, usable[1:]):
        if a0 == target:
            return s0
        if a0 > target >= a1:
            t = (math.log10(a0) - math.log10(target)) / (math.log10(a0) - math.log10(a1))
            return s0 + t * (s1 - s0)
    if usable and usable[-1][1] == target:
        return usable[-1][0]
    return None


@dataclass(frozen=True)
class GapEntry:
    target_aber: float
    snr_sm_db: float | None
    snr_smx_db: float | None
    gap_db: float | None


@dataclass(frozen=True)
class ComparisonReport:
    """SM-versus-SMX SNR gaps at target ABERs, plus the two underlying curves."""

    sm_curve: AberCurve
    smx_curve: AberCurve
    gaps: tuple[GapEntry, ...]


def compare_sm_smx(
    sm_config: SimulationConfig,
    smx_config: SimulationConfig,
    targets: tuple[float, ...] = (1e-2, 1e-3),
    workers: int | None = None,
) -> ComparisonReport:
    """Run both schemes over the same channel seed discipline and report SNR gaps.

    A positive gap means SM reaches the target ABER at that many dB lower SNR
    than SMX.
    """
    if sm_config.scheme != "SM" or smx_config.scheme != "SMX":
        raise ValueError("expected an SM config and an SMX config, in that order")
    if sm_config.m != smx_config.m:
        raise ValueError(
            f"configs must share spectral efficiency, got m={sm_config.m} vs m={smx_config.m}"
        )
    if sm_config.nr != smx_config.nr:
        raise ValueError("configs must share the receive antenna count")
    sm_curve = run_monte_carlo(sm_config, workers=workers)
    smx_curve = run_monte_carlo(smx_config, workers=workers)
    gaps = []
    for target in targets:
        snr_sm = snr_at_aber(sm_curve.points, target)
        snr_smx = snr_at_aber(smx_curve.points, target)
        gap = None if snr_sm is None or snr_smx is None else snr_smx - snr_sm
        gaps.append(GapEntry(target, snr_sm, snr_smx, gap))
    return ComparisonReport(sm_curve, smx_curve, tuple(gaps))


def emit_csv(curve: AberCurve, path) -> None:
    """Write a curve in the documented CSV schema (one row per SNR, bound column optional)."""
    by_snr = {p.snr_db: p for p in curve.points}
    bound_by_snr = dict(curve.bound) if curve.bound else {}
    snrs = sorted(set(by_snr) | set(bound_by_snr))
    flagged = [p.snr_db for p in curve.points if p.hit_max_bits]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_digest={curve.config_digest}\n")
        if flagged:
            fh.write("# max_bits_hit=" + ",".join(repr(s) for s in flagged) + "\n")
        fh.write(CSV_HEADER + "\n")
        for snr in snrs:
            p = by_snr.get(snr)
            sim = (repr(p.aber), str(p.bits), str(p.errors)) if p else ("", "", "")
            b = bound_by_snr.get(snr)
            fh.write(
                f"{snr!r},{sim[0]},{sim[1]},{sim[2]},{'' if b is None else repr(b)}\n"
            )


def read_csv(path) -> AberCurve:
    """Read a curve written by :func:`emit_csv`; rejects any other header."""
    digest = ""
    flagged: set[float] = set()
    points = []
    bound = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("config_digest="):
                    digest = body[len("config_digest="):]
                elif body.startswith("max_bits_hit="):
                    flagged = {float(tok) for tok in body[len("max_bits_hit="):].split(",") if tok}
                continue
            if not header_seen:
                if line != CSV_HEADER:
                    raise ValueError(f"unexpected CSV header {line!r}, want {CSV_HEADER!r}")
                header_seen = True
                continue
            cells = line.split(",")
            if len(cells) != 5:
                raise ValueError(f"malformed CSV row {line!r}")
            snr = float(cells[0])
            if cells[1]:
                points.append(
                    AberPoint(
                        snr_db=snr,
                        aber=float(cells[1]),
                        bits=int(cells[2]),
                        errors=int(cells[3]),
                        hit_max_bits=snr in flagged,
                    )
                )
            if cells[4]:
                bound.append((snr, float(cells[4])))
    if not header_seen:
        raise ValueError(f"{path} carries no CSV header")
    return AberCurve(
        points=tuple(points),
        bound=tuple(bound) if bound else None,
        config_digest=digest,
    )
