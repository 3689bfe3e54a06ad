"""Command-line front end: simulate, bound, compare, measurements, fixtures."""

from __future__ import annotations

import argparse
import configparser
import sys

import numpy as np

from . import measurements as meas
from .channel import CorrelationSpec
from .detect import SearchSpaceError
from .engine import (
    AberCurve,
    SimulationConfig,
    compare_sm_smx,
    emit_csv,
    parse_channel_source,
    run_bound,
    run_monte_carlo,
)
from .measurements import MeasurementFormatError

__all__ = ["main", "build_parser"]


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    """Expand ``start:step:stop`` (stop inclusive) or a comma list into a grid."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        if count < 1:
            raise ValueError(f"empty SNR range {text!r}")
        return tuple(start + i * step for i in range(count))
    return tuple(float(p) for p in text.split(","))


_CONFIG_KEYS = {
    "scheme": str,
    "nt": int,
    "nr": int,
    "mod_order": int,
    "snr": str,
    "channel": str,
    "bin": int,
    "seed": int,
    "min_errors": int,
    "max_bits": int,
    "pep": str,
    "out": str,
    "normalize": bool,
}


def _load_config_file(path) -> dict:
    """Read the INI experiment file; [simulation] holds the same keys as the CLI flags."""
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise OSError(f"cannot read config file {path}")
    if "simulation" not in parser:
        raise ValueError(f"{path} has no [simulation] section")
    out = {}
    section = parser["simulation"]
    for key, value in section.items():
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}: unknown config key {key!r}")
        kind = _CONFIG_KEYS[key]
        if kind is bool:
            out[key] = section.getboolean(key)
        else:
            out[key] = kind(value)
    return out


def _merged_option(args, file_values: dict, name: str, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in file_values:
        return file_values[name]
    return default


def _simulation_config(args, require_out: bool = False) -> tuple[SimulationConfig, str | None]:
    file_values = _load_config_file(args.config) if args.config else {}

    def opt(name, default=None):
        return _merged_option(args, file_values, name, default)

    scheme = opt("scheme")
    nt = opt("nt")
    nr = opt("nr")
    mod_order = opt("mod_order")
    snr = opt("snr")
    channel = opt("channel", "iid")
    for label, value in (("--scheme", scheme), ("--nt", nt), ("--nr", nr),
                         ("--mod-order", mod_order), ("--snr", snr)):
        if value is None:
            raise ValueError(f"{label} is required (flag or config file)")
    source = parse_channel_source(
        str(channel), bin=int(opt("bin", 1)), normalize=bool(opt("normalize", True))
    )
    config = SimulationConfig(
        scheme=str(scheme).upper(),
        nt=int(nt),
        nr=int(nr),
        mod_order=int(mod_order),
        snr_grid_db=_parse_snr_grid(str(snr)),
        channel_source=source,
        min_bit_errors=int(opt("min_errors", 500)),
        max_bits=int(opt("max_bits", 100_000_000)),
        seed=int(opt("seed", 0)),
        pep_mode=str(opt("pep", "exact")),
    )
    out = opt("out")
    if require_out and out is None:
        raise ValueError("--out is required")
    return config, out


def _add_simulation_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI experiment file; flags override its values")
    sub.add_argument("--scheme", choices=["SM", "SMX", "sm", "smx"])
    sub.add_argument("--nt", type=int, help="transmit antennas (power of two)")
    sub.add_argument("--nr", type=int, help="receive antennas")
    sub.add_argument("--mod-order", type=int, help="QAM order M")
    sub.add_argument("--snr", help="SNR grid in dB: start:step:stop or comma list")
    sub.add_argument("--channel", help="iid | expcorr:btx,brx | file:<path> (default iid)")
    sub.add_argument("--bin", type=int, help="frequency bin for file channels (default 1)")
    sub.add_argument("--no-normalize", dest="normalize", action="store_const", const=False,
                     help="keep raw measurement power instead of unit-power normalization")
    sub.add_argument("--seed", type=int, help="master seed (default 0)")
    sub.add_argument("--min-errors", type=int, help="bit errors per SNR point (default 500)")
    sub.add_argument("--max-bits", type=int, help="bit budget per SNR point (default 1e8)")
    sub.add_argument("--pep", choices=["exact", "chernoff"], help="bound PEP mode")
    sub.add_argument("--out", help="output CSV path")


def _cmd_simulate(args) -> int:
    config, out = _simulation_config(args, require_out=True)
    curve = run_monte_carlo(config, workers=args.workers)
    if args.with_bound:
        curve = curve.with_bound(run_bound(config))
    emit_csv(curve, out)
    for p in curve.points:
        flag = " (max-bits)" if p.hit_max_bits else ""
        print(f"snr {p.snr_db:7.2f} dB  aber {p.aber:.6e}  errors {p.errors}{flag}")
    print(f"wrote {out}")
    return 0


def _cmd_bound(args) -> int:
    config, out = _simulation_config(args, require_out=True)
    curve = AberCurve(points=(), bound=run_bound(config), config_digest=config.digest())
    emit_csv(curve, out)
    for snr, value in curve.bound:
        print(f"snr {snr:7.2f} dB  bound {value:.6e}")
    print(f"wrote {out}")
    return 0


def _cmd_compare(args) -> int:
    shared = dict(
        nr=args.nr,
        snr_grid_db=_parse_snr_grid(args.snr),
        channel_source=parse_channel_source(args.channel, bin=args.bin or 1),
        min_bit_errors=args.min_errors or 500,
        max_bits=args.max_bits or 100_000_000,
        seed=args.seed or 0,
    )

    def mod_order(scheme: str, nt: int) -> int:
        k = args.m - (nt.bit_length() - 1) if scheme == "SM" else args.m // nt
        if scheme == "SMX" and args.m % nt:
            raise ValueError(f"m={args.m} is not divisible by SMX nt={nt}")
        if k < 1:
            raise ValueError(f"no valid modulation order for {scheme} nt={nt} at m={args.m}")
        return 2**k

    sm_config = SimulationConfig(scheme="SM", nt=args.sm_nt,
                                 mod_order=mod_order("SM", args.sm_nt), **shared)
    smx_config = SimulationConfig(scheme="SMX", nt=args.smx_nt,
                                  mod_order=mod_order("SMX", args.smx_nt), **shared)
    targets = tuple(float(t) for t in args.targets.split(","))
    report = compare_sm_smx(sm_config, smx_config, targets=targets, workers=args.workers)
    if args.sm_out:
        emit_csv(report.sm_curve, args.sm_out)
    if args.smx_out:
        emit_csv(report.smx_curve, args.smx_out)
    print("target_aber,snr_sm_db,snr_smx_db,gap_db")
    for g in report.gaps:
        cells = [repr(g.target_aber)] + [
            "" if v is None else f"{v:.4f}" for v in (g.snr_sm_db, g.snr_smx_db, g.gap_db)
        ]
        print(",".join(cells))
    return 0


def _cmd_meas_gof(args) -> int:
    mset = meas.load_measurement_file(args.file, args.bin)
    samples = np.abs(mset.snapshots).ravel()
    report = meas.chi_squared_rayleigh_gof(samples, significance=args.significance)
    print(f"samples        {samples.size}")
    print(f"scale_estimate {report.scale_estimate:.6f}")
    print(f"chi2           {report.chi2_statistic:.4f} (dof {report.dof})")
    print(f"p_value        {report.p_value:.6f}")
    print(f"passed         {report.passed}")
    return 0


def _cmd_meas_fit(args) -> int:
    mset = meas.load_measurement_file(args.file, args.bin)
    spec = meas.estimate_correlation_matrices(mset)
    beta_tx, mse_tx = meas.fit_exponential_decay(spec.r_tx)
    beta_rx, mse_rx = meas.fit_exponential_decay(spec.r_rx)
    print(f"beta_tx {beta_tx:.6f}  mse {mse_tx:.3e}")
    print(f"beta_rx {beta_rx:.6f}  mse {mse_rx:.3e}")
    return 0


def _cmd_meas_select(args) -> int:
    sets = [meas.load_measurement_file(path, args.bin) for path in args.files]
    ranked = meas.select_channels(sets, args.mode)
    print("rank,location,device,score")
    for i, entry in enumerate(ranked, start=1):
        print(f"{i},{entry.mset.location_tag},{entry.mset.device_tag},{entry.score:.6e}")
    return 0


def _cmd_meas_virtual_array(args) -> int:
    walk = meas.load_measurement_file(args.file, args.bin)
    va = meas.build_virtual_array(walk, max_size=args.max_size,
                                  allow_any_device=args.allow_any_device)
    print(f"virtual elements  {va.nt_virtual}")
    print(f"receive rows      {va.channel.shape[0]}")
    print(f"rayleigh_mean     {va.rayleigh_mean:.4f}")
    print(f"rayleigh_variance {va.rayleigh_variance:.4f}")
    if args.out:
        meas.save_virtual_array(va, args.out, location_tag=walk.location_tag or "virtual")
        print(f"wrote {args.out}")
    return 0


def _cmd_meas_export(args) -> int:
    meas.export_measurement_csv(args.file, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_fixtures_generate(args) -> int:
    if args.beta_tx is None and args.beta_rx is None:
        spec = CorrelationSpec.identity(args.nt, args.nr)
    elif args.beta_tx is not None and args.beta_rx is not None:
        spec = CorrelationSpec.exponential(args.nt, args.nr, args.beta_tx, args.beta_rx)
    else:
        raise ValueError("give both --beta-tx and --beta-rx, or neither for i.i.d.")
    rng = np.random.default_rng(args.seed)
    meas.synthesize_measurement_file(
        args.out, spec, args.snapshots, args.bins, rng,
        device_tag=args.device_tag, location_tag=args.location_tag,
    )
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smsim",
        description="SM versus SMX link simulator: Monte Carlo ABER, union bounds, "
        "and measured-channel processing.",
    )
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel trial blocks (default: SMSIM_WORKERS or 1)")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="Monte Carlo ABER sweep to CSV")
    _add_simulation_flags(sim)
    sim.add_argument("--with-bound", action="store_true",
                     help="attach the union bound column (SM only)")
    sim.set_defaults(handler=_cmd_simulate)

    bound = commands.add_parser("bound", help="union-bound curve to CSV (SM only)")
    _add_simulation_flags(bound)
    bound.set_defaults(handler=_cmd_bound)

    comp = commands.add_parser("compare", help="SM vs SMX SNR gaps at equal spectral efficiency")
    comp.add_argument("--m", type=int, required=True, help="bits per channel use")
    comp.add_argument("--nr", type=int, required=True)
    comp.add_argument("--sm-nt", type=int, required=True)
    comp.add_argument("--smx-nt", type=int, required=True)
    comp.add_argument("--snr", required=True)
    comp.add_argument("--channel", default="iid")
    comp.add_argument("--bin", type=int)
    comp.add_argument("--seed", type=int)
    comp.add_argument("--min-errors", type=int)
    comp.add_argument("--max-bits", type=int)
    comp.add_argument("--targets", default="1e-2,1e-3", help="comma list of target ABERs")
    comp.add_argument("--sm-out", help="CSV path for the SM curve")
    comp.add_argument("--smx-out", help="CSV path for the SMX curve")
    comp.set_defaults(handler=_cmd_compare)

    measurements = commands.add_parser("measurements", help="measured-channel processing")
    meas_sub = measurements.add_subparsers(dest="subcommand", required=True)

    gof = meas_sub.add_parser("gof", help="chi-squared Rayleigh goodness-of-fit screen")
    gof.add_argument("--file", required=True)
    gof.add_argument("--bin", type=int, default=1)
    gof.add_argument("--significance", type=float, default=0.01)
    gof.set_defaults(handler=_cmd_meas_gof)

    fit = meas_sub.add_parser("fit", help="estimate correlation and fit exponential decay")
    fit.add_argument("--file", required=True)
    fit.add_argument("--bin", type=int, default=1)
    fit.set_defaults(handler=_cmd_meas_fit)

    select = meas_sub.add_parser("select", help="rank captures for correlation properties")
    select.add_argument("--mode", choices=["uncorrelated", "correlated"], required=True)
    select.add_argument("--bin", type=int, default=1)
    select.add_argument("files", nargs="+")
    select.set_defaults(handler=_cmd_meas_select)

    varr = meas_sub.add_parser("virtual-array", help="build the large-scale virtual array")
    varr.add_argument("--file", required=True)
    varr.add_argument("--bin", type=int, default=1)
    varr.add_argument("--max-size", type=int, default=256)
    varr.add_argument("--allow-any-device", action="store_true")
    varr.add_argument("--out", help="store the array as a 1-snapshot capture file")
    varr.set_defaults(handler=_cmd_meas_virtual_array)

    export = meas_sub.add_parser("export", help="dump a capture file as CSV")
    export.add_argument("--file", required=True)
    export.add_argument("--out", required=True)
    export.set_defaults(handler=_cmd_meas_export)

    fixtures = commands.add_parser("fixtures", help="synthetic measurement fixtures")
    fix_sub = fixtures.add_subparsers(dest="subcommand", required=True)
    gen = fix_sub.add_parser("generate", help="write a synthetic capture file")
    gen.add_argument("--out", required=True)
    gen.add_argument("--nr", type=int, default=4)
    gen.add_argument("--nt", type=int, default=4)
    gen.add_argument("--snapshots", type=int, default=1024)
    gen.add_argument("--bins", type=int, default=1)
    gen.add_argument("--beta-tx", type=float)
    gen.add_argument("--beta-rx", type=float)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--device-tag", default=meas.REFERENCE_DEVICE_TAG)
    gen.add_argument("--location-tag", default="synthetic")
    gen.set_defaults(handler=_cmd_fixtures_generate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except SearchSpaceError as exc:
        print(f"error: infeasible configuration: {exc}", file=sys.stderr)
        return 3
    except MeasurementFormatError as exc:
        print(f"error: measurement format: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: i/o failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
