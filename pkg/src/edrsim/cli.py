"""Command-line front end: gen-trace, run, compare, sweep."""

import argparse
import csv
import io
import json
import os
import sys
import tempfile

from . import trace as trace_mod
from .config import ConfigError, RunConfig, load_config
from .controller import default_config
from .refresh import RefreshConfig
from .sim import ComparisonReport, RunReport, compare, run
from .trace import TraceArrays, TraceHeader


def _atomic_write(path: str, data: bytes) -> None:
    """Write-temp-then-rename so readers never see partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-edrsim-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def _with_seed(spec, seed: int | None):
    if seed is None:
        return spec
    return trace_mod.SyntheticTraceSpec(
        phases=spec.phases, rng_seed=seed,
        accesses_per_kilo_instr=spec.accesses_per_kilo_instr,
        block_bytes=spec.block_bytes)


def _load_trace_for(cfg: RunConfig, seed: int | None) -> TraceArrays:
    if cfg.trace_path:
        with open(cfg.trace_path, "rb") as fh:
            _, arrays = trace_mod.read_trace_arrays(fh)
        return arrays
    if cfg.synthetic is None:
        raise ConfigError("config provides neither a trace path nor a synthetic spec")
    return trace_mod.generate_synthetic(_with_seed(cfg.synthetic, seed))


def _warmup_for(cfg: RunConfig, arrays: TraceArrays) -> int:
    if cfg.warmup_instructions is not None:
        return cfg.warmup_instructions
    return int(arrays.instructions * cfg.warmup_fraction)


def _interval_csv(report: RunReport) -> bytes:
    rows = []
    for iv in report.intervals:
        e = iv.energy
        rows.append([iv.index, iv.colors, repr(iv.stats.active_fraction),
                     iv.stats.l2_hits, iv.stats.l2_misses,
                     iv.stats.refreshed_lines, repr(e.le_l2), repr(e.de_l2),
                     repr(e.re_l2), repr(e.e_dram), repr(e.e_algo),
                     repr(e.total)])
    return _csv_bytes(
        ["interval", "colors", "f_a", "h_l2", "m_l2", "n_r", "le_l2",
         "de_l2", "re_l2", "e_dram", "e_algo", "total"], rows)


def _comparison_csv(report: ComparisonReport) -> bytes:
    rows = [[r.scheme_name, repr(r.pct_energy_saved),
             repr(r.pct_perf_improvement), repr(r.delta_rpki),
             repr(r.delta_mpki), repr(r.active_ratio_pct), repr(r.rpki),
             repr(r.mpki), repr(r.total_energy_j)] for r in report.rows]
    return _csv_bytes(
        ["scheme", "pct_energy_saved", "pct_perf_improvement", "delta_rpki",
         "delta_mpki", "active_ratio_pct", "rpki", "mpki", "total_energy_j"],
        rows)


def cmd_gen_trace(args) -> int:
    cfg = load_config(args.config)
    if cfg.synthetic is None:
        raise ConfigError("gen-trace needs a [synthetic] section")
    arrays = trace_mod.generate_synthetic(_with_seed(cfg.synthetic, args.seed))
    header = TraceHeader(record_count=len(arrays),
                         page_size_bytes=cfg.geometry.page_bytes)
    buf = io.BytesIO()
    trace_mod.write_trace_arrays(arrays, header, buf)
    _atomic_write(args.out, buf.getvalue())
    print(f"wrote {len(arrays)} records ({arrays.instructions} instructions) "
          f"to {args.out}")
    return 0


def _require_schemes(cfg: RunConfig, least: int) -> None:
    if len(cfg.schemes) < least:
        raise ConfigError(f"config needs at least {least} [scheme.*] section(s)")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    _require_schemes(cfg, 1)
    arrays = _load_trace_for(cfg, args.seed)
    warmup = _warmup_for(cfg, arrays)
    os.makedirs(args.out, exist_ok=True)
    for spec in cfg.schemes:
        report = run(arrays, spec, cfg.geometry, cfg.timing, cfg.energy,
                     warmup_instructions=warmup,
                     interval_instructions=cfg.interval_instructions)
        base = os.path.join(args.out, f"report-{spec.name}")
        _atomic_write(base + ".json", _json_bytes(report.to_dict()))
        _atomic_write(base + ".intervals.csv", _interval_csv(report))
        print(f"{spec.name}: {report.total_energy_j:.6e} J, "
              f"{report.total_cycles} cycles, RPKI {report.rpki:.2f}, "
              f"MPKI {report.mpki:.3f}")
    return 0


def cmd_compare(args) -> int:
    cfg = load_config(args.config)
    _require_schemes(cfg, 2)
    arrays = _load_trace_for(cfg, args.seed)
    warmup = _warmup_for(cfg, arrays)
    report = compare(arrays, cfg.schemes, cfg.geometry, cfg.timing, cfg.energy,
                     warmup_instructions=warmup,
                     interval_instructions=cfg.interval_instructions,
                     threads=args.threads)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "comparison.json"),
                  _json_bytes(report.to_dict()))
    _atomic_write(os.path.join(args.out, "comparison.csv"),
                  _comparison_csv(report))
    for name, rep in report.reports.items():
        _atomic_write(os.path.join(args.out, f"report-{name}.json"),
                      _json_bytes(rep.to_dict()))
    print(f"baseline {report.baseline_name}: "
          f"{report.baseline.total_energy_j:.6e} J")
    for row in report.rows:
        print(f"{row.scheme_name}: saved {row.pct_energy_saved:.2f}%, "
              f"perf {row.pct_perf_improvement:+.2f}%, "
              f"dRPKI {row.delta_rpki:.2f}, dMPKI {row.delta_mpki:.4f}, "
              f"active {row.active_ratio_pct:.1f}%")
    return 0


_SWEEPABLE = ("refresh_period_us", "l2_size_kb", "beta", "delta")


def _apply_sweep_value(cfg: RunConfig, parameter: str, value: float) -> RunConfig:
    from dataclasses import replace

    if parameter == "refresh_period_us":
        schemes = []
        for s in cfg.schemes:
            if s.refresh is not None:
                refresh = RefreshConfig(retention_period_us=value,
                                        clock_ghz=s.refresh.clock_ghz,
                                        phases=s.refresh.phases)
                schemes.append(replace(s, refresh=refresh))
            else:
                schemes.append(s)
        return RunConfig(**{**cfg.__dict__, "schemes": schemes})
    if parameter == "l2_size_kb":
        geometry = replace(cfg.geometry, size_bytes=int(value) * 1024)
        schemes = []
        for s in cfg.schemes:
            if s.controller is not None:
                schemes.append(replace(s, controller=default_config(
                    geometry,
                    granularity=s.controller.granularity,
                    delta=s.controller.delta,
                    beta=s.controller.beta,
                    interval_instructions=s.controller.interval_instructions)))
            else:
                schemes.append(s)
        return RunConfig(**{**cfg.__dict__, "geometry": geometry,
                            "schemes": schemes})
    if parameter in ("beta", "delta"):
        schemes = []
        for s in cfg.schemes:
            if s.controller is not None:
                ctrl = replace(s.controller, **{
                    parameter: float(value) if parameter == "beta" else int(value)})
                schemes.append(replace(s, controller=ctrl))
            else:
                schemes.append(s)
        return RunConfig(**{**cfg.__dict__, "schemes": schemes})
    raise ConfigError(f"parameter must be one of {_SWEEPABLE}")


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    _require_schemes(cfg, 2)
    if args.parameter not in _SWEEPABLE:
        raise ConfigError(f"parameter must be one of {_SWEEPABLE}")
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("--values must list at least one value")

    rows = []
    for value in values:
        swept = _apply_sweep_value(cfg, args.parameter, value)
        arrays = _load_trace_for(swept, args.seed)
        warmup = _warmup_for(swept, arrays)
        report = compare(arrays, swept.schemes, swept.geometry, swept.timing,
                         swept.energy, warmup_instructions=warmup,
                         interval_instructions=swept.interval_instructions,
                         threads=args.threads)
        rows.append([args.parameter, repr(value), report.baseline_name,
                     repr(0.0), repr(0.0), repr(0.0), repr(0.0),
                     repr(report.baseline.active_ratio_pct),
                     repr(report.baseline.rpki), repr(report.baseline.mpki),
                     repr(report.baseline.total_energy_j)])
        for r in report.rows:
            rows.append([args.parameter, repr(value), r.scheme_name,
                         repr(r.pct_energy_saved), repr(r.pct_perf_improvement),
                         repr(r.delta_rpki), repr(r.delta_mpki),
                         repr(r.active_ratio_pct), repr(r.rpki), repr(r.mpki),
                         repr(r.total_energy_j)])
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "sweep.csv"), _csv_bytes(
        ["parameter", "value", "scheme", "pct_energy_saved",
         "pct_perf_improvement", "delta_rpki", "delta_mpki",
         "active_ratio_pct", "rpki", "mpki", "total_energy_j"], rows))
    print(f"swept {args.parameter} over {len(values)} value(s) -> "
          f"{os.path.join(args.out, 'sweep.csv')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="edrsim",
        description="Trace-driven energy simulator for eDRAM last-level caches")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out_dir=True):
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the synthetic trace seed")
        if needs_out_dir:
            p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("gen-trace", help="write a synthetic binary trace")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output trace file path")
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("run", help="run each configured scheme, write reports")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run all schemes and compare to baseline")
    common(p)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="repeat compare over a parameter range")
    common(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--parameter", required=True,
                   help=f"one of {', '.join(_SWEEPABLE)}")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
