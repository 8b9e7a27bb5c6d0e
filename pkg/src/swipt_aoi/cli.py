"""Command-line front end: ``point``, ``sweep``, ``plotdata`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import sweep
from .config import ConfigError, FIELD_TYPES, SystemConfig, format_config, load_config
from .mcsim import DECODE_MODELS

DEFAULT_FIG3_DISTANCES = (30.0, 45.0, 60.0)


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat 'key = value' scenario file (SI units)")
    g = p.add_argument_group("scenario overrides (take precedence over --config)")
    for key, typ in FIELD_TYPES.items():
        g.add_argument(f"--{key.replace('_', '-')}", dest=f"set_{key}", metavar=typ.__name__.upper(), type=str)


def _add_mc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cycles", type=int, default=1_000_000, help="Monte Carlo cycles per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--decode-model", choices=DECODE_MODELS, default="exact-q")


def _methods(text: str) -> tuple[str, ...]:
    methods = tuple(m.strip() for m in text.split(",") if m.strip())
    bad = [m for m in methods if m not in sweep.METHODS]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {sweep.METHODS}")
    return methods


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swipt-aoi", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)

    pt = sub.add_parser("point", help="evaluate one scenario")
    _add_scenario_flags(pt)
    _add_mc_flags(pt)
    pt.add_argument("--methods", type=_methods, default=("analytic",))

    sw = sub.add_parser("sweep", help="sweep one parameter and write a CSV")
    _add_scenario_flags(sw)
    _add_mc_flags(sw)
    sw.add_argument("--methods", type=_methods, default=("analytic",))
    sw.add_argument("--axis", choices=sweep.AXES, required=True)
    sw.add_argument("--grid", required=True, help="start:stop:steps[:log] or v1,v2,...")
    sw.add_argument("--series", help="extra curve dimension, e.g. distance=30,45,60")
    sw.add_argument("--links", default=",".join(sweep.LINKS),
                    help="links changed by blocklength/update_bits sweeps")
    sw.add_argument("--out", type=Path, help="CSV path (default: stdout)")

    pd = sub.add_parser("plotdata", help="split a sweep CSV into per-curve .dat files")
    pd.add_argument("--csv", type=Path, required=True)
    pd.add_argument("--out", type=Path, required=True, help="output directory")
    pd.add_argument("--figure", help="file name prefix (default from the sweep axis)")

    va = sub.add_parser("validate", help="analytic vs Monte Carlo cross-checks")
    _add_scenario_flags(va)
    _add_mc_flags(va)
    va.add_argument("--out", type=Path, help="CSV path (default: stdout)")
    return p


def _config(args) -> SystemConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("set_")}
    return load_config(args.config, overrides)


def _parse_series(text: str | None, axis: str):
    if not text:
        if axis == "power":
            return "distance", DEFAULT_FIG3_DISTANCES
        return None, ()
    name, _, values = text.partition("=")
    if name not in sweep.AXES or not values:
        raise ValueError(f"--series must look like <axis>=v1,v2,..., got {text!r}")
    return name, tuple(float(v) for v in values.split(","))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def cmd_point(args) -> int:
    cfg = _config(args)
    sys.stdout.write(format_config(cfg, prefix="# "))
    opts = sweep.McOptions(args.cycles, args.seed, args.decode_model, args.workers)
    reports = sweep.run_point(cfg, args.methods, opts)
    for r in reports.values():
        print(f"{r.method:>12}: phi_a={r.phi_a:.6g} phi_b={r.phi_b:.6g} "
              f"aaoi_a={r.aaoi_a:.6g} s aaoi_b={r.aaoi_b:.6g} s "
              f"weighted_sum={r.weighted_sum:.6g} s ci_radius={r.ci_radius:.3g} s")
    if len(reports) == 2:
        gap = reports["mc"].weighted_sum - reports["analytic"].weighted_sum
        print(f"mc - analytic weighted sum: {gap:.6g} s")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    series_axis, series = _parse_series(args.series, args.axis)
    spec = sweep.SweepSpec(
        axis=args.axis,
        grid=tuple(sweep.parse_grid(args.grid)),
        methods=args.methods,
        mc_cycles=args.cycles,
        seed=args.seed,
        decode_model=args.decode_model,
        series_axis=series_axis,
        series=series,
        links=tuple(l.strip() for l in args.links.split(",") if l.strip()),
    )
    res = sweep.run_sweep(cfg, spec, workers=args.workers)
    text = format_config(cfg, prefix="# ") if args.out is None else ""
    _emit(text + res.to_csv(), args.out)
    for label, x, err in res.failures:
        print(f"failed: {label} {args.axis}={x:g}: {err}", file=sys.stderr)
    return 1 if res.failures else 0


def cmd_plotdata(args) -> int:
    for path in sweep.emit_plotdata(args.csv, args.out, args.figure):
        print(path)
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args)
    checks = sweep.run_validation(cfg, cycles=args.cycles, seed=args.seed, workers=args.workers)
    _emit(sweep.validation_csv(checks), args.out)
    for c in checks:
        tag = "INFO" if c.informational else ("PASS" if c.passed else "FAIL")
        print(f"{tag} {c.name}: gap={c.gap:.3g} tol={c.tolerance:.3g}", file=sys.stderr)
    return 0 if all(c.passed for c in checks if not c.informational) else 1


COMMANDS = {"point": cmd_point, "sweep": cmd_sweep, "plotdata": cmd_plotdata, "validate": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"swipt-aoi: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
