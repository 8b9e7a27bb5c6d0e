"""Point evaluation, parameter sweeps, plot data and the validation suite."""

from __future__ import annotations

import csv
import io
import math
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analytic, mcsim
from .analytic import AoiReport, UNBOUNDED, weighted_sum_aaoi
from .config import SystemConfig

AXES = ("power", "blocklength", "update_bits", "p_min", "rho", "distance")
INTEGER_AXES = ("blocklength", "update_bits")
METHODS = ("analytic", "mc")
FIGURES = {"power": "fig3", "blocklength": "fig4", "update_bits": "fig5", "p_min": "fig6"}
LINKS = ("ar", "br", "ra", "rb")

CSV_DIGITS = 15
PLOT_DIGITS = 9

ANALYTIC_COLUMNS = ("phi_a", "phi_b", "aaoi_a", "aaoi_b", "weighted_sum")
MC_COLUMNS = ANALYTIC_COLUMNS + ("stderr_a", "stderr_b", "ci_radius")


@dataclass(frozen=True)
class McOptions:
    cycles: int = 1_000_000
    seed: int = 0
    decode_model: str = "exact-q"
    workers: int = 1


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    methods: tuple = ("analytic",)
    mc_cycles: int = 1_000_000
    seed: int = 0
    decode_model: str = "exact-q"
    series_axis: str | None = None
    series: tuple = ()
    links: tuple = LINKS

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}; choose from {AXES}")
        grid = tuple(float(v) for v in self.grid)
        if not grid:
            raise ValueError("grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.axis in INTEGER_AXES:
            grid = tuple(_as_int(self.axis, v) for v in grid)
        object.__setattr__(self, "grid", grid)
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        if self.series_axis is not None and self.series_axis not in AXES:
            raise ValueError(f"unknown series axis {self.series_axis!r}")
        if set(self.links) - set(LINKS):
            raise ValueError(f"links must be a subset of {LINKS}")


def _as_int(axis: str, v: float) -> int:
    r = round(v)
    if r < 1 or abs(v - r) > 1e-9 * max(1.0, abs(v)):
        raise ValueError(f"{axis} grid values must be positive integers, got {v}")
    return int(r)


def parse_grid(text: str) -> list[float]:
    """``start:stop:steps[:log]`` or a comma-separated list of values."""
    if ":" not in text:
        return [float(v) for v in text.split(",") if v.strip()]
    parts = text.split(":")
    if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
        raise ValueError(f"grid must look like start:stop:steps[:log], got {text!r}")
    start, stop, steps = float(parts[0]), float(parts[1]), int(parts[2])
    if steps < 1:
        raise ValueError("grid needs at least one step")
    if len(parts) == 4:
        return list(np.geomspace(start, stop, steps))
    return list(np.linspace(start, stop, steps))


def apply_axis(cfg: SystemConfig, axis: str, value, links: Sequence[str] = LINKS) -> SystemConfig:
    if axis == "power":
        return cfg.replace(p_a=float(value), p_b=float(value))
    if axis == "distance":
        return cfg.replace(d_ar=float(value), d_br=float(value))
    if axis == "p_min":
        return cfg.replace(p_min=float(value))
    if axis == "rho":
        return cfg.replace(rho=float(value))
    if axis == "blocklength":
        return cfg.replace(**{f"n_{l}": int(value) for l in links})
    if axis == "update_bits":
        return cfg.replace(**{f"k_{l}": int(value) for l in links})
    raise ValueError(f"unknown axis {axis!r}")


def _mc_report(cfg: SystemConfig, opts: McOptions) -> AoiReport:
    def collect(b):
        return (b.delivered_a.copy(), b.delivered_b.copy(),
                int(b.ok_relay_a.sum()), int(b.ok_relay_b.sum()),
                int(b.ok_dest_a.sum()), int(b.ok_dest_b.sum()))

    parts = mcsim.map_blocks(cfg, opts.cycles, opts.seed, opts.decode_model, collect, opts.workers)
    da = np.concatenate([p[0] for p in parts])
    db = np.concatenate([p[1] for p in parts])
    n = len(da)
    ok = [sum(p[i] for p in parts) / n for i in range(2, 6)]
    age_a, se_a, ra, _ = mcsim.time_average_age(da, cfg.cycle)
    age_b, se_b, rb, _ = mcsim.time_average_age(db, cfg.cycle)
    se_ws = cfg.w_a * se_a + cfg.w_b * se_b  # bound; the two ages are positively correlated
    return AoiReport(
        eps_relay_a=1 - ok[0], eps_relay_b=1 - ok[1],
        eps_dest_a=1 - ok[2], eps_dest_b=1 - ok[3],
        phi_a=ra, phi_b=rb, aaoi_a=age_a, aaoi_b=age_b,
        weighted_sum=weighted_sum_aaoi(age_a, age_b, cfg.w_a, cfg.w_b),
        method="monte-carlo",
        ci_radius=1.96 * se_ws if math.isfinite(se_ws) else UNBOUNDED,
        stderr_a=se_a, stderr_b=se_b,
    )


def run_point(cfg: SystemConfig, methods: Sequence[str] = ("analytic",), mc: McOptions | None = None) -> dict:
    """Evaluate one scenario; returns ``{method: AoiReport}``."""
    out = {}
    for m in methods:
        if m == "analytic":
            out[m] = analytic.evaluate(cfg)
        elif m == "mc":
            out[m] = _mc_report(cfg, mc or McOptions())
        else:
            raise ValueError(f"unknown method {m!r}")
    return out


def fmt(x: float, digits: int = CSV_DIGITS) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{digits}g}"


def csv_header(spec: SweepSpec) -> list[str]:
    cols = ["label", spec.axis]
    for m in spec.methods:
        cols += [f"{m}_{c}" for c in (ANALYTIC_COLUMNS if m == "analytic" else MC_COLUMNS)]
    return cols


def _row_values(reports: dict, methods: Sequence[str]) -> list[float]:
    vals = []
    for m in methods:
        r = reports[m]
        vals += [r.phi_a, r.phi_b, r.aaoi_a, r.aaoi_b, r.weighted_sum]
        if m == "mc":
            vals += [r.stderr_a, r.stderr_b, r.ci_radius]
    return vals


@dataclass
class SweepResult:
    header: list
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for label, x, vals in self.rows:
            w.writerow([label, fmt(x)] + [fmt(v) for v in vals])
        return buf.getvalue()


def _series(spec: SweepSpec) -> list[tuple[str, object]]:
    if spec.series_axis is None or not spec.series:
        return [("all", None)]
    return [(f"{spec.series_axis}={v:g}", v) for v in spec.series]


def _evaluate_task(task):
    cfg, methods, opts = task
    try:
        return _row_values(run_point(cfg, methods, opts), methods), None
    except Exception as exc:  # reported per point, the sweep continues
        return None, f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: SystemConfig, spec: SweepSpec, out: str | Path | None = None, workers: int = 1) -> SweepResult:
    """Evaluate every (series, grid value) point; rows come out in grid order.

    Points are independent, so up to ``workers`` processes evaluate them;
    Monte Carlo points all reuse ``spec.seed`` (common random numbers).
    """
    opts = McOptions(cycles=spec.mc_cycles, seed=spec.seed, decode_model=spec.decode_model)
    keys, tasks = [], []
    for label, sval in _series(spec):
        base = cfg if sval is None else apply_axis(cfg, spec.series_axis, sval)
        for x in spec.grid:
            keys.append((label, x))
            try:
                point = apply_axis(base, spec.axis, x, spec.links)
            except ValueError as exc:
                point = exc
            tasks.append((point, tuple(spec.methods), opts))
    results = []
    runnable = [(i, t) for i, t in enumerate(tasks) if isinstance(t[0], SystemConfig)]
    if workers > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = dict(zip((i for i, _ in runnable), pool.map(_evaluate_task, [t for _, t in runnable])))
    else:
        done = {i: _evaluate_task(t) for i, t in runnable}
    for i, (key, task) in enumerate(zip(keys, tasks)):
        results.append(done.get(i, (None, f"invalid configuration: {task[0]}")))
    res = SweepResult(header=csv_header(spec))
    for (label, x), (vals, err) in zip(keys, results):
        if err is None:
            res.rows.append((label, x, vals))
        else:
            res.failures.append((label, x, err))
    if out is not None:
        Path(out).write_text(res.to_csv())
    return res


def _safe_label(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9._=+-]", "_", label)


def emit_plotdata(csv_path: str | Path, out_dir: str | Path, figure: str | None = None) -> list[Path]:
    """Split a sweep CSV into ``<figure>_<method>_<label>.dat`` x/y files.

    The y column is the weighted-sum AAoI; unbounded points become blank
    lines so plotting tools draw a gap.
    """
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{csv_path}: no data rows")
    header = rows[0]
    if len(header) < 3 or header[0] != "label" or header[1] not in AXES:
        raise ValueError(f"{csv_path}: not a sweep CSV (header {header[:2]})")
    axis = header[1]
    methods = [h[: -len("_weighted_sum")] for h in header if h.endswith("_weighted_sum")]
    if not methods:
        raise ValueError(f"{csv_path}: no weighted_sum columns")
    figure = figure or FIGURES.get(axis, axis)
    curves: dict[tuple[str, str], list[str]] = {}
    for lineno, row in enumerate(rows[1:], 2):
        if len(row) != len(header):
            raise ValueError(f"{csv_path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            x = float(row[1])
            ys = {m: float(row[header.index(f"{m}_weighted_sum")]) for m in methods}
        except ValueError as exc:
            raise ValueError(f"{csv_path}:{lineno}: {exc}") from None
        for m, y in ys.items():
            line = f"{fmt(x, PLOT_DIGITS)} {fmt(y, PLOT_DIGITS)}" if math.isfinite(y) else ""
            curves.setdefault((m, row[0]), []).append(line)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for (m, label), lines in curves.items():
        p = out_dir / f"{figure}_{m}_{_safe_label(label)}.dat"
        p.write_text(f"# {axis} weighted_sum_aaoi_s\n" + "\n".join(lines) + "\n")
        paths.append(p)
    return paths


# validation suite: analytic vs Monte Carlo at the reference scenarios

CDF_GRID = np.concatenate(([0.0], np.geomspace(1e-3, 100.0, 49)))
DKW_ALPHA = 0.01
FLOOR_POWER = 10.0
LOW_POWER = 0.05


def dkw_radius(n: int, alpha: float = DKW_ALPHA) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


@dataclass(frozen=True)
class Check:
    name: str
    reference: float
    estimate: float
    stderr: float
    tolerance: float
    informational: bool = False

    @property
    def gap(self) -> float:
        return abs(self.estimate - self.reference)

    @property
    def passed(self) -> bool:
        return self.gap <= self.tolerance


def run_validation(cfg: SystemConfig | None = None, cycles: int = 1_000_000, seed: int = 0, workers: int = 1) -> list[Check]:
    cfg = cfg or SystemConfig()
    T = cfg.cycle
    checks = []

    ana = analytic.evaluate(cfg)
    est = mcsim.estimate_success(cfg, cycles, seed, "linearized", workers)
    for i, (ref, phat, se) in {"a": (ana.phi_a, est.phi_a, est.stderr_a),
                               "b": (ana.phi_b, est.phi_b, est.stderr_b)}.items():
        checks.append(Check(f"success_{i}_linearized", ref, phat, se, max(3 * se, 0.02)))

    for d in "ab":
        emp = mcsim.oracle_cdf_dest_snr(cfg, CDF_GRID, cycles, seed, d, workers)
        model = analytic.cdf_dest_snr(CDF_GRID, d, cfg)
        j = int(np.argmax(np.abs(model - emp)))
        checks.append(Check(f"cdf_dest_{d}_sup_gap", float(model[j]), float(emp[j]), 0.0, dkw_radius(cycles)))

    for tag, scen in (("defaults", cfg), ("low_power", cfg.replace(p_a=LOW_POWER, p_b=LOW_POWER))):
        tr = mcsim.simulate_aoi(scen, cycles, seed, "exact-q", workers)
        for i in "ab":
            rate = getattr(tr, f"success_rate_{i}")
            age = getattr(tr, f"time_avg_age_{i}")
            se = getattr(tr, f"stderr_age_{i}")
            ref = analytic.aaoi(T, rate)
            checks.append(Check(f"renewal_{tag}_{i}", ref, age, se, 3 * se))

    hi = cfg.replace(p_a=FLOOR_POWER, p_b=FLOOR_POWER)
    ana_hi = analytic.evaluate(hi)
    checks.append(Check("floor_analytic_band", 1.5 * T + 0.1e-3, ana_hi.weighted_sum, 0.0, 0.1e-3))
    # the analytic value uses the linearized kernel; the exact-q row only
    # reports the linearization gap
    for model in ("linearized", "exact-q"):
        mc_hi = run_point(hi, ("mc",), McOptions(cycles, seed, model, workers))["mc"]
        se = mc_hi.ci_radius / 1.96
        checks.append(Check(f"floor_mc_{model}", ana_hi.weighted_sum, mc_hi.weighted_sum, se, 3 * se,
                            informational=model == "exact-q"))
    return checks


def validation_csv(checks: Sequence[Check]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "reference", "estimate", "stderr", "gap", "tolerance", "pass"])
    for c in checks:
        w.writerow([c.name, fmt(c.reference), fmt(c.estimate), fmt(c.stderr), fmt(c.gap),
                    fmt(c.tolerance), "info" if c.informational else ("yes" if c.passed else "no")])
    return buf.getvalue()
