"""Monte Carlo oracle for the relay cycle and the age sawtooth.

Nothing here uses the analytic approximations: each cycle draws four gains,
harvests, computes the four SNRs and draws four independent decode outcomes
from the conditional error probability of the chosen kernel.

Randomness is split into fixed blocks of ``BLOCK`` trials; block ``i`` of a
run with seed ``s`` draws from its own stream keyed by ``(s, i)``. Results
are assembled in block order, so a run is bit-identical for any worker count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from .channel import FadingDraw, sample_gains
from .config import SystemConfig
from .energy import (
    EnergyOutcome,
    Regime,
    available_energy_array,
    dest_snr_array,
    harvested_energy_array,
    relay_snr_array,
)
from .fbl import eps_conditional, linearization, theta

BLOCK = 1 << 15
DECODE_MODELS = ("exact-q", "linearized")


class InsufficientDeliveries(ValueError):
    pass


@dataclass(frozen=True)
class TrialOutcome:
    draw: FadingDraw
    energy: EnergyOutcome
    gamma_relay_a: float
    gamma_relay_b: float
    gamma_dest_a: float
    gamma_dest_b: float
    delivered_a: bool
    delivered_b: bool


@dataclass
class TrialBatch:
    """Column arrays for a run of cycles; see :class:`TrialOutcome`."""

    gains: np.ndarray
    harvested: np.ndarray
    available: np.ndarray
    gamma_relay_a: np.ndarray
    gamma_relay_b: np.ndarray
    gamma_dest_a: np.ndarray
    gamma_dest_b: np.ndarray
    delivered_a: np.ndarray
    delivered_b: np.ndarray
    ok_relay_a: np.ndarray
    ok_relay_b: np.ndarray
    ok_dest_a: np.ndarray
    ok_dest_b: np.ndarray

    def __len__(self):
        return len(self.harvested)

    def outcome(self, i: int, cfg: SystemConfig) -> TrialOutcome:
        e_r = float(self.harvested[i])
        avail = float(self.available[i])
        if avail == 0.0:
            regime = Regime.OFF
        elif e_r >= cfg.e_max:
            regime = Regime.CAPPED
        else:
            regime = Regime.LINEAR
        return TrialOutcome(
            draw=FadingDraw(*(float(g) for g in self.gains[i])),
            energy=EnergyOutcome(e_r, avail, regime, avail / cfg.t2),
            gamma_relay_a=float(self.gamma_relay_a[i]),
            gamma_relay_b=float(self.gamma_relay_b[i]),
            gamma_dest_a=float(self.gamma_dest_a[i]),
            gamma_dest_b=float(self.gamma_dest_b[i]),
            delivered_a=bool(self.delivered_a[i]),
            delivered_b=bool(self.delivered_b[i]),
        )


@dataclass(frozen=True)
class SuccessEstimate:
    phi_a: float
    phi_b: float
    stderr_a: float
    stderr_b: float
    trials: int


@dataclass(frozen=True)
class AgeTrace:
    """Time-average age at each destination over one simulated run.

    Ages are :data:`math.inf` when a destination saw no delivery after the
    warm-up; stderrs come from the regenerative (renewal-cycle) estimator.
    """

    cycle_count: int
    cycle: float
    time_avg_age_a: float
    time_avg_age_b: float
    success_rate_a: float
    success_rate_b: float
    stderr_age_a: float
    stderr_age_b: float
    deliveries_a: int
    deliveries_b: int


@dataclass(frozen=True)
class MomentCheck:
    mean: float
    second_moment: float
    stderr_mean: float
    stderr_second: float
    gaps: int


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(block,)))


def _error_fn(cfg: SystemConfig, decode_model: str):
    if decode_model not in DECODE_MODELS:
        raise ValueError(f"decode_model must be one of {DECODE_MODELS}, got {decode_model!r}")
    codes = {
        "relay_a": cfg.uplink_code("a"),
        "relay_b": cfg.uplink_code("b"),
        "dest_a": cfg.downlink_code("a"),
        "dest_b": cfg.downlink_code("b"),
    }
    if decode_model == "exact-q":
        return lambda link, g: eps_conditional(g, codes[link])
    lins = {link: linearization(code) for link, code in codes.items()}
    return lambda link, g: theta(g, lins[link])


def simulate_cycles(rng: np.random.Generator, cfg: SystemConfig, size: int, decode_model: str = "exact-q") -> TrialBatch:
    """Simulate ``size`` independent cycles from ``rng``."""
    error = _error_fn(cfg, decode_model)
    gains = sample_gains(rng, size)
    u = rng.random((size, 4))
    g_ar, g_br, g_ra, g_rb = gains.T
    e_r = harvested_energy_array(g_ar, g_br, cfg)
    avail = available_energy_array(e_r, cfg)
    gr_a = relay_snr_array(g_ar, "a", cfg)
    gr_b = relay_snr_array(g_br, "b", cfg)
    gd_a = dest_snr_array(avail, g_ra, "a", cfg)
    gd_b = dest_snr_array(avail, g_rb, "b", cfg)
    ok_ra = u[:, 0] >= error("relay_a", gr_a)
    ok_rb = u[:, 1] >= error("relay_b", gr_b)
    ok_da = u[:, 2] >= error("dest_a", gd_a)
    ok_db = u[:, 3] >= error("dest_b", gd_b)
    on = avail > 0
    return TrialBatch(
        gains=gains,
        harvested=e_r,
        available=avail,
        gamma_relay_a=gr_a,
        gamma_relay_b=gr_b,
        gamma_dest_a=gd_a,
        gamma_dest_b=gd_b,
        delivered_a=ok_rb & ok_da & on,
        delivered_b=ok_ra & ok_db & on,
        ok_relay_a=ok_ra,
        ok_relay_b=ok_rb,
        ok_dest_a=ok_da & on,
        ok_dest_b=ok_db & on,
    )


def run_trial(rng: np.random.Generator, cfg: SystemConfig, decode_model: str = "exact-q") -> TrialOutcome:
    return simulate_cycles(rng, cfg, 1, decode_model).outcome(0, cfg)


def map_blocks(cfg: SystemConfig, trials: int, seed: int, decode_model: str,
               fn: Callable[[TrialBatch], object], workers: int = 1) -> list:
    """Apply ``fn`` to each block of a run and return the results in block order.

    Every block draws a full ``BLOCK`` of cycles and is then truncated, so the
    first ``t`` trials of a run do not depend on the requested total.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("need at least one trial")
    _error_fn(cfg, decode_model)
    nblocks = -(-trials // BLOCK)

    def one(b):
        batch = simulate_cycles(block_rng(seed, b), cfg, BLOCK, decode_model)
        keep = min(BLOCK, trials - b * BLOCK)
        if keep < BLOCK:
            batch = TrialBatch(**{k: v[:keep] for k, v in vars(batch).items()})
        return fn(batch)

    if workers <= 1:
        return [one(b) for b in range(nblocks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, range(nblocks)))


def iter_trials(cfg: SystemConfig, trials: int, seed: int, decode_model: str = "exact-q") -> Iterator[TrialOutcome]:
    done = 0
    b = 0
    while done < trials:
        batch = simulate_cycles(block_rng(seed, b), cfg, BLOCK, decode_model)
        for i in range(min(BLOCK, trials - done)):
            yield batch.outcome(i, cfg)
        done += BLOCK
        b += 1


def delivery_series(cfg: SystemConfig, cycles: int, seed: int, decode_model: str = "exact-q",
                    workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    parts = map_blocks(cfg, cycles, seed, decode_model,
                       lambda b: (b.delivered_a.copy(), b.delivered_b.copy()), workers)
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def estimate_success(cfg: SystemConfig, trials: int, seed: int, decode_model: str = "exact-q",
                     workers: int = 1) -> SuccessEstimate:
    counts = map_blocks(cfg, trials, seed, decode_model,
                        lambda b: (int(b.delivered_a.sum()), int(b.delivered_b.sum())), workers)
    n = int(trials)
    pa = sum(c[0] for c in counts) / n
    pb = sum(c[1] for c in counts) / n
    return SuccessEstimate(
        phi_a=pa,
        phi_b=pb,
        stderr_a=math.sqrt(pa * (1 - pa) / n),
        stderr_b=math.sqrt(pb * (1 - pb) / n),
        trials=n,
    )


def _age_at_cycle_start(delivered: np.ndarray) -> np.ndarray:
    """Age at the start of each cycle in units of T, with initial age T."""
    m = len(delivered)
    idx = np.where(delivered, np.arange(m), -1)
    last = np.maximum.accumulate(idx)
    before = np.empty(m, dtype=np.int64)
    before[0] = -1
    before[1:] = last[:-1]
    return np.arange(m) - before


def time_average_age(delivered, cycle: float, warmup_frac: float = 0.01) -> tuple[float, float, float, int]:
    """Time-average of the sawtooth driven by a delivery sequence.

    Within a cycle the age rises linearly by T from its starting value; it
    ends at T if the cycle delivered. Returns ``(average age, stderr,
    empirical success rate, deliveries)`` over the cycles after warm-up.
    """
    delivered = np.asarray(delivered, dtype=bool)
    k = _age_at_cycle_start(delivered)
    w = int(len(delivered) * warmup_frac)
    k, dl = k[w:], delivered[w:]
    if len(k) == 0:
        raise ValueError("no cycles left after warm-up")
    hits = int(dl.sum())
    rate = hits / len(dl)
    if hits == 0:
        return math.inf, math.inf, 0.0, 0
    avg = cycle * (float(np.mean(k)) + 0.5)
    return avg, _regenerative_stderr(k, cycle), rate, hits


def _regenerative_stderr(k: np.ndarray, cycle: float) -> float:
    # renewal segments start on cycles whose starting age is T (k == 1)
    starts = np.flatnonzero(k == 1)
    if len(starts) < 3:
        return math.inf
    lengths = np.diff(starts).astype(float)
    csum = np.concatenate(([0.0], np.cumsum(k + 0.5)))
    areas = csum[starts[1:]] - csum[starts[:-1]]
    n = len(lengths)
    ratio = areas.sum() / lengths.sum()
    resid = areas - ratio * lengths
    s2 = float(np.sum(resid**2)) / (n - 1)
    return cycle * math.sqrt(s2 / n) / float(np.mean(lengths))


def simulate_aoi(cfg: SystemConfig, cycles: int, seed: int, decode_model: str = "exact-q",
                 workers: int = 1, warmup_frac: float = 0.01) -> AgeTrace:
    da, db = delivery_series(cfg, cycles, seed, decode_model, workers)
    age_a, se_a, ra, na = time_average_age(da, cfg.cycle, warmup_frac)
    age_b, se_b, rb, nb = time_average_age(db, cfg.cycle, warmup_frac)
    return AgeTrace(
        cycle_count=int(cycles),
        cycle=cfg.cycle,
        time_avg_age_a=age_a,
        time_avg_age_b=age_b,
        success_rate_a=ra,
        success_rate_b=rb,
        stderr_age_a=se_a,
        stderr_age_b=se_b,
        deliveries_a=na,
        deliveries_b=nb,
    )


def oracle_cdf_dest_snr(cfg: SystemConfig, z_grid, trials: int, seed: int, dest: str = "a",
                        workers: int = 1) -> np.ndarray:
    """Empirical ``P(gamma_dest <= z)`` on ``z_grid``."""
    if trials < 10_000:
        raise ValueError("empirical CDF oracle needs at least 10^4 trials")
    attr = "gamma_dest_a" if dest == "a" else "gamma_dest_b"
    parts = map_blocks(cfg, trials, seed, "exact-q", lambda b: getattr(b, attr).copy(), workers)
    samples = np.sort(np.concatenate(parts))
    z = np.asarray(z_grid, dtype=float)
    return np.searchsorted(samples, z, side="right") / len(samples)


def interdeparture_stats(delivered, cycle: float, min_deliveries: int = 100) -> MomentCheck:
    """Empirical first and second moments of the time between deliveries."""
    hits = np.flatnonzero(np.asarray(delivered, dtype=bool))
    if len(hits) < min_deliveries:
        raise InsufficientDeliveries(f"only {len(hits)} deliveries observed, need {min_deliveries}")
    x = np.diff(hits) * cycle
    n = len(x)
    return MomentCheck(
        mean=float(np.mean(x)),
        second_moment=float(np.mean(x**2)),
        stderr_mean=float(np.std(x, ddof=1) / math.sqrt(n)),
        stderr_second=float(np.std(x**2, ddof=1) / math.sqrt(n)),
        gaps=n,
    )


def moment_check_interdeparture(cfg: SystemConfig, cycles: int, seed: int, dest: str = "a",
                                decode_model: str = "exact-q", workers: int = 1) -> MomentCheck:
    da, db = delivery_series(cfg, cycles, seed, decode_model, workers)
    return interdeparture_stats(da if dest == "a" else db, cfg.cycle)
