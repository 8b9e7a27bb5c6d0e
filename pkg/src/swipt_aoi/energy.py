"""Power-splitting harvest in the first slot and relay power in the second.

Regimes partition [0, inf): ``off`` iff E_R <= E_min, ``capped`` iff
E_R >= E_max, ``linear`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import FadingDraw
from .config import SystemConfig


class Regime(str, Enum):
    CAPPED = "capped"
    LINEAR = "linear"
    OFF = "off"


@dataclass(frozen=True)
class HarvestConfig:
    rho: float
    eta: float
    e_max: float
    p_min: float
    t1: float
    t2: float

    def __post_init__(self):
        if not 0 <= self.rho <= 1:
            raise ValueError("rho must lie in [0, 1]")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if not (self.e_max > 0 and self.p_min >= 0 and self.t1 > 0 and self.t2 > 0):
            raise ValueError("e_max, t1, t2 must be positive and p_min nonnegative")
        if not self.e_min < self.e_max:
            raise ValueError("E_min = p_min * t2 must be below e_max")

    @property
    def e_min(self) -> float:
        return self.p_min * self.t2

    @classmethod
    def from_config(cls, cfg: SystemConfig) -> "HarvestConfig":
        t1, t2 = slot_durations(cfg)
        return cls(rho=cfg.rho, eta=cfg.eta, e_max=cfg.e_max, p_min=cfg.p_min, t1=t1, t2=t2)


@dataclass(frozen=True)
class EnergyOutcome:
    harvested_j: float
    available_j: float
    regime: Regime
    relay_power_w: float


def slot_durations(cfg: SystemConfig) -> tuple[float, float]:
    """``(t1, t2)``: the uplink slot covers the longer source block, the
    downlink slot both relay blocks back to back."""
    return cfg.t1, cfg.t2


def harvested_energy(draw: FadingDraw, cfg: SystemConfig) -> float:
    return float(harvested_energy_array(np.array([draw.g_ar]), np.array([draw.g_br]), cfg)[0])


def harvested_energy_array(g_ar, g_br, cfg: SystemConfig) -> np.ndarray:
    """Vectorized ``rho eta t1 (P_A a_AR g_AR + P_B a_BR g_BR)``."""
    incident = cfg.p_a * cfg.alpha_ar * np.asarray(g_ar) + cfg.p_b * cfg.alpha_br * np.asarray(g_br)
    return cfg.rho * cfg.eta * cfg.t1 * incident


def available_energy(e_r: float, cfg: SystemConfig | HarvestConfig) -> EnergyOutcome:
    if e_r < 0:
        raise ValueError("harvested energy cannot be negative")
    e_min, e_max, t2 = cfg.e_min, cfg.e_max, cfg.t2
    if e_r <= e_min:
        return EnergyOutcome(e_r, 0.0, Regime.OFF, 0.0)
    if e_r >= e_max:
        return EnergyOutcome(e_r, e_max, Regime.CAPPED, e_max / t2)
    return EnergyOutcome(e_r, e_r, Regime.LINEAR, e_r / t2)


def available_energy_array(e_r, cfg: SystemConfig) -> np.ndarray:
    e_r = np.asarray(e_r, dtype=float)
    out = np.minimum(e_r, cfg.e_max)
    return np.where(e_r <= cfg.e_min, 0.0, out)


def dest_snr(draw: FadingDraw, outcome: EnergyOutcome, dest: str, cfg: SystemConfig) -> float:
    g = draw.g_ra if dest == "a" else draw.g_rb
    return float(dest_snr_array(outcome.available_j, g, dest, cfg))


def dest_snr_array(available_j, g_dest, dest: str, cfg: SystemConfig):
    """SNR at ``dest`` for the relay's forwarded block, ``E a g / (t2 sigma^2)``."""
    return np.asarray(available_j) * cfg.downlink_alpha(dest) * np.asarray(g_dest) / (
        cfg.t2 * cfg.dest_noise(dest)
    )


def relay_snr_array(g_up, source: str, cfg: SystemConfig):
    """SNR at the relay's decoder for ``source``'s block, after the power split."""
    return (1.0 - cfg.rho) * cfg.power(source) * cfg.uplink_alpha(source) * np.asarray(g_up) / cfg.noise_r
