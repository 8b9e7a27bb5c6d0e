"""Large-scale path loss, Rayleigh block fading and the gain distributions.

Small-scale power gains are unit-mean exponential (|h|^2 with h ~ CN(0, 1)).
The weighted sum of the two uplink gains, ``I = P_A a_AR g_AR + P_B a_BR g_BR``,
is hypoexponential; its density and survival function are evaluated in a
cancellation-free form so they remain accurate both near a rate tie and deep
in the tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 3e8

# Below this relative scale difference the equal-rate (Erlang-2) branch is used.
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class LinkGeometry:
    distance_m: float
    carrier_hz: float

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValueError(f"distance_m must be positive, got {self.distance_m}")
        if not self.carrier_hz > 0:
            raise ValueError(f"carrier_hz must be positive, got {self.carrier_hz}")


@dataclass(frozen=True)
class FadingDraw:
    """Small-scale power gains of the four links for one transmission cycle."""

    g_ar: float
    g_br: float
    g_ra: float
    g_rb: float


@dataclass(frozen=True)
class HypoExpParams:
    """Means of the two exponential terms of I (watts)."""

    scale_a: float
    scale_b: float

    def __post_init__(self):
        if not (self.scale_a > 0 and self.scale_b > 0):
            raise ValueError(
                f"hypoexponential scales must be positive, got {self.scale_a}, {self.scale_b}"
            )

    @property
    def is_tied(self) -> bool:
        a, b = self.scale_a, self.scale_b
        return abs(a - b) <= TIE_RTOL * max(a, b)


def path_loss_alpha(geom: LinkGeometry) -> float:
    """Free-space power gain ``(c / (4 pi f_c d))**2``."""
    return (SPEED_OF_LIGHT / (4.0 * math.pi * geom.carrier_hz * geom.distance_m)) ** 2


def unit_gain_distance(carrier_hz: float) -> float:
    """Distance at which the free-space gain equals one."""
    return SPEED_OF_LIGHT / (4.0 * math.pi * carrier_hz)


def sample_gains(rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` cycles of fading; columns are (g_ar, g_br, g_ra, g_rb)."""
    return rng.standard_exponential(size=(size, 4))


def sample_fading(rng: np.random.Generator) -> FadingDraw:
    g = sample_gains(rng, 1)[0]
    return FadingDraw(*(float(x) for x in g))


def exp_cdf(z):
    z = np.asarray(z, dtype=float)
    out = -np.expm1(-np.maximum(z, 0.0))
    return out if out.ndim else float(out)


def exp_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.where(z >= 0, np.exp(-np.maximum(z, 0.0)), 0.0)
    return out if out.ndim else float(out)


def exp_sf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-np.maximum(z, 0.0))
    return out if out.ndim else float(out)


def _ordered(p: HypoExpParams) -> tuple[float, float, float]:
    # (larger, smaller, difference) so the expm1 forms below stay well conditioned
    a, b = p.scale_a, p.scale_b
    if a < b:
        a, b = b, a
    return a, b, a - b


def hypoexp_pdf(z, p: HypoExpParams):
    """Density of the sum of two independent exponentials with means ``p``.

    Distinct branch ``(e^{-z/a} - e^{-z/b}) / (a - b)`` is rewritten as
    ``-e^{-z/a} expm1(-z (a-b)/(ab)) / (a-b)``, which has no cancellation.
    """
    z = np.asarray(z, dtype=float)
    zc = np.maximum(z, 0.0)
    if p.is_tied:
        s = p.scale_a
        out = zc / s**2 * np.exp(-zc / s)
    else:
        a, b, d = _ordered(p)
        out = -np.exp(-zc / a) * np.expm1(-zc * d / (a * b)) / d
    out = np.where(z >= 0, out, 0.0)
    return out if out.ndim else float(out)


def hypoexp_sf(z, p: HypoExpParams):
    """Survival function ``P(I > z)``; accurate far into the tail."""
    z = np.asarray(z, dtype=float)
    zc = np.maximum(z, 0.0)
    with np.errstate(invalid="ignore"):
        if p.is_tied:
            s = p.scale_a
            out = np.exp(-zc / s) * (1.0 + zc / s)
        else:
            a, b, d = _ordered(p)
            out = np.exp(-zc / a) * (1.0 - b * np.expm1(-zc * d / (a * b)) / d)
    out = np.where(np.isinf(zc), 0.0, out)
    return out if out.ndim else float(out)


def hypoexp_cdf(z, p: HypoExpParams):
    """CDF ``P(I <= z)``; equal-rate branch ``1 - e^{-z/s}(1 + z/s)``."""
    out = 1.0 - np.asarray(hypoexp_sf(z, p))
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)
