"""Finite-blocklength error model: normal approximation and its linearization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

LOG2E = math.log2(math.e)
DISPERSION_LIMIT = LOG2E**2 / 2.0


@dataclass(frozen=True)
class LinkCode:
    """Blocklength ``n`` (channel uses) and information bits ``k`` of one link."""

    n: int
    k: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"blocklength must be a positive integer, got {self.n}")
        if int(self.k) != self.k or self.k < 0:
            raise ValueError(f"bits per block must be a nonnegative integer, got {self.k}")

    @property
    def rate(self) -> float:
        return self.k / self.n


@dataclass(frozen=True)
class LinearizationCoeffs:
    beta: float
    psi: float
    phi_low: float
    delta_high: float
    n: int

    @property
    def slope(self) -> float:
        """Magnitude of the linear segment's slope, ``beta * sqrt(n)``."""
        return self.beta * math.sqrt(self.n)


def _check_snr(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be nonnegative")
    return g


def capacity(gamma):
    """AWGN capacity ``log2(1 + gamma)`` in bits per channel use."""
    g = _check_snr(gamma)
    out = np.log1p(g) / math.log(2.0)
    return out if out.ndim else float(out)


def dispersion(gamma):
    """Channel dispersion ``(log2 e)^2 / 2 * (1 - (1 + gamma)^-2)``."""
    g = _check_snr(gamma)
    out = DISPERSION_LIMIT * -np.expm1(-2.0 * np.log1p(g))
    return out if out.ndim else float(out)


def q_function(x):
    """Gaussian tail probability ``Q(x) = P(N(0,1) > x)``."""
    out = ndtr(-np.asarray(x, dtype=float))
    return out if out.ndim else float(out)


def q_argument(gamma, code: LinkCode):
    """``(n C(gamma) - k) / sqrt(n V(gamma))``; ``-inf`` at zero SNR when k > 0."""
    g = _check_snr(gamma)
    n, k = code.n, code.k
    c = np.log1p(g) / math.log(2.0)
    v = DISPERSION_LIMIT * -np.expm1(-2.0 * np.log1p(g))
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (n * c - k) / np.sqrt(n * v)
    x = np.where(g == 0, -np.inf if k > 0 else np.inf, x)
    return x if x.ndim else float(x)


def eps_conditional(gamma, code: LinkCode):
    """Block error probability of a block received at SNR ``gamma``.

    Zero SNR with ``k > 0`` gives 1 (the right limit of the Q-argument is
    ``-inf``); ``k == 0`` gives 0.
    """
    x = np.asarray(q_argument(gamma, code))
    out = np.clip(ndtr(-x), 0.0, 1.0)
    return out if out.ndim else float(out)


def linearization(code: LinkCode) -> LinearizationCoeffs:
    if code.k < 1:
        raise ValueError("linearization needs at least one information bit")
    r = code.rate
    beta = 1.0 / (2.0 * math.pi * math.sqrt(math.expm1(2.0 * r * math.log(2.0))))
    psi = math.expm1(r * math.log(2.0))
    half = 1.0 / (2.0 * beta * math.sqrt(code.n))
    return LinearizationCoeffs(beta=beta, psi=psi, phi_low=psi - half, delta_high=psi + half, n=code.n)


def theta(gamma, coeffs: LinearizationCoeffs):
    """Piecewise-linear surrogate of :func:`eps_conditional`.

    1 below ``phi_low``, 0 above ``delta_high``, and
    ``1/2 - beta sqrt(n) (gamma - psi)`` in between.
    """
    g = np.asarray(gamma, dtype=float)
    out = np.clip(0.5 - coeffs.slope * (g - coeffs.psi), 0.0, 1.0)
    out = np.where(g <= coeffs.phi_low, 1.0, np.where(g >= coeffs.delta_high, 0.0, out))
    return out if out.ndim else float(out)
