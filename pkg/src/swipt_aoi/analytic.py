"""Analytic error probabilities and average age of information.

The chain is: linearized finite-blocklength kernel -> block error probability
as a CDF integral over ``[phi_low, delta_high]`` -> success probability of each
direction -> AAoI ``T/2 + T/phi`` -> weighted sum.

Destination SNR distribution
----------------------------
With ``k = rho eta t1`` and ``I = P_A a_AR g_AR + P_B a_BR g_BR``, the relay
stays silent when ``k I <= E_min``, transmits ``k I`` when on, and ``E_max``
when capped. For ``z >= 0`` the survival function of the destination SNR is
split into

* ``L2 = P(I > W2) P(g > W4)``                   (capped relay)
* ``L1 = L3 + (P(I > W1) - P(I > W2)) P(g > W3/W1)``
* ``L3 = int_{W3/W2}^{W3/W1} e^{-x} [P(I > W3/x) - P(I > W2)] dx``
* ``L4 = int_{W3/W2}^{W3/W1} e^{-x} P(I <= W3/x) dx``

with ``W1 = E_min/k``, ``W2 = E_max/k``, ``W3 = z sigma^2 t2 / (k a)`` and
``W4 = z sigma^2 t2 / (E_max a)``. The quadrature is applied to the survival
form of the inner integrand, which makes L3 free of the
``F_I(W2) (...) - L4`` cancellation when the relay is almost never on.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.stats import norm

from .channel import HypoExpParams, hypoexp_sf
from .config import SystemConfig, other
from .fbl import LinearizationCoeffs, LinkCode, q_argument, linearization

log = logging.getLogger(__name__)

UNBOUNDED = math.inf
"""AAoI reported when a direction never delivers (success probability 0)."""

# e^{-x} below 2e-22 past this point; bounds the L4 range when E_min = 0
_GAIN_CAP = 50.0


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class GcqSettings:
    """Node counts of the two Gauss-Chebyshev stages.

    ``endpoint_correction`` integrates the secant through the interval ends
    exactly and applies the Chebyshev rule to the remainder only. The plain
    rule has an O(M^-2) bias proportional to the integrand's endpoint values;
    the corrected one converges as O(M^-4) on smooth integrands.
    """

    nodes_v: int = 100
    nodes_m: int = 100
    endpoint_correction: bool = True

    def __post_init__(self):
        if self.nodes_v < 1 or self.nodes_m < 1:
            raise ValueError("GCQ node counts must be at least 1")

    @classmethod
    def from_config(cls, cfg: SystemConfig, **kw) -> "GcqSettings":
        return cls(nodes_v=cfg.gcq_v, nodes_m=cfg.gcq_m, **kw)


@functools.lru_cache(maxsize=32)
def gcq_rule(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev nodes ``cos((2j-1) pi / 2m)`` and weights ``pi/m sqrt(1 - t^2)``."""
    angles = (2.0 * np.arange(1, m + 1) - 1.0) * np.pi / (2.0 * m)
    nodes = np.cos(angles)
    weights = np.pi / m * np.sin(angles)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gcq_integrate(func, a, b, m: int, endpoint_correction: bool = True, args=()):
    """Integrate ``func`` over ``[a, b]`` elementwise with an m-node GCQ rule.

    ``a``, ``b`` and every entry of ``args`` broadcast to a common shape S;
    ``func(x, *args)`` is called with node arrays of shape ``S + (m,)`` (args
    get a trailing axis) and, for the endpoint correction, with shape S.
    """
    a, b, *args = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float), *args)
    t, w = gcq_rule(m)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = half[..., None] * t + mid[..., None]
    fx = func(x, *(arg[..., None] for arg in args))
    if not endpoint_correction:
        return half * np.sum(w * fx, axis=-1)
    fa = func(a, *args)
    fb = func(b, *args)
    secant = fa[..., None] + (fb - fa)[..., None] * (0.5 * (t + 1.0))
    return half * np.sum(w * (fx - secant), axis=-1) + half * (fa + fb)


@dataclass(frozen=True)
class OmegaBundle:
    """Harvest thresholds mapped onto the uplink power sum ``I`` (watts).

    ``omega3(z)`` and ``omega4(z)`` are linear in the SNR threshold ``z``.
    """

    omega1: float
    omega2: float
    c3: float
    c4: float

    def omega3(self, z):
        return self.c3 * np.asarray(z, dtype=float)

    def omega4(self, z):
        return self.c4 * np.asarray(z, dtype=float)

    @classmethod
    def for_dest(cls, dest: str, cfg: SystemConfig) -> "OmegaBundle":
        k = cfg.rho * cfg.eta * cfg.t1
        sigma2 = cfg.dest_noise(dest)
        alpha = cfg.downlink_alpha(dest)
        with np.errstate(divide="ignore"):
            omega1 = cfg.e_min / k if k > 0 else math.inf
            omega2 = cfg.e_max / k if k > 0 else math.inf
            c3 = sigma2 * cfg.t2 / (k * alpha) if k > 0 else math.inf
        c4 = sigma2 * cfg.t2 / (cfg.e_max * alpha)
        return cls(omega1=omega1, omega2=omega2, c3=c3, c4=c4)


@dataclass(frozen=True)
class AoiReport:
    """Per-direction results; suffix ``_a`` means "received at A".

    ``eps_relay_a`` is the relay's error on A's uplink block, so the success
    probability of updates arriving at A is
    ``phi_a = (1 - eps_relay_b) (1 - eps_dest_a)``.
    """

    eps_relay_a: float
    eps_relay_b: float
    eps_dest_a: float
    eps_dest_b: float
    phi_a: float
    phi_b: float
    aaoi_a: float
    aaoi_b: float
    weighted_sum: float
    method: str
    ci_radius: float = 0.0
    stderr_a: float = 0.0
    stderr_b: float = 0.0


def uplink_sum_params(cfg: SystemConfig) -> HypoExpParams:
    return HypoExpParams(cfg.p_a * cfg.alpha_ar, cfg.p_b * cfg.alpha_br)


def uplink_sum_sf(y, cfg: SystemConfig):
    """``P(I > y)``, tolerating a silent source (zero scale)."""
    a = cfg.p_a * cfg.alpha_ar
    b = cfg.p_b * cfg.alpha_br
    y = np.asarray(y, dtype=float)
    if a > 0 and b > 0:
        return np.asarray(hypoexp_sf(y, HypoExpParams(a, b)))
    s = max(a, b)
    if s == 0:
        return np.zeros_like(y)
    with np.errstate(invalid="ignore"):
        out = np.exp(-np.maximum(y, 0.0) / s)
    return np.where(np.isinf(y), 0.0, out)


def _l4_complement_integrand(x, omega3, cfg):
    # e^{-x} P(I > omega3 / x)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(x > 0, omega3 / x, np.inf)
    return np.exp(-x) * uplink_sum_sf(y, cfg)


def _inner_limits(omegas: OmegaBundle, z):
    w3 = omegas.omega3(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = w3 / omegas.omega2
        hi = np.where(w3 == 0, 0.0, w3 / omegas.omega1) if omegas.omega1 > 0 else np.where(w3 == 0, 0.0, np.inf)
    return w3, lo, hi


def _l4_complement(omegas: OmegaBundle, z, cfg: SystemConfig, gcq: GcqSettings | None):
    """``int e^{-x} P(I > W3/x) dx`` over ``[W3/W2, W3/W1]``, one value per z."""
    w3, lo, hi = _inner_limits(omegas, z)
    hi_eff = np.minimum(hi, np.maximum(lo, _GAIN_CAP))
    if gcq is None:
        out = np.empty_like(w3)
        for i, (o3, a, b) in enumerate(zip(w3.ravel(), lo.ravel(), hi_eff.ravel())):
            if b <= a:
                out.flat[i] = 0.0
                continue
            val, _ = integrate.quad(
                lambda x: float(_l4_complement_integrand(np.array(x), o3, cfg)),
                a, b, epsabs=1e-14, epsrel=1e-12, limit=500,
            )
            out.flat[i] = val
        return out
    vals = gcq_integrate(
        lambda x, o3: _l4_complement_integrand(x, o3, cfg), lo, hi_eff, gcq.nodes_m,
        gcq.endpoint_correction, args=(w3,),
    )
    return np.where(hi_eff > lo, vals, 0.0)


def dest_snr_terms(z, dest: str, cfg: SystemConfig, gcq: GcqSettings | None = None) -> dict:
    """L1..L4 of the destination SNR survival function at thresholds ``z``.

    ``gcq=None`` evaluates the inner integral by adaptive quadrature.
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if np.any(z < 0):
        raise ValueError("SNR threshold must be nonnegative")
    omegas = OmegaBundle.for_dest(dest, cfg)
    if not math.isfinite(omegas.omega1):
        zero = np.zeros_like(z)
        return {"L1": zero, "L2": zero, "L3": zero, "L4": zero}
    w3, lo, hi = _inner_limits(omegas, z)
    sf1 = float(uplink_sum_sf(omegas.omega1, cfg))
    sf2 = float(uplink_sum_sf(omegas.omega2, cfg))
    j = _l4_complement(omegas, z, cfg, gcq)
    mass = np.exp(-lo) - np.exp(-hi)  # P(W3/W2 < g < W3/W1)
    l3 = j - sf2 * mass
    l4 = mass - j
    l1 = l3 + (sf1 - sf2) * np.exp(-hi)
    l2 = sf2 * np.exp(-omegas.omega4(z))
    return {"L1": l1, "L2": l2, "L3": l3, "L4": l4}


def ccdf_dest_snr(z, dest: str, cfg: SystemConfig, gcq: GcqSettings | None = None):
    """Unclamped ``P(gamma_dest > z) = L1 + L2``."""
    terms = dest_snr_terms(z, dest, cfg, gcq)
    out = terms["L1"] + terms["L2"]
    return out if np.ndim(z) else float(out[0])


def cdf_dest_snr(z, dest: str, cfg: SystemConfig, gcq: GcqSettings | None = None):
    """``P(gamma_dest <= z) = 1 - L1 - L2``, clamped to [0, 1].

    At ``z = 0`` this is exactly the probability that the relay stays silent.
    """
    if gcq is None:
        gcq = GcqSettings.from_config(cfg)
    out = np.clip(1.0 - np.atleast_1d(ccdf_dest_snr(np.atleast_1d(z), dest, cfg, gcq)), 0.0, 1.0)
    return out if np.ndim(z) else float(out[0])


def _exp_window(mean: float, lo: float, hi: float) -> float:
    # mean * (e^{-lo/mean} - e^{-hi/mean}) without cancellation
    if mean <= 0:
        return 0.0
    return -mean * math.exp(-lo / mean) * math.expm1(-(hi - lo) / mean)


def relay_mean_snr(source: str, cfg: SystemConfig) -> float:
    return (1.0 - cfg.rho) * cfg.power(source) * cfg.uplink_alpha(source) / cfg.noise_r


def relay_success_closed_form(source: str, cfg: SystemConfig) -> float:
    """``1 - eps_relay`` for ``source``'s block, exact under the linearized kernel.

    The SNR CDF vanishes below zero, so when ``phi_low < 0`` the integral
    starts at 0 and the segment ``[phi_low, 0)`` contributes success mass
    ``beta sqrt(n) (0 - phi_low)``.
    """
    lc = linearization(cfg.uplink_code(source))
    mean = relay_mean_snr(source, cfg)
    lo = max(lc.phi_low, 0.0)
    val = lc.slope * (_exp_window(mean, lo, lc.delta_high) + (lo - lc.phi_low))
    return min(max(val, 0.0), 1.0)


def eps_relay_closed_form(source: str, cfg: SystemConfig) -> float:
    """Relay block error probability for ``source``'s uplink block.

    For ``phi_low >= 0`` this is
    ``1 - beta sqrt(n) mu (e^{-phi_low/mu} - e^{-delta_high/mu})`` with mean
    SNR ``mu = (1 - rho) P a / sigma_R^2``; ``rho = 1`` gives 1.
    """
    return 1.0 - relay_success_closed_form(source, cfg)


def dest_success_gcq(dest: str, cfg: SystemConfig, gcq: GcqSettings | None = None) -> float:
    """``1 - eps_dest``: ``beta sqrt(n)`` times the GCQ integral of the SNR survival."""
    if gcq is None:
        gcq = GcqSettings.from_config(cfg)
    lc = linearization(cfg.downlink_code(dest))
    lo = max(lc.phi_low, 0.0)
    integral = gcq_integrate(
        lambda z: np.reshape(ccdf_dest_snr(z.ravel(), dest, cfg, gcq), z.shape),
        lo, lc.delta_high, gcq.nodes_v, gcq.endpoint_correction,
    )
    val = lc.slope * (float(integral) + (lo - lc.phi_low))
    if val < -1e-9 or val > 1 + 1e-9:
        log.warning("GCQ success probability %.3g outside [0, 1]; clamping", val)
    return min(max(val, 0.0), 1.0)


def eps_dest_gcq(dest: str, cfg: SystemConfig, gcq: GcqSettings | None = None) -> float:
    """Block error probability of the relay-to-``dest`` block (GCQ evaluation)."""
    return 1.0 - dest_success_gcq(dest, cfg, gcq)


def q_kernel_density(z, code: LinkCode):
    """``-d/dz Q(x(z))``: the density of the exact kernel's decoding threshold."""
    z = np.asarray(z, dtype=float)
    n, k = code.n, code.k
    ln2 = math.log(2.0)
    lim = 0.5 / ln2**2
    c = np.log1p(z) / ln2
    v = lim * -np.expm1(-2.0 * np.log1p(z))
    dc = 1.0 / ((1.0 + z) * ln2)
    dv = 2.0 * lim / (1.0 + z) ** 3
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.sqrt(n * v)
        x = (n * c - k) / b
        dx = n * dc / b - (n * c - k) * n * dv / (2.0 * b**3)
        out = norm.pdf(x) * dx
    return np.where(z > 0, np.nan_to_num(out, nan=0.0, posinf=0.0), 0.0)


def _threshold_window(code: LinkCode, tail: float = 9.0) -> tuple[float, float]:
    """SNR interval outside which the exact kernel is within Q(tail) of 0 or 1."""
    def arg(z, target):
        return q_argument(z, code) - target
    lin = linearization(code)
    hi = max(lin.delta_high, 1e-3)
    while arg(hi, tail) < 0:
        hi *= 2.0
    z_hi = optimize.brentq(arg, 1e-300, hi, args=(tail,), xtol=1e-15, rtol=1e-12)
    z_lo = optimize.brentq(arg, 1e-300, z_hi, args=(-tail,), xtol=1e-300, rtol=1e-12)
    return z_lo, z_hi


def eps_exact_from_cdf(cdf, code: LinkCode, tol: float = 1e-10) -> float:
    """``E[Q(x(gamma))]`` for an SNR with CDF ``cdf``, by parts.

    ``E[K(gamma)] = int_0^inf F(z) (-K'(z)) dz`` holds for any SNR law on
    [0, inf) including an atom at zero, since ``K(0) = 1`` and ``K(inf) = 0``.
    """
    if code.k == 0:
        return 0.0
    z_lo, z_hi = _threshold_window(code)
    lin = linearization(code)
    pts = [p for p in (lin.phi_low, lin.psi, lin.delta_high) if z_lo < p < z_hi]
    val, err, *rest = integrate.quad(
        lambda z: float(cdf(z)) * float(q_kernel_density(z, code)),
        z_lo, z_hi, points=pts or None, epsabs=tol, epsrel=1e-10, limit=1000, full_output=1,
    )
    if err > 10 * tol:
        raise QuadratureError(f"exact error integral did not converge (estimate {err:.2e})")
    return min(max(val, 0.0), 1.0)


def eps_exact_numeric(link: str, node: str, cfg: SystemConfig, gcq: GcqSettings | None = None) -> float:
    """Block error probability under the exact Q kernel (no linearization).

    ``link`` is ``"relay"`` (``node`` = transmitting source) or ``"dest"``
    (``node`` = receiving source).
    """
    if link == "relay":
        code = cfg.uplink_code(node)
        mean = relay_mean_snr(node, cfg)
        if mean == 0:
            return 1.0 if code.k > 0 else 0.0
        return eps_exact_from_cdf(lambda z: -math.expm1(-z / mean), code)
    if link == "dest":
        code = cfg.downlink_code(node)
        g = gcq or GcqSettings.from_config(cfg)
        return eps_exact_from_cdf(lambda z: cdf_dest_snr(z, node, cfg, g), code)
    raise ValueError(f"link must be 'relay' or 'dest', got {link!r}")


def success_probability(eps_r: float, eps_d: float) -> float:
    """Both hops must decode: ``1 - (eps_r + (1 - eps_r) eps_d)``."""
    for e in (eps_r, eps_d):
        if not 0.0 <= e <= 1.0:
            raise ValueError(f"error probability outside [0, 1]: {e}")
    return (1.0 - eps_r) * (1.0 - eps_d)


def aaoi(cycle: float, phi: float) -> float:
    """Average age ``T/2 + T/phi`` for generate-at-will over cycles of length T.

    Returns :data:`UNBOUNDED` when ``phi == 0``.
    """
    if not cycle > 0:
        raise ValueError("cycle length must be positive")
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"success probability outside [0, 1]: {phi}")
    if phi == 0.0:
        return UNBOUNDED
    return cycle / 2.0 + cycle / phi


def interdeparture_moments(cycle: float, phi: float) -> tuple[float, float]:
    """Mean and second moment of the geometric gap between deliveries."""
    return cycle / phi, cycle**2 * (2.0 - phi) / phi**2


def weighted_sum_aaoi(aaoi_a: float, aaoi_b: float, w_a: float, w_b: float) -> float:
    if w_a < 0 or w_b < 0:
        raise ValueError("weights must be nonnegative")
    # zero weight suppresses an unbounded term instead of producing nan
    return sum(w * x for w, x in ((w_a, aaoi_a), (w_b, aaoi_b)) if w > 0)


def evaluate(cfg: SystemConfig, gcq: GcqSettings | None = None) -> AoiReport:
    """Closed-form relay errors plus GCQ destination errors, end to end."""
    gcq = gcq or GcqSettings.from_config(cfg)
    ok_relay = {s: relay_success_closed_form(s, cfg) for s in "ab"}
    ok_dest = {d: dest_success_gcq(d, cfg, gcq) for d in "ab"}
    return _report(cfg, ok_relay, ok_dest, "closed-form")


def evaluate_exact(cfg: SystemConfig, gcq: GcqSettings | None = None) -> AoiReport:
    """Same chain with the exact Q kernel integrated numerically."""
    ok_relay = {s: 1.0 - eps_exact_numeric("relay", s, cfg) for s in "ab"}
    ok_dest = {d: 1.0 - eps_exact_numeric("dest", d, cfg, gcq) for d in "ab"}
    return _report(cfg, ok_relay, ok_dest, "exact-quadrature")


def _report(cfg, ok_relay, ok_dest, method) -> AoiReport:
    # success products are formed from the complements directly so that
    # tiny probabilities survive
    phi = {i: ok_relay[other(i)] * ok_dest[i] for i in "ab"}
    ages = {i: aaoi(cfg.cycle, phi[i]) for i in "ab"}
    return AoiReport(
        eps_relay_a=1.0 - ok_relay["a"],
        eps_relay_b=1.0 - ok_relay["b"],
        eps_dest_a=1.0 - ok_dest["a"],
        eps_dest_b=1.0 - ok_dest["b"],
        phi_a=phi["a"],
        phi_b=phi["b"],
        aaoi_a=ages["a"],
        aaoi_b=ages["b"],
        weighted_sum=weighted_sum_aaoi(ages["a"], ages["b"], cfg.w_a, cfg.w_b),
        method=method,
    )
