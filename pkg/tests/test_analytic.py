import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from oracles import dest_cdf, eps_linearized
from swipt_aoi import analytic
from swipt_aoi.analytic import (
    GcqSettings,
    UNBOUNDED,
    aaoi,
    ccdf_dest_snr,
    cdf_dest_snr,
    dest_snr_terms,
    eps_dest_gcq,
    eps_exact_numeric,
    eps_relay_closed_form,
    evaluate,
    evaluate_exact,
    gcq_integrate,
    gcq_rule,
    interdeparture_moments,
    success_probability,
    weighted_sum_aaoi,
)
from swipt_aoi.channel import HypoExpParams, hypoexp_cdf
from swipt_aoi.config import SystemConfig
from swipt_aoi.fbl import LinkCode, linearization

# frozen reference values, computed with the independent oracle in oracles.py
EPS_DEST_DEFAULT = 0.15775369478160906
P_OFF_DEFAULT = 0.1116383


def test_gcq_rule_integrates_weighted_polynomials():
    t, w = gcq_rule(20)
    # dividing out sqrt(1 - t^2) recovers the first-kind rule, exact for
    # int t^2 / sqrt(1 - t^2) dt = pi / 2
    assert np.sum(w * t**2 / np.sqrt(1 - t**2)) == pytest.approx(math.pi / 2, rel=1e-12)
    assert np.sum(w * t**2) == pytest.approx(2 / 3, abs=1e-2)


@pytest.mark.parametrize("corr", [True, False])
def test_gcq_integrate_smooth(corr):
    val = gcq_integrate(np.exp, 0.0, 1.0, 200, corr)
    assert val == pytest.approx(math.e - 1, abs=1e-4 if not corr else 1e-10)


def test_endpoint_correction_reduces_error():
    f = lambda x: np.exp(-3 * x) + x
    exact = (1 - math.exp(-3)) / 3 + 0.5
    plain = abs(gcq_integrate(f, 0.0, 1.0, 50, False) - exact)
    corr = abs(gcq_integrate(f, 0.0, 1.0, 50, True) - exact)
    assert corr < plain / 100


def test_gcq_settings_validate():
    with pytest.raises(ValueError):
        GcqSettings(nodes_v=0)


def test_relay_error_matches_integral(cfg):
    for s in "ab":
        lin = linearization(cfg.uplink_code(s))
        mu = analytic.relay_mean_snr(s, cfg)
        ref = eps_linearized(lambda z: -math.expm1(-z / mu), lin)
        assert eps_relay_closed_form(s, cfg) == pytest.approx(ref, abs=1e-12)


def test_relay_error_limits(cfg):
    assert eps_relay_closed_form("a", cfg.replace(rho=1.0)) == 1.0
    assert eps_relay_closed_form("a", cfg.replace(p_a=1e9)) < 1e-9


def test_relay_error_negative_phi_low(cfg):
    # k = 4 on n = 200 puts phi_low below zero; the CDF is 0 there
    c = cfg.replace(k_ar=4)
    lin = linearization(c.uplink_code("a"))
    assert lin.phi_low < 0
    mu = analytic.relay_mean_snr("a", c)
    ref = eps_linearized(lambda z: -math.expm1(-z / mu), lin)
    assert eps_relay_closed_form("a", c) == pytest.approx(ref, abs=1e-12)


def test_cdf_at_zero_is_off_probability(cfg):
    k = cfg.rho * cfg.eta * cfg.t1
    p = HypoExpParams(cfg.p_a * cfg.alpha_ar, cfg.p_b * cfg.alpha_br)
    off = hypoexp_cdf(cfg.e_min / k, p)
    assert cdf_dest_snr(0.0, "a", cfg) == pytest.approx(off, rel=1e-12)
    assert off == pytest.approx(P_OFF_DEFAULT, rel=1e-6)
    assert cdf_dest_snr(1e12, "a", cfg) == pytest.approx(1.0)


@pytest.mark.parametrize("z", [1e-3, 0.05, 0.2, 1.0, 10.0, 100.0])
def test_cdf_matches_oracle(cfg, z):
    adaptive = 1.0 - ccdf_dest_snr(z, "a", cfg, gcq=None)
    assert adaptive == pytest.approx(dest_cdf(z, "a", cfg), abs=1e-13)
    assert cdf_dest_snr(z, "b", cfg) == pytest.approx(dest_cdf(z, "b", cfg), abs=1e-8)


def test_survival_terms_sum(cfg):
    terms = dest_snr_terms(0.3, "a", cfg)
    assert terms["L1"] + terms["L2"] == pytest.approx(ccdf_dest_snr(0.3, "a", cfg), rel=1e-12)


def test_cdf_asymmetric_config():
    c = SystemConfig(p_a=2.0, d_br=45.0, noise_b=3e-13, n_ar=150, k_rb=48)
    for z in (0.01, 0.3, 3.0):
        for d in "ab":
            assert cdf_dest_snr(z, d, c) == pytest.approx(dest_cdf(z, d, c), abs=1e-9)


def test_dest_error_default(cfg):
    assert eps_dest_gcq("a", cfg) == pytest.approx(EPS_DEST_DEFAULT, abs=1e-9)
    assert eps_dest_gcq("a", cfg, GcqSettings(endpoint_correction=False)) == pytest.approx(
        EPS_DEST_DEFAULT, abs=1e-4)


def test_dest_error_relay_always_off(cfg):
    # E_min above anything reachable: the CDF is 1 on the whole interval
    c = cfg.replace(p_a=1e-6, p_b=1e-6)
    assert eps_dest_gcq("a", c) == pytest.approx(1.0, abs=1e-12)


def test_exact_relay_error_near_linearized(cfg):
    exact = eps_exact_numeric("relay", "a", cfg)
    assert abs(exact - eps_relay_closed_form("a", cfg)) <= 0.05


def test_exact_error_zero_bits():
    from swipt_aoi.analytic import eps_exact_from_cdf
    assert eps_exact_from_cdf(lambda z: 1.0, LinkCode(200, 0)) == 0.0


def test_exact_relay_error_oracle(cfg):
    # E[Q(x(gamma))] with exponential gamma, integrated directly against the density
    from swipt_aoi.fbl import eps_conditional
    mu = analytic.relay_mean_snr("a", cfg)
    code = cfg.uplink_code("a")
    ref, _ = integrate.quad(lambda g: eps_conditional(g, code) * math.exp(-g / mu) / mu, 0, 2.0,
                            epsabs=1e-14, limit=200)
    assert eps_exact_numeric("relay", "a", cfg) == pytest.approx(ref, abs=1e-10)


def test_exact_dest_error_near_linearized(cfg):
    exact = eps_exact_numeric("dest", "a", cfg)
    assert abs(exact - EPS_DEST_DEFAULT) <= 0.05
    with pytest.raises(ValueError):
        eps_exact_numeric("uplink", "a", cfg)


def test_success_probability():
    assert success_probability(0.0, 0.0) == 1.0
    assert success_probability(1.0, 0.3) == 0.0
    assert success_probability(0.1, 0.2) == pytest.approx(0.72)
    with pytest.raises(ValueError):
        success_probability(1.2, 0.0)


def test_aaoi_values():
    T = 12e-3
    assert aaoi(T, 1.0) == pytest.approx(1.5 * T)
    assert aaoi(T, 0.5) == pytest.approx(30e-3)
    assert aaoi(T, 0.0) is UNBOUNDED
    with pytest.raises(ValueError):
        aaoi(T, 1.5)


def test_interdeparture_moments_give_aaoi():
    T, phi = 12e-3, 0.37
    m1, m2 = interdeparture_moments(T, phi)
    assert m2 / (2 * m1) + T == pytest.approx(aaoi(T, phi))


def test_weighted_sum():
    assert weighted_sum_aaoi(18e-3, 18e-3, 0.5, 0.5) == pytest.approx(18e-3)
    assert weighted_sum_aaoi(20e-3, math.inf, 1.0, 0.0) == 20e-3
    with pytest.raises(ValueError):
        weighted_sum_aaoi(1, 1, -1, 2)


def test_evaluate_defaults(cfg):
    r = evaluate(cfg)
    assert r.eps_relay_a == pytest.approx(3.0e-8, rel=0.05)
    assert r.eps_dest_a == pytest.approx(EPS_DEST_DEFAULT, abs=1e-9)
    assert r.phi_a == pytest.approx(0.842246, abs=1e-6)
    assert r.aaoi_a == pytest.approx(20.2476e-3, rel=1e-5)
    # symmetric scenario
    assert r.aaoi_a == r.aaoi_b
    assert r.weighted_sum == pytest.approx(r.aaoi_a)
    assert r.weighted_sum >= 18e-3


def test_evaluate_zero_split_is_unbounded(cfg):
    r = evaluate(cfg.replace(rho=0.0))
    assert r.weighted_sum == UNBOUNDED and r.aaoi_a is UNBOUNDED and r.phi_a == 0.0


def test_evaluate_keeps_tiny_success(cfg):
    r = evaluate(cfg.replace(p_a=0.01, p_b=0.01))
    assert 0.0 < r.phi_a < 1e-15
    assert math.isfinite(r.weighted_sum)


def test_evaluate_exact_close_to_closed_form(cfg):
    r = evaluate_exact(cfg.replace(p_a=10.0, p_b=10.0))
    assert r.method == "exact-quadrature"
    assert r.weighted_sum == pytest.approx(18.1175e-3, abs=2e-6)


@settings(max_examples=25, deadline=None)
@given(
    p=st.floats(0.05, 20.0),
    d=st.floats(10.0, 80.0),
    rho=st.floats(0.05, 0.95),
)
def test_errors_are_probabilities(p, d, rho):
    c = SystemConfig(p_a=p, p_b=p, d_ar=d, d_br=d, rho=rho)
    r = evaluate(c)
    for v in (r.eps_relay_a, r.eps_dest_a, r.phi_a, r.phi_b):
        assert 0.0 <= v <= 1.0
    assert r.aaoi_a >= 1.5 * c.cycle


@settings(max_examples=25, deadline=None)
@given(z1=st.floats(0.0, 50.0), z2=st.floats(0.0, 50.0), p=st.floats(0.1, 10.0))
def test_cdf_monotone(z1, z2, p):
    c = SystemConfig(p_a=p, p_b=p)
    lo, hi = sorted((z1, z2))
    f_lo, f_hi = cdf_dest_snr(np.array([lo, hi]), "a", c)
    assert 0.0 <= f_lo <= f_hi + 1e-12 <= 1.0 + 1e-12


def test_gcq_converges(cfg):
    diffs = []
    for k in (10, 25, 50, 100):
        e1 = eps_dest_gcq("a", cfg, GcqSettings(k, k))
        e2 = eps_dest_gcq("a", cfg, GcqSettings(2 * k, 2 * k))
        diffs.append(abs(e1 - e2))
    assert all(b < a for a, b in zip(diffs, diffs[1:]))
    assert diffs[-1] < 1e-6


def test_unclamped_cdf_nearly_in_range(cfg):
    z = np.concatenate(([0.0], np.geomspace(1e-4, 1e3, 999)))
    f = 1.0 - ccdf_dest_snr(z, "a", cfg, GcqSettings.from_config(cfg))
    assert np.all(f >= -1e-6) and np.all(f <= 1 + 1e-6)
    assert np.all(np.diff(cdf_dest_snr(z, "a", cfg)) >= -1e-12)


@settings(max_examples=200, deadline=None)
@given(p1=st.floats(1e-6, 1.0), p2=st.floats(1e-6, 1.0), t=st.floats(1e-4, 1.0))
def test_aaoi_monotone(p1, p2, t):
    lo, hi = sorted((p1, p2))
    assert aaoi(t, hi) <= aaoi(t, lo)
    assert aaoi(t, p1) < aaoi(2 * t, p1)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(0, 1), b=st.floats(0, 1))
def test_success_product(a, b):
    assert success_probability(a, b) == pytest.approx((1 - a) * (1 - b))
