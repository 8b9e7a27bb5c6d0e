import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from swipt_aoi.channel import (
    HypoExpParams,
    LinkGeometry,
    exp_cdf,
    exp_pdf,
    exp_sf,
    hypoexp_cdf,
    hypoexp_pdf,
    hypoexp_sf,
    path_loss_alpha,
    sample_fading,
    sample_gains,
    unit_gain_distance,
)


def test_path_loss_at_30m():
    a = path_loss_alpha(LinkGeometry(30.0, 900e6))
    assert a == pytest.approx(7.81799e-7, rel=1e-5)
    assert 10 * math.log10(a) == pytest.approx(-61.069, abs=1e-3)


def test_path_loss_inverse_square():
    a1 = path_loss_alpha(LinkGeometry(10.0, 900e6))
    a2 = path_loss_alpha(LinkGeometry(20.0, 900e6))
    assert a1 / a2 == pytest.approx(4.0)


def test_unit_gain_distance():
    d0 = unit_gain_distance(900e6)
    assert path_loss_alpha(LinkGeometry(d0, 900e6)) == pytest.approx(1.0)


@pytest.mark.parametrize("d, f", [(0.0, 900e6), (-1.0, 900e6), (30.0, 0.0)])
def test_geometry_rejects_nonpositive(d, f):
    with pytest.raises(ValueError):
        LinkGeometry(d, f)


def test_gains_unit_mean_and_independent():
    g = sample_gains(np.random.default_rng(3), 400_000)
    assert g.shape == (400_000, 4)
    assert np.all(g >= 0)
    assert np.allclose(g.mean(axis=0), 1.0, atol=0.01)
    c = np.corrcoef(g.T)
    assert np.max(np.abs(c - np.eye(4))) < 0.01


def test_sample_fading_reproducible():
    a = sample_fading(np.random.default_rng(7))
    b = sample_fading(np.random.default_rng(7))
    assert a == b


def test_exponential_helpers():
    assert exp_cdf(0.0) == 0.0
    assert exp_sf(0.0) == 1.0
    assert exp_pdf(-1.0) == 0.0
    assert exp_cdf(1.0) + exp_sf(1.0) == pytest.approx(1.0)
    assert exp_cdf(1e-20) == pytest.approx(1e-20)


def _convolution_sf(z, a, b):
    # P(X + Y > z) = P(X > z) + int_0^z f_X(x) P(Y > z - x) dx
    inner, _ = integrate.quad(lambda x: math.exp(-x / a) / a * math.exp(-(z - x) / b), 0, z,
                              epsabs=1e-14, epsrel=1e-12)
    return math.exp(-z / a) + inner


@pytest.mark.parametrize("a, b", [(1.0, 2.0), (3.0, 0.5), (1.0, 1.0), (2.0, 2.0 * (1 + 1e-12))])
@pytest.mark.parametrize("z", [0.1, 1.0, 5.0, 20.0])
def test_hypoexp_sf_matches_convolution(a, b, z):
    p = HypoExpParams(a, b)
    assert hypoexp_sf(z, p) == pytest.approx(_convolution_sf(z, a, b), rel=1e-9)


def test_hypoexp_pdf_integrates_to_cdf():
    p = HypoExpParams(0.7, 1.9)
    for z in (0.5, 3.0, 10.0):
        val, _ = integrate.quad(lambda y: hypoexp_pdf(y, p), 0, z)
        assert val == pytest.approx(hypoexp_cdf(z, p), rel=1e-9)


def test_hypoexp_edges():
    p = HypoExpParams(1.0, 3.0)
    assert hypoexp_cdf(0.0, p) == 0.0
    assert hypoexp_sf(math.inf, p) == 0.0
    assert hypoexp_pdf(-1.0, p) == 0.0
    assert hypoexp_cdf(-5.0, p) == 0.0


def test_hypoexp_tail_has_no_cancellation():
    # deep tail: sf ~ a/(a-b) e^{-z/a}, far below double precision of 1 - cdf
    p = HypoExpParams(1.0, 0.5)
    z = 60.0
    expected = (1.0 * math.exp(-z) - 0.5 * math.exp(-z / 0.5)) / 0.5
    assert hypoexp_sf(z, p) == pytest.approx(expected, rel=1e-12)


def test_hypoexp_rejects_nonpositive_scale():
    with pytest.raises(ValueError):
        HypoExpParams(0.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(1e-3, 1e3),
    ratio=st.floats(1e-12, 1e-6),
    z=st.floats(0.0, 50.0),
)
def test_hypoexp_continuous_across_tie(a, ratio, z):
    tied = HypoExpParams(a, a)
    near = HypoExpParams(a, a * (1 + ratio))
    zz = z * a
    # a genuine scale change of ``ratio`` moves the law by O((1 + z) ratio)
    tol = 4 * (1 + z) * ratio + 1e-9
    assert hypoexp_sf(zz, near) == pytest.approx(hypoexp_sf(zz, tied), rel=tol, abs=1e-300)
    assert hypoexp_pdf(zz, near) == pytest.approx(hypoexp_pdf(zz, tied), rel=tol, abs=1e-300)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(1e-3, 1e3), b=st.floats(1e-3, 1e3), z1=st.floats(0, 1e4), z2=st.floats(0, 1e4))
def test_hypoexp_cdf_is_a_cdf(a, b, z1, z2):
    p = HypoExpParams(a, b)
    lo, hi = sorted((z1, z2))
    c_lo, c_hi = hypoexp_cdf(lo, p), hypoexp_cdf(hi, p)
    assert 0.0 <= c_lo <= c_hi <= 1.0
    assert hypoexp_pdf(lo, p) >= 0.0
