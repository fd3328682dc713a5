import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from corrsir.fading import (
    NO_FADING, XI, GammaFading, LognormalParams, composite_to_lognormal, lognormal_linear_moments,
)


def test_xi_constant():
    assert XI == pytest.approx(4.342944819032518, abs=1e-15)


def test_lognormal_params_validation():
    with pytest.raises(ValueError):
        LognormalParams(0.0, -1.0)
    with pytest.raises(ValueError):
        LognormalParams(float("nan"), 1.0)
    assert LognormalParams(1.0, 2.0).shifted(3.0) == LognormalParams(4.0, 2.0)


def test_gamma_shape_validation():
    with pytest.raises(ValueError):
        GammaFading(0.49)
    GammaFading(0.5)


@pytest.mark.parametrize("m,sigma,shift,sigma_hat", [
    (1, 9.6, -2.51, 11.1),
    (5, 1.8, -0.45, 2.72),
    (1, 6.0, -2.51, 8.19),
])
def test_composite_reduction_examples(m, sigma, shift, sigma_hat):
    out = composite_to_lognormal(LognormalParams(0.0, sigma), GammaFading(m))
    assert out.mu_db == pytest.approx(shift, abs=0.005)
    assert out.sigma_db == pytest.approx(sigma_hat, abs=0.05)


def test_composite_reduction_exact_values():
    # Rayleigh: shift = -xi * gamma_E, extra variance = xi^2 pi^2 / 6
    out = composite_to_lognormal(LognormalParams(-70.0, 6.0), GammaFading(1.0))
    assert out.mu_db == pytest.approx(-70.0 - XI * 0.5772156649015329, abs=1e-12)
    assert out.sigma_db == pytest.approx(math.sqrt(36.0 + XI ** 2 * math.pi ** 2 / 6), abs=1e-12)


def test_rayleigh_log_moments_match_exponential():
    # 10 log10 of a unit exponential has mean -xi*gamma_E and variance xi^2 pi^2/6
    g = GammaFading(1.0)
    mean = integrate.quad(lambda t: XI * math.log(t) * math.exp(-t), 0, np.inf)[0]
    assert g.log_mean_db == pytest.approx(mean, abs=1e-8)


def test_no_fading_sentinel():
    shadow = LognormalParams(-3.0, 4.0)
    assert composite_to_lognormal(shadow, GammaFading(NO_FADING)) == shadow


def test_large_shape_converges_to_shadow():
    shadow = LognormalParams(0.0, 6.0)
    out = composite_to_lognormal(shadow, GammaFading(1e6))
    assert abs(out.mu_db) < 1e-5
    assert abs(out.sigma_db - 6.0) < 1e-5


@pytest.mark.parametrize("m,sigma", [(1.0, 9.6), (5.0, 1.8)])
def test_composite_reduction_monte_carlo(m, sigma):
    rng = np.random.default_rng(7)
    n = 10 ** 6
    x = sigma * rng.standard_normal(n) + 10 * np.log10(rng.standard_gamma(m, n) / m)
    out = composite_to_lognormal(LognormalParams(0.0, sigma), GammaFading(m))
    d = stats.kstest(x, "norm", args=(out.mu_db, out.sigma_db)).statistic
    assert d < 0.02


def test_linear_moments_examples():
    assert lognormal_linear_moments(LognormalParams(0.0, 0.0)) == (1.0, 0.0)
    mean, std = lognormal_linear_moments(LognormalParams(0.0, 8.0))
    # frozen: exp(0.5*(8/xi)^2) and its companion std, 18 digits
    assert mean == pytest.approx(5.45540791870232217, rel=1e-14)
    assert std == pytest.approx(29.2572034192556519, rel=1e-13)


def test_linear_moments_monte_carlo():
    rng = np.random.default_rng(11)
    y = 10 ** (8.0 * rng.standard_normal(10 ** 7) / 10)
    mean, _ = lognormal_linear_moments(LognormalParams(0.0, 8.0))
    assert abs(y.mean() / mean - 1) < 0.01


@given(st.floats(-40, 40), st.floats(0, 12))
def test_linear_moments_scale_equivariance(mu, sigma):
    m0, s0 = lognormal_linear_moments(LognormalParams(mu, sigma))
    m1, s1 = lognormal_linear_moments(LognormalParams(mu + 10.0, sigma))
    assert m1 == pytest.approx(10 * m0, rel=1e-12)
    assert s1 == pytest.approx(10 * s0, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("mu,sigma", [(0.0, 1.0), (-5.0, 6.0), (3.0, 11.1), (0.0, 0.3)])
def test_linear_moments_against_integration(mu, sigma):
    def dens(x):
        return stats.norm.pdf(x, mu, sigma)

    lo, hi = mu - 40 * sigma, mu + 40 * sigma
    m1 = integrate.quad(lambda x: 10 ** (x / 10) * dens(x), lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0]
    m2 = integrate.quad(lambda x: 10 ** (x / 5) * dens(x), lo, hi, epsabs=0, epsrel=1e-13, limit=400)[0]
    mean, std = lognormal_linear_moments(LognormalParams(mu, sigma))
    assert mean == pytest.approx(m1, rel=1e-9)
    assert std == pytest.approx(math.sqrt(m2 - m1 * m1), rel=1e-9)
