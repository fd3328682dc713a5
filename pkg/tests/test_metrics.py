import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from corrsir.metrics import FitReport, FitValidationError, fit_report, kld, ksd
from corrsir.montecarlo import empirical_cdf


def norm_cdf(x):
    return stats.norm.cdf(x, 3.0, 7.0)


def norm_pdf(x):
    return stats.norm.pdf(x, 3.0, 7.0)


@pytest.fixture(scope="module")
def normal_samples():
    return empirical_cdf(np.random.default_rng(99).normal(3.0, 7.0, 10 ** 6))


def test_ksd_matches_scipy(normal_samples):
    d = ksd(normal_samples, norm_cdf)
    assert d == pytest.approx(stats.kstest(normal_samples.values, norm_cdf).statistic, abs=1e-12)
    assert d < 0.002


def test_ksd_step_at_median():
    emp = empirical_cdf(np.random.default_rng(1).standard_normal(10_001))
    med = float(np.median(emp.values))
    d = ksd(emp, lambda x: (np.asarray(x) >= med).astype(float))
    assert abs(d - 0.5) <= 1 / emp.n


def test_ksd_degenerate_identical():
    emp = empirical_cdf(np.full(500, 4.2))
    assert ksd(emp, lambda x: (np.asarray(x) >= 4.2).astype(float)) == 0.0


def test_ksd_against_own_ecdf(normal_samples):
    assert ksd(normal_samples, normal_samples) == 0.0


def test_ksd_errors():
    emp = empirical_cdf(np.arange(50.0))
    with pytest.raises(FitValidationError):
        ksd(emp, norm_cdf)
    big = empirical_cdf(np.linspace(-1, 1, 1000))
    with pytest.raises(FitValidationError):
        ksd(big, lambda x: 0.5 + 0.4 * np.sin(8 * np.asarray(x)))


def test_kld_same_law(normal_samples):
    value = kld(normal_samples, norm_pdf)
    assert 0 <= value < 5e-3
    # plug-in bias is about (bins - 1) / (2 n)
    assert value == pytest.approx(199 / 2e6, rel=0.5)


def test_kld_identical_discrete():
    # samples sit exactly on cell centres with a uniform law: P == Q
    emp = empirical_cdf(np.repeat(np.arange(100) + 0.5, 10))
    assert kld(emp, lambda x: np.ones_like(x), bins=100, support=(0.0, 100.0)) == pytest.approx(0.0, abs=1e-12)


def test_kld_shift_invariance(normal_samples):
    base = kld(normal_samples, norm_pdf)
    moved = empirical_cdf(normal_samples.values + 20.0)
    assert kld(moved, lambda x: norm_pdf(np.asarray(x) - 20.0)) == pytest.approx(base, abs=1e-10)


def test_kld_floor_flag():
    emp = empirical_cdf(np.random.default_rng(2).uniform(0, 10, 5000))
    value, floored = kld(emp, lambda x: (np.asarray(x) < 5).astype(float), bins=20,
                         support=(0.0, 10.0), return_flag=True)
    assert floored and value > 10


def test_kld_errors(normal_samples):
    with pytest.raises(ValueError):
        kld(normal_samples, norm_pdf, bins=5)
    with pytest.raises(ValueError):
        kld(normal_samples, norm_pdf, support=(1.0, 1.0))
    with pytest.raises(ValueError):
        kld(normal_samples, norm_pdf, support=(0.0, 5.0))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-3, 3), st.floats(0.3, 3))
def test_kld_nonnegative(seed, shift, scale):
    emp = empirical_cdf(np.random.default_rng(seed).standard_normal(2000))
    lo, hi = float(emp.values[0]), float(emp.values[-1])
    assert kld(emp, lambda x: stats.norm.pdf(x, shift, scale), bins=30, support=(lo, hi)) >= 0.0


def test_fit_report(normal_samples):
    rep = fit_report(normal_samples, norm_cdf, norm_pdf)
    assert isinstance(rep, FitReport) and rep.bins == 200 and not rep.q_floored
    d = rep.to_dict()
    assert d["kld_direction"] == "simulated||analytical"
    with pytest.raises(ValueError):
        FitReport(-1.0, 0.1, 200, (0, 1))
