import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from corrsir.correlation import (
    CorrelationPair, desired_interference_correlation, rho_db_from_linear, rho_linear_from_db,
    rho_linear_sum,
)
from corrsir.fading import XI, LognormalParams, lognormal_linear_moments
from corrsir.mgf import match_equivalent_lognormal
from corrsir.scenario import CorrelatedSumModel, build_sum_model, hex_uma_scene, joint_covariance


def test_pair_validation():
    CorrelationPair(0.3, 0.5)
    with pytest.raises(ValueError):
        CorrelationPair(1.2, 0.5)


def test_uncorrelated_gives_zero():
    d = LognormalParams(-60.0, 8.19)
    m = CorrelatedSumModel(np.array([-70.0, -75.0]), np.diag([67.0, 67.0]), np.array([1.0, 0.5]))
    assert rho_linear_sum(d, m, np.zeros(2), 1e-7) == 0.0
    assert rho_db_from_linear(0.0, 3.0, 4.0) == 0.0


def test_single_term_is_pair_correlation():
    d = LognormalParams(0.0, 6.0)
    link = LognormalParams(-3.0, 9.0)
    m = CorrelatedSumModel(np.array([link.mu_db]), np.array([[81.0]]), np.ones(1))
    _, sy = lognormal_linear_moments(link)
    assert rho_linear_sum(d, m, np.array([0.4]), sy) == pytest.approx(rho_linear_from_db(0.4, 6.0, 9.0), rel=1e-14)


def test_sigma_y_domain():
    d = LognormalParams(0.0, 6.0)
    m = CorrelatedSumModel(np.zeros(1), np.eye(1), np.ones(1))
    with pytest.raises(ValueError):
        rho_linear_sum(d, m, np.zeros(1), 0.0)


def test_round_trip_example():
    lin = rho_linear_from_db(0.5, 2.72, 11.1)
    assert abs(rho_db_from_linear(lin, 2.72, 11.1) - 0.5) < 1e-12


def test_upper_boundary():
    lin = rho_linear_from_db(1.0, 8.0, 8.0)
    assert lin == pytest.approx(1.0, abs=1e-15)
    assert abs(rho_db_from_linear(lin, 8.0, 8.0) - 1.0) < 1e-9
    val, flag = rho_db_from_linear(lin * (1 + 1e-12), 8.0, 8.0, with_flag=True)
    assert val == 1.0 and flag


def test_below_attainable_bound():
    # for sigma=12 dB the most negative attainable linear correlation is about -0.16
    with pytest.raises(ValueError):
        rho_db_from_linear(-0.5, 12.0, 12.0)


@given(st.floats(-0.9, 1.0), st.floats(0.5, 12.0), st.floats(0.5, 12.0))
def test_round_trip_property(rho, s0, sx):
    lin = rho_linear_from_db(rho, s0, sx)
    assert abs(rho_db_from_linear(lin, s0, sx, strict=False) - rho) < 1e-12


@pytest.mark.parametrize("s0,sx", [(2.72, 11.1), (8.0, 8.0), (0.5, 12.0)])
def test_inverse_strictly_increasing(s0, sx):
    lo = rho_linear_from_db(-0.9, s0, sx)
    hi = rho_linear_from_db(1.0, s0, sx)
    vals = [rho_db_from_linear(x, s0, sx) for x in np.linspace(lo, hi, 500)]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("sigma", [1.0, 4.0, 8.19, 12.0])
def test_db_correlation_dominates(sigma):
    for lin in np.linspace(0.0, 1.0, 101):
        assert rho_db_from_linear(lin, sigma, sigma) >= lin - 1e-12


def _exact_sum_std(model):
    a = model.mu / XI
    c = model.cov / XI ** 2
    m1 = np.exp(a + 0.5 * np.diag(c))
    cross = np.outer(m1, m1) * np.exp(c)
    mean = second = 0.0
    for pattern in itertools.product([0, 1], repeat=model.k):
        nu = np.array(pattern, dtype=bool)
        w = np.prod(np.where(nu, model.p, 1 - model.p))
        mean += w * m1[nu].sum()
        second += w * cross[np.ix_(nu, nu)].sum()
    return math.sqrt(second - mean * mean)


def _joint_draws(scene, n, seed):
    desired, model, rho = build_sum_model(scene)
    mean, cov = joint_covariance(desired, model, rho)
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, model.k + 1)) @ np.linalg.cholesky(cov).T + (mean - mean.max())
    nu = rng.random((n, model.k)) < model.p
    return x, nu


def test_linear_sum_correlation_cell_edge(uma_edge):
    desired, model, rho = build_sum_model(uma_edge)
    norm = model.shifted(-model.mu.max())
    analytic = rho_linear_sum(desired, norm, rho, _exact_sum_std(norm))
    x, nu = _joint_draws(uma_edge, 10 ** 7, 1)
    y0 = 10 ** (x[:, 0] / 10)
    s = np.sum(nu * 10 ** (x[:, 1:] / 10), axis=1)
    assert abs(analytic - np.corrcoef(y0, s)[0, 1]) < 0.01


def _end_to_end_gap(r, p):
    scene = hex_uma_scene(ue_polar=(r, 0.0), p_default=p)
    desired, model, rho = build_sum_model(scene)
    eq = match_equivalent_lognormal(model)
    pair = desired_interference_correlation(desired, model, rho, eq.params)
    x, nu = _joint_draws(scene, 2 * 10 ** 6, 5)
    s = np.sum(nu * 10 ** (x[:, 1:] / 10), axis=1)
    ok = s > 0
    return abs(pair.rho_db - np.corrcoef(x[ok, 0], 10 * np.log10(s[ok]))[0, 1])


_GAPS = {(25.0, 1.0): 0.049, (225.0, 0.5): 0.033, (225.0, 1.0): 0.060}


@pytest.mark.parametrize("r,p", [
    pytest.param(r, p, marks=pytest.mark.xfail(
        strict=True, reason=f"matched sigma_Y understates the sum spread; gap ~{_GAPS[(r, p)]}"))
    if (r, p) in _GAPS else (r, p)
    for r in (25.0, 225.0) for p in (0.2, 0.5, 1.0)
])
def test_end_to_end_db_correlation(r, p):
    assert _end_to_end_gap(r, p) < 0.02


def test_pipeline_pair_in_range(uma_center):
    desired, model, rho = build_sum_model(uma_center)
    eq = match_equivalent_lognormal(model)
    pair = desired_interference_correlation(desired, model, rho, eq.params)
    assert 0 < pair.rho_linear < pair.rho_db < 1
    assert not pair.clamped
    zero = desired_interference_correlation(LognormalParams(0.0, 0.0), model, rho, eq.params)
    assert zero == CorrelationPair(0.0, 0.0)
