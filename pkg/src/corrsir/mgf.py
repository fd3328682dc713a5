"""MGF of a gated, correlated lognormal sum and two-point MGF matching.

The interference ``sum_k nu_k 10**(X_k/10)`` with ``x ~ N(mu, C)`` and
independent ``nu_k ~ Bernoulli(p_k)`` is approximated by one lognormal
whose MGF agrees with the sum's at two points ``s_1, s_2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .fading import XI, LognormalParams
from .numerics import MAX_QUAD_ORDER, SQRT_PI, ConvergenceError, QuadratureRule, gauss_hermite, solve_2d
from .scenario import CorrelatedSumModel


class CapacityError(RuntimeError):
    """The tensor grid has more terms than allowed."""


class DegenerateModelError(ValueError):
    """No interferer can ever be active."""


class MatchingError(RuntimeError):
    """The matching equations could not be solved."""

    def __init__(self, message: str, residuals: tuple[float, float] | None = None):
        self.residuals = residuals
        super().__init__(message if residuals is None else f"{message}; residuals={residuals}")


@dataclass(frozen=True)
class MatchingConfig:
    quad_order: int = 8
    s_points: tuple[float, float] = (1.0, 0.2)
    residual_tol: float = 1e-12
    max_terms: int = 10 ** 8
    mc_fallback_samples: int = 10 ** 6
    seed: int = 0

    def __post_init__(self):
        s1, s2 = self.s_points
        if not (s1 > 0 and s2 > 0) or s1 == s2:
            raise ValueError(f"s_points must be distinct and positive, got {self.s_points}")
        if self.quad_order < 2:
            raise ValueError("quad_order must be at least 2")
        if self.residual_tol <= 0 or self.max_terms < 1 or self.mc_fallback_samples < 1:
            raise ValueError("invalid matching tolerances or limits")


@dataclass(frozen=True)
class EquivalentLognormal:
    params: LognormalParams
    residuals: tuple[float, float]
    method: str  # "tensor-quadrature" | "mc-expectation" | "deterministic"
    quad_order: int = 0


def _canonical_order(model: CorrelatedSumModel) -> np.ndarray:
    # The Cholesky-based grid depends on interferer order; sorting by a
    # content key makes every evaluation permutation invariant.
    keys = [
        (model.mu[k], model.cov[k, k], model.p[k], tuple(np.sort(model.cov[k])))
        for k in range(model.k)
    ]
    return np.array(sorted(range(model.k), key=lambda k: keys[k]), dtype=int)


def _gate_product(s: float, x_db: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.prod(1.0 - p + p * np.exp(-s * np.exp(x_db / XI)), axis=-1)


def tensor_terms(model: CorrelatedSumModel, rule: QuadratureRule) -> int:
    return rule.order ** model.k


def mgf_sum(s: float, model: CorrelatedSumModel, rule: QuadratureRule,
            max_terms: int = 10 ** 8) -> float:
    """Gauss-Hermite tensor approximation of E[exp(-s * sum_k nu_k Y_k)]."""
    if not s >= 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    active = model.p > 0
    if not np.any(active):
        return 1.0
    if model.is_degenerate():
        return float(_gate_product(s, model.mu, model.p))
    terms = tensor_terms(model, rule)
    if terms > max_terms:
        raise CapacityError(
            f"tensor grid has {rule.order}^{model.k} = {terms} terms (> {max_terms}); "
            "use the Monte Carlo expectation instead"
        )
    order = _canonical_order(model)
    m = model.permuted(order)
    scaled = np.ascontiguousarray(math.sqrt(2.0) / XI * m.chol)
    return float(kernels.mgf_tensor_sum(
        float(s),
        np.ascontiguousarray(m.mu / XI),
        scaled,
        np.ascontiguousarray(m.p),
        np.ascontiguousarray(rule.nodes),
        np.ascontiguousarray(rule.weights / SQRT_PI),
    ))


def mgf_sum_mc(s: float | Sequence[float], model: CorrelatedSumModel, samples: int = 10 ** 6,
               seed: int = 0, return_stderr: bool = False):
    """Monte Carlo estimate of the gated-sum MGF.

    A sequence of ``s`` values is evaluated on the same Gaussian draws.
    """
    if samples < 10 ** 4:
        raise ValueError("at least 1e4 samples are required")
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    if not np.any(model.p > 0):
        out = np.ones_like(s_arr)
        err = np.zeros_like(s_arr)
    else:
        rng = np.random.default_rng(seed)
        total = np.zeros_like(s_arr)
        total2 = np.zeros_like(s_arr)
        chol = np.zeros_like(model.cov) if model.is_degenerate() else model.chol
        block = 1 << 16
        done = 0
        while done < samples:
            b = min(block, samples - done)
            x = model.mu + rng.standard_normal((b, model.k)) @ chol.T
            for i, si in enumerate(s_arr):
                v = _gate_product(si, x, model.p)
                total[i] += v.sum()
                total2[i] += np.dot(v, v)
            done += b
        out = total / samples
        var = np.maximum(total2 / samples - out ** 2, 0.0)
        err = np.sqrt(var / samples)
    if np.ndim(s) == 0:
        out, err = float(out[0]), float(err[0])
    return (out, err) if return_stderr else out


def mgf_single(s: float, params: LognormalParams, rule: QuadratureRule) -> float:
    """Gauss-Hermite approximation of E[exp(-s Y)] for one lognormal Y."""
    if params.sigma_db == 0.0:
        return math.exp(-s * 10.0 ** (params.mu_db / 10.0))
    with np.errstate(over="ignore"):
        e = (math.sqrt(2.0) * params.sigma_db * rule.nodes + params.mu_db) / XI
        return float(np.dot(rule.weights, np.exp(-s * np.exp(e))) / SQRT_PI)


def fenton_wilkinson_init(model: CorrelatedSumModel) -> LognormalParams:
    """Lognormal with the first two linear moments of the gated sum."""
    a = model.mu / XI
    var_ln = model.cov / XI ** 2
    b = np.diag(var_ln)
    m = np.exp(a + 0.5 * b)
    p = model.p
    mean = float(np.dot(p, m))
    if not mean > 0:
        raise DegenerateModelError("all interferers are inactive")
    # E[Y_j Y_k] = m_j m_k exp(C_jk / xi^2); diagonal gives E[Y_k^2]
    cross = np.outer(m, m) * np.exp(var_ln)
    gate = np.outer(p, p)
    np.fill_diagonal(gate, p)
    second = float(np.sum(gate * cross))
    var = max(second - mean * mean, 0.0)
    ratio = math.log1p(var / (mean * mean))
    return LognormalParams(XI * (math.log(mean) - 0.5 * ratio), XI * math.sqrt(ratio))


def match_equivalent_lognormal(model: CorrelatedSumModel,
                               cfg: MatchingConfig = MatchingConfig()) -> EquivalentLognormal:
    """Solve mgf_single(s_i; mu_X, sigma_X) = mgf_sum(s_i) for i = 1, 2.

    Powers are first normalised so the strongest interferer sits at 0 dB,
    which keeps the fixed s-points in the informative range of both MGFs;
    the result is shifted back afterwards. If no solution exists at the
    configured order the order is doubled (up to 64) and the one used is
    recorded in ``quad_order``.
    """
    if not np.any(model.p > 0):
        raise DegenerateModelError("all interferers have zero activity; SIR is undefined")
    offset = -float(np.max(model.mu))
    norm = model.shifted(offset)

    if norm.is_degenerate() and np.all((norm.p == 0) | (norm.p == 1)):
        total = float(np.sum(10.0 ** (norm.mu[norm.p == 1] / 10.0)))
        return EquivalentLognormal(LognormalParams(10.0 * math.log10(total) - offset, 0.0),
                                   (0.0, 0.0), "deterministic", cfg.quad_order)

    order = cfg.quad_order
    while True:
        try:
            eq = _match_at_order(norm, cfg, order)
            break
        except MatchingError:
            # sparse activity can put the targets outside what an order-N
            # lognormal MGF reaches; a finer rule on both sides fixes that
            if order >= MAX_QUAD_ORDER or tensor_terms(norm, gauss_hermite(min(2 * order, MAX_QUAD_ORDER))) > cfg.max_terms:
                raise
            order = min(2 * order, MAX_QUAD_ORDER)
    return EquivalentLognormal(eq.params.shifted(-offset), eq.residuals, eq.method, order)


def _match_at_order(norm: CorrelatedSumModel, cfg: MatchingConfig, order: int) -> EquivalentLognormal:
    rule = gauss_hermite(order)
    s1, s2 = cfg.s_points
    if norm.is_degenerate() or tensor_terms(norm, rule) <= cfg.max_terms:
        targets = (mgf_sum(s1, norm, rule, cfg.max_terms), mgf_sum(s2, norm, rule, cfg.max_terms))
        method = "tensor-quadrature"
    else:
        t = mgf_sum_mc((s1, s2), norm, cfg.mc_fallback_samples, cfg.seed)
        targets = (float(t[0]), float(t[1]))
        method = "mc-expectation"

    def residual(mu_x, log_sigma):
        params = LognormalParams(mu_x, math.exp(log_sigma))
        return (mgf_single(s1, params, rule) - targets[0],
                mgf_single(s2, params, rule) - targets[1])

    init = fenton_wilkinson_init(norm)
    sigma0 = max(init.sigma_db, 1e-3)
    starts = [(init.mu_db, math.log(sigma0))]
    for dmu in (0.0, -3.0, 3.0):
        for fs in (0.5, 2.0, 1.5):
            starts.append((init.mu_db + dmu, math.log(sigma0 * fs)))
    last: Exception | None = None
    for start in starts:
        try:
            mu_x, log_sigma = solve_2d(residual, start, cfg.residual_tol)
            break
        except ConvergenceError as exc:
            last = exc
    else:
        best = getattr(last, "best", starts[0])
        raise MatchingError("MGF matching did not converge", residual(*best))
    return EquivalentLognormal(LognormalParams(mu_x, math.exp(log_sigma)), residual(mu_x, log_sigma), method, order)
