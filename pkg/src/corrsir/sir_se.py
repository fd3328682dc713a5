"""SIR and spectral-efficiency distributions and their KPIs."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .fading import XI, LognormalParams
from .numerics import SQRT_PI, gauss_hermite, normal_cdf, normal_cdf_inv

_UNITS = {"nats": 1.0, "bits": 1.0 / math.log(2.0)}


class DegenerateDistributionError(ValueError):
    """A density was requested for a point-mass SIR."""


def _unit_scale(unit: str) -> float:
    try:
        return _UNITS[unit]
    except KeyError:
        raise ValueError(f"unit must be 'bits' or 'nats', got {unit!r}") from None


@dataclass(frozen=True)
class SirDistribution:
    """Normal law of the SIR in dB."""

    mu_db: float
    sigma_db: float

    def __post_init__(self):
        if not self.sigma_db >= 0:
            raise ValueError(f"sigma_db must be nonnegative, got {self.sigma_db}")


@dataclass(frozen=True)
class SeKpis:
    mean_se: float
    outage_se: float
    alpha: float
    unit: str = "bits"


def sir_distribution(desired: LognormalParams, equivalent: LognormalParams, rho_db: float) -> SirDistribution:
    if not -1.0 <= rho_db <= 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {rho_db}")
    s0, sx = desired.sigma_db, equivalent.sigma_db
    var = s0 * s0 + sx * sx - 2.0 * rho_db * s0 * sx
    # (s0 - sx)^2 <= var for |rho| <= 1, so only rounding can push it negative
    assert var >= -1e-9 * max(1.0, s0 * s0 + sx * sx)
    return SirDistribution(desired.mu_db - equivalent.mu_db, math.sqrt(max(var, 0.0)))


def _require_spread(dist: SirDistribution):
    if dist.sigma_db == 0.0:
        raise DegenerateDistributionError("SIR is a point mass; no density exists")


def sir_pdf(dist: SirDistribution, gamma):
    """Lognormal density of the linear SIR."""
    _require_spread(dist)
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("gamma must be positive")
    z = (XI * np.log(g) - dist.mu_db) / dist.sigma_db
    out = XI / (math.sqrt(2.0 * math.pi) * dist.sigma_db * g) * np.exp(-0.5 * z * z)
    return float(out) if out.ndim == 0 else out


def sir_db_pdf(dist: SirDistribution, gamma_db):
    """Normal density of the SIR in dB."""
    _require_spread(dist)
    z = (np.asarray(gamma_db, dtype=float) - dist.mu_db) / dist.sigma_db
    out = np.exp(-0.5 * z * z) / (math.sqrt(2.0 * math.pi) * dist.sigma_db)
    return float(out) if out.ndim == 0 else out


def sir_cdf(dist: SirDistribution, gamma_db):
    """P(Gamma_dB <= gamma_db)."""
    x = np.asarray(gamma_db, dtype=float)
    if dist.sigma_db == 0.0:
        out = (x >= dist.mu_db).astype(float)
    else:
        out = ndtr((x - dist.mu_db) / dist.sigma_db)
    return float(out) if out.ndim == 0 else out


def _sir_db_of_se(r, unit: str):
    # SIR (dB) that yields spectral efficiency r in the given unit
    r_nats = np.asarray(r, dtype=float) / _unit_scale(unit)
    return XI * np.log(np.expm1(r_nats))


def se_pdf(dist: SirDistribution, r, unit: str = "nats"):
    """Density of R = log(1 + Gamma), the change-of-variables image of the SIR law."""
    _require_spread(dist)
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("spectral efficiency must be positive")
    scale = _unit_scale(unit)
    r_nats = r_arr / scale
    em1 = np.expm1(r_nats)
    z = (XI * np.log(em1) - dist.mu_db) / dist.sigma_db
    # d r_nats / d r = 1/scale; e^r / (e^r - 1) = 1 + 1/em1
    out = XI * (1.0 + 1.0 / em1) / (math.sqrt(2.0 * math.pi) * dist.sigma_db) * np.exp(-0.5 * z * z) / scale
    return float(out) if out.ndim == 0 else out


def se_cdf(dist: SirDistribution, r, unit: str = "nats"):
    r_arr = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        x = np.where(r_arr > 0, _sir_db_of_se(np.maximum(r_arr, 1e-300), unit), -np.inf)
    return sir_cdf(dist, x)


def se_of_sir_db(sir_db, unit: str = "bits"):
    """log(1 + 10**(sir_db/10)) in the requested unit."""
    return np.logaddexp(0.0, np.asarray(sir_db, dtype=float) / XI) * _unit_scale(unit)


def mean_se_gauss_hermite(dist: SirDistribution, order: int = 64, unit: str = "bits") -> float:
    """E[log(1 + Gamma)] by a plain Gauss-Hermite rule of the given order."""
    rule = gauss_hermite(order)
    vals = se_of_sir_db(dist.mu_db + math.sqrt(2.0) * dist.sigma_db * rule.nodes, unit)
    return float(np.dot(rule.weights, vals) / SQRT_PI)


def mean_se_adaptive(dist: SirDistribution, unit: str = "bits") -> float:
    """E[log(1 + Gamma)] by adaptive quadrature split at the 0 dB knee."""
    if dist.sigma_db == 0.0:
        return float(se_of_sir_db(dist.mu_db, unit))
    mu_ln = dist.mu_db / XI
    s_ln = dist.sigma_db / XI

    def integrand(z):
        return np.logaddexp(0.0, mu_ln + s_ln * z) * math.exp(-0.5 * z * z)

    knee = -mu_ln / s_ln
    lo, hi = -40.0, 40.0
    cuts = sorted({lo, hi, min(max(knee, lo), hi)})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            total += integrate.quad(integrand, a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return total / math.sqrt(2.0 * math.pi) * _unit_scale(unit)


def se_kpis(dist: SirDistribution, alpha: float = 0.1, unit: str = "bits") -> SeKpis:
    """Mean and alpha-percentile outage spectral efficiency.

    The outage level is the exact image of the dB-normal quantile. The mean
    uses Gauss-Hermite at orders 32 and 64; when the two disagree (wide SIR
    spread, where the integrand's complex singularities slow GH down) the
    split adaptive quadrature is used instead.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    _unit_scale(unit)
    outage = float(se_of_sir_db(dist.mu_db + dist.sigma_db * normal_cdf_inv(alpha), unit))
    if dist.sigma_db == 0.0:
        return SeKpis(outage, outage, alpha, unit)
    coarse = mean_se_gauss_hermite(dist, 32, unit)
    fine = mean_se_gauss_hermite(dist, 64, unit)
    mean = fine if abs(fine - coarse) <= 1e-10 * max(1.0, abs(fine)) else mean_se_adaptive(dist, unit)
    return SeKpis(mean, outage, alpha, unit)


def normal_quantile(dist: SirDistribution, alpha: float) -> float:
    return dist.mu_db + dist.sigma_db * normal_cdf_inv(alpha)


__all__ = [
    "DegenerateDistributionError", "SirDistribution", "SeKpis", "sir_distribution",
    "sir_pdf", "sir_db_pdf", "sir_cdf", "se_pdf", "se_cdf", "se_of_sir_db", "se_kpis",
    "mean_se_gauss_hermite", "mean_se_adaptive", "normal_cdf", "normal_quantile",
]
