"""Lognormal shadowing, Gamma (Nakagami-m power) fading and the composite
Gamma x lognormal -> lognormal reduction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import digamma, trigamma

#: dB <-> natural-log conversion, 10 / ln 10
XI = 10.0 / math.log(10.0)

#: shape value meaning "no small-scale fading"
NO_FADING = math.inf


@dataclass(frozen=True)
class LognormalParams:
    """A lognormal power described in dB: 10 log10(Y) ~ N(mu_db, sigma_db**2)."""

    mu_db: float
    sigma_db: float

    def __post_init__(self):
        if not self.sigma_db >= 0.0:
            raise ValueError(f"sigma_db must be nonnegative, got {self.sigma_db}")
        if not math.isfinite(self.mu_db) or not math.isfinite(self.sigma_db):
            raise ValueError("lognormal parameters must be finite")

    def shifted(self, offset_db: float) -> "LognormalParams":
        return LognormalParams(self.mu_db + offset_db, self.sigma_db)


@dataclass(frozen=True)
class GammaFading:
    """Unit-mean Gamma power fading with shape ``m`` (scale ``1/m``).

    ``m == inf`` is the no-fading sentinel.
    """

    m: float

    def __post_init__(self):
        if not self.m >= 0.5:
            raise ValueError(f"Gamma shape m must be >= 0.5, got {self.m}")

    @property
    def log_mean_db(self) -> float:
        """E[10 log10 G]."""
        if math.isinf(self.m):
            return 0.0
        return XI * (digamma(self.m) - math.log(self.m))

    @property
    def log_var_db(self) -> float:
        """Var[10 log10 G]."""
        if math.isinf(self.m):
            return 0.0
        return XI * XI * trigamma(self.m)


def composite_to_lognormal(shadow: LognormalParams, fading: GammaFading) -> LognormalParams:
    """Lognormal with the same log-domain mean and variance as G * X.

    Matching E[ln] and Var[ln] of the product is exact in the log domain
    because the two factors are independent, so the dB mean shifts by
    ``xi * (psi(m) - ln m)`` and the dB variance grows by ``xi**2 psi'(m)``.
    """
    return LognormalParams(
        shadow.mu_db + fading.log_mean_db,
        math.sqrt(shadow.sigma_db ** 2 + fading.log_var_db),
    )


def lognormal_linear_moments(p: LognormalParams) -> tuple[float, float]:
    """Linear-domain (mean, std) of Y = 10**(X/10), X ~ N(mu_db, sigma_db**2)."""
    a = p.mu_db / XI
    t = p.sigma_db / XI
    b = t * t
    mean = math.exp(a + 0.5 * b)
    # sqrt(expm1(b)) written as t * sqrt(expm1(b) / b) so tiny sigma does not underflow
    ratio = math.expm1(b) / b if b > 1e-8 else 1.0 + 0.5 * b
    return mean, mean * t * math.sqrt(ratio)
