"""Correlation between the desired power and the aggregate interference."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fading import XI, LognormalParams, lognormal_linear_moments
from .scenario import CorrelatedSumModel


@dataclass(frozen=True)
class CorrelationPair:
    rho_linear: float
    rho_db: float
    clamped: bool = False

    def __post_init__(self):
        for v in (self.rho_linear, self.rho_db):
            if not -1.0 <= v <= 1.0:
                raise ValueError(f"correlation {v} outside [-1, 1]")


def rho_linear_from_db(rho_db: float, sigma0_db: float, sigmak_db: float) -> float:
    """Linear-domain correlation of two jointly lognormal powers."""
    b0 = (sigma0_db / XI) ** 2
    bk = (sigmak_db / XI) ** 2
    if b0 == 0.0 or bk == 0.0:
        return 0.0
    return math.expm1(rho_db * sigma0_db * sigmak_db / XI ** 2) / math.sqrt(math.expm1(b0) * math.expm1(bk))


def rho_linear_sum(desired: LognormalParams, model: CorrelatedSumModel,
                   rho_pairs_db: np.ndarray, sigma_y: float) -> float:
    """Correlation between Y0 and the gated sum, sum_k p_k rho_k sigma_Yk / sigma_Y."""
    if not sigma_y > 0:
        raise ValueError(f"sigma_Y must be positive, got {sigma_y}")
    total = 0.0
    for k in range(model.k):
        link = LognormalParams(float(model.mu[k]), float(model.sigma[k]))
        _, std_k = lognormal_linear_moments(link)
        rho_k = rho_linear_from_db(float(rho_pairs_db[k]), desired.sigma_db, link.sigma_db)
        total += model.p[k] * rho_k * std_k
    return total / sigma_y


def rho_db_from_linear(rho_linear: float, sigma0_db: float, sigmax_db: float,
                       with_flag: bool = False, strict: bool = True):
    """dB-domain correlation of two lognormals given their linear correlation.

    Values that land outside [-1, 1] by less than 1e-9 are clamped (any
    distance when ``strict`` is false); pass ``with_flag=True`` to also
    receive whether that happened.
    """
    if not (sigma0_db > 0 and sigmax_db > 0):
        raise ValueError("both dB deviations must be positive")
    arg = rho_linear * math.sqrt(math.expm1((sigma0_db / XI) ** 2)) \
        * math.sqrt(math.expm1((sigmax_db / XI) ** 2)) + 1.0
    if not arg > 0:
        if not strict:
            return (-1.0, True) if with_flag else -1.0
        raise ValueError(f"linear correlation {rho_linear} is below the attainable lower bound")
    rho = XI ** 2 * math.log(arg) / (sigma0_db * sigmax_db)
    clamped = False
    if abs(rho) > 1.0:
        if strict and abs(rho) - 1.0 > 1e-9:
            raise ValueError(f"linear correlation {rho_linear} maps to dB correlation {rho} outside [-1, 1]")
        rho = math.copysign(1.0, rho)
        clamped = True
    return (rho, clamped) if with_flag else rho


def desired_interference_correlation(desired: LognormalParams, model: CorrelatedSumModel,
                                     rho_pairs_db: np.ndarray,
                                     equivalent: LognormalParams) -> CorrelationPair:
    """Both correlation coefficients for the matched interference lognormal."""
    if desired.sigma_db == 0.0 or equivalent.sigma_db == 0.0:
        return CorrelationPair(0.0, 0.0)
    # common-scale offset keeps exp() in range; the coefficients are scale free
    offset = -float(np.max(model.mu))
    _, sigma_y = lognormal_linear_moments(equivalent.shifted(offset))
    rho_lin = rho_linear_sum(desired, model.shifted(offset), rho_pairs_db, sigma_y)
    # the approximate formula can leave the attainable range by a hair
    rho_lin = min(max(rho_lin, -1.0), 1.0)
    rho_db, clamped = rho_db_from_linear(rho_lin, desired.sigma_db, equivalent.sigma_db,
                                          with_flag=True, strict=False)
    return CorrelationPair(rho_lin, rho_db, clamped)
