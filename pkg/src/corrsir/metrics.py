"""Goodness of fit between simulated samples and an analytical law."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .montecarlo import EmpiricalCdf

Q_FLOOR = 1e-30


class FitValidationError(ValueError):
    pass


@dataclass(frozen=True)
class FitReport:
    kld: float
    ksd: float
    bins: int
    support: tuple[float, float]
    q_floored: bool = False

    def __post_init__(self):
        if self.kld < 0 or not 0.0 <= self.ksd <= 1.0:
            raise ValueError(f"invalid fit values kld={self.kld}, ksd={self.ksd}")

    def to_dict(self) -> dict:
        return {"kld": self.kld, "ksd": self.ksd, "bins": self.bins,
                "support": list(self.support), "q_floored": self.q_floored,
                "kld_direction": "simulated||analytical", "kld_unit": "nats"}


def ksd(emp: EmpiricalCdf, analytic_cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """Exact one-sample Kolmogorov-Smirnov distance sup |F_n - F|.

    Both right values and left limits are compared at every distinct sample
    point, so step-shaped analytic CDFs are handled exactly.
    """
    if emp.n < 100:
        raise FitValidationError("KS distance needs at least 100 samples")
    lo, hi = emp.values[0], emp.values[-1]
    if hi > lo:
        grid = np.linspace(lo, hi, 1000)
        g = np.asarray(analytic_cdf(grid), dtype=float)
        if np.any(np.diff(g) < -1e-12):
            raise FitValidationError("analytic CDF is not monotone on the sample range")
    u, first = np.unique(emp.values, return_index=True)
    n = emp.n
    right = np.append(first[1:], n) / n
    left = first / n
    f_right = np.asarray(analytic_cdf(u), dtype=float)
    f_left = np.asarray(analytic_cdf(np.nextafter(u, -np.inf)), dtype=float)
    d = max(np.max(np.abs(right - f_right)), np.max(np.abs(left - f_left)))
    return float(min(max(d, 0.0), 1.0))


def default_support(emp: EmpiricalCdf) -> tuple[float, float]:
    lo, hi = emp.quantile([0.0005, 0.9995])
    return float(lo), float(hi)


def kld(emp: EmpiricalCdf, analytic_pdf: Callable[[np.ndarray], np.ndarray], bins: int = 200,
        support: tuple[float, float] | None = None, return_flag: bool = False):
    """Histogram Kullback-Leibler divergence D(simulated || analytical) in nats.

    Cell probabilities of the analytical law use a 4-point midpoint rule and
    are renormalised over the support. A cell the analytical law gives zero
    mass but the samples populate is floored at ``Q_FLOOR``.
    """
    if bins < 10:
        raise ValueError("bins must be at least 10")
    lo, hi = support if support is not None else default_support(emp)
    if not hi > lo:
        raise ValueError(f"degenerate support ({lo}, {hi})")
    inside = np.count_nonzero((emp.values >= lo) & (emp.values <= hi))
    if inside < 0.999 * emp.n - 1e-9:
        raise ValueError(f"support ({lo}, {hi}) covers only {inside / emp.n:.4%} of the samples")
    counts, edges = np.histogram(emp.values, bins=bins, range=(lo, hi))
    p = counts / counts.sum()
    width = (hi - lo) / bins
    sub = 4
    pts = edges[:-1, None] + (np.arange(sub) + 0.5)[None, :] * (width / sub)
    q = np.asarray(analytic_pdf(pts.ravel()), dtype=float).reshape(bins, sub).mean(axis=1) * width
    q = q / q.sum() if q.sum() > 0 else q
    mask = p > 0
    floored = bool(np.any(q[mask] <= 0))
    q = np.where(q > 0, q, Q_FLOOR)
    value = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    value = max(value, 0.0)
    return (value, floored) if return_flag else value


def fit_report(emp: EmpiricalCdf, analytic_cdf, analytic_pdf, bins: int = 200,
               support: tuple[float, float] | None = None) -> FitReport:
    support = support if support is not None else default_support(emp)
    k, floored = kld(emp, analytic_pdf, bins, support, return_flag=True)
    return FitReport(k, ksd(emp, analytic_cdf), bins, (float(support[0]), float(support[1])), floored)
