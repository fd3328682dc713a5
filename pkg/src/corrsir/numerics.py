"""Numerical building blocks: Gauss-Hermite rules, polygamma functions,
Cholesky factorization, the inverse normal CDF and a small 2-D Newton solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

SQRT_PI = math.sqrt(math.pi)
EULER_GAMMA = 0.57721566490153286061

MAX_QUAD_ORDER = 64


class FactorizationError(ValueError):
    """Raised when a matrix is not positive definite.

    ``minor`` is the 1-based order of the first leading minor that failed.
    """

    def __init__(self, minor: int, pivot: float):
        self.minor = minor
        self.pivot = pivot
        super().__init__(
            f"matrix is not positive definite: leading minor {minor} "
            f"has non-positive pivot {pivot:.3e}"
        )


class ConvergenceError(RuntimeError):
    """Raised by :func:`solve_2d` when Newton iteration stalls."""

    def __init__(self, message: str, best: tuple[float, float], residual: float):
        self.best = best
        self.residual = residual
        super().__init__(f"{message} (best={best}, residual={residual:.3e})")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for integrals against ``exp(-x**2)``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def expect_normal(self, func: Callable[[np.ndarray], np.ndarray],
                      mean: float, std: float) -> float:
        """E[func(X)] for X ~ N(mean, std**2)."""
        x = mean + math.sqrt(2.0) * std * self.nodes
        return float(np.dot(self.weights, func(x)) / SQRT_PI)


def _hermite_orthonormal(x: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Orthonormal Hermite polynomials w.r.t. exp(-x^2): returns
    # (phi_{n-1}, phi_n, sum_{k<n} phi_k^2) evaluated at x.
    prev = np.zeros_like(x)
    cur = np.full_like(x, 1.0 / math.sqrt(SQRT_PI))
    acc = cur * cur
    for k in range(1, n + 1):
        nxt = x * math.sqrt(2.0 / k) * cur - math.sqrt((k - 1) / k) * prev
        prev, cur = cur, nxt
        if k < n:
            acc = acc + cur * cur
    return prev, cur, acc


def gauss_hermite(order: int) -> QuadratureRule:
    """Gauss-Hermite nodes and weights of the given order.

    Nodes come from the eigenvalues of the symmetric tridiagonal Jacobi
    matrix (Golub-Welsch), polished by Newton steps on the orthonormal
    Hermite polynomial. Weights use the Christoffel formula
    ``w_i = 1 / sum_k phi_k(x_i)**2`` which stays positive and accurate for
    the tiny outer weights where eigenvector components lose precision.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"quadrature order must be an integer in [1, {MAX_QUAD_ORDER}], got {order!r}")
    n = int(order)
    if n == 1:
        return QuadratureRule(1, np.array([0.0]), np.array([SQRT_PI]))

    off = np.sqrt(np.arange(1, n) / 2.0)
    jacobi = np.diag(off, 1) + np.diag(off, -1)
    x = np.linalg.eigvalsh(jacobi)

    for _ in range(3):
        prev, cur, _acc = _hermite_orthonormal(x, n)
        deriv = math.sqrt(2.0 * n) * prev
        x = x - cur / deriv
    _, _, acc = _hermite_orthonormal(x, n)
    w = 1.0 / acc

    # enforce exact symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    if n % 2 == 1:
        x[n // 2] = 0.0
    w *= SQRT_PI / w.sum()
    return QuadratureRule(n, x, w)


# Bernoulli numbers B_2k for the asymptotic series, k = 1..7
_B2K = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730, 7.0 / 6)
_SHIFT_TO = 10.0


def digamma(x: float) -> float:
    """psi(x) for x > 0 via upward recurrence and the asymptotic series."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"digamma requires a finite x > 0, got {x}")
    acc = 0.0
    while x < _SHIFT_TO:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    p = inv2
    for k, b in enumerate(_B2K[:6], start=1):
        series += b / (2 * k) * p
        p *= inv2
    return acc + math.log(x) - 0.5 / x - series


def trigamma(x: float) -> float:
    """psi'(x) for x > 0 via upward recurrence and the asymptotic series."""
    x = float(x)
    if not x > 0.0 or math.isinf(x):
        raise ValueError(f"trigamma requires a finite x > 0, got {x}")
    acc = 0.0
    while x < _SHIFT_TO:
        acc += 1.0 / (x * x)
        x += 1.0
    inv = 1.0 / x
    inv2 = inv * inv
    series = 0.0
    p = inv2 * inv
    for b in _B2K[:6]:
        series += b * p
        p *= inv2
    return acc + inv + 0.5 * inv2 + series


def cholesky(cov: np.ndarray | Sequence[Sequence[float]]) -> np.ndarray:
    """Lower-triangular L with L @ L.T == cov.

    Raises :class:`FactorizationError` naming the failing leading minor.
    """
    a = np.array(cov, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    k = a.shape[0]
    low = np.zeros_like(a)
    for j in range(k):
        pivot = a[j, j] - np.dot(low[j, :j], low[j, :j])
        if not pivot > 0.0:
            raise FactorizationError(j + 1, float(pivot))
        low[j, j] = math.sqrt(pivot)
        for i in range(j + 1, k):
            low[i, j] = (a[i, j] - np.dot(low[i, :j], low[j, :j])) / low[j, j]
    return low


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


# Acklam's rational approximation coefficients
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def normal_cdf_inv(alpha: float) -> float:
    """Standard normal quantile.

    Rational approximation (relative error ~1e-9) followed by one Halley
    refinement against the erfc-based CDF.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if alpha < _P_LOW:
        q = math.sqrt(-2.0 * math.log(alpha))
        x = ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif alpha <= 1.0 - _P_LOW:
        q = alpha - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log1p(-alpha))
        x = -((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if alpha > 0.5:
        # 1 - alpha is exact here; working with the upper tail keeps precision
        e = (1.0 - alpha) - 0.5 * math.erfc(x / math.sqrt(2.0))
    else:
        e = normal_cdf(x) - alpha
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def solve_2d(
    func: Callable[[float, float], tuple[float, float]],
    initial: tuple[float, float],
    tol: float = 1e-12,
    max_iter: int = 100,
) -> tuple[float, float]:
    """Damped Newton iteration for a 2x2 nonlinear system.

    The Jacobian is built from forward differences with step
    ``1e-7 * max(1, |param|)``. A step that increases the residual is
    halved until it does not (at most 30 halvings); trial points where
    ``func`` overflows or leaves its domain are treated the same way.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u, v = float(initial[0]), float(initial[1])

    def norm(r):
        return max(abs(r[0]), abs(r[1]))

    r = func(u, v)
    res = norm(r)
    if not math.isfinite(res):
        raise ConvergenceError("residual not finite at initial point", (u, v), res)
    for _ in range(max_iter):
        if res <= tol:
            return u, v
        hu = 1e-7 * max(1.0, abs(u))
        hv = 1e-7 * max(1.0, abs(v))
        ru = func(u + hu, v)
        rv = func(u, v + hv)
        j11, j21 = (ru[0] - r[0]) / hu, (ru[1] - r[1]) / hu
        j12, j22 = (rv[0] - r[0]) / hv, (rv[1] - r[1]) / hv
        det = j11 * j22 - j12 * j21
        jscale = max(abs(j11), abs(j12), abs(j21), abs(j22))
        if jscale == 0.0 or abs(det) <= 1e-14 * jscale * jscale:
            raise ConvergenceError("singular Jacobian", (u, v), res)
        du = (j22 * r[0] - j12 * r[1]) / det
        dv = (-j21 * r[0] + j11 * r[1]) / det
        step = 1.0
        for _ in range(31):
            un, vn = u - step * du, v - step * dv
            try:
                rn = func(un, vn)
                resn = norm(rn)
            except (OverflowError, ValueError):
                # trial point outside the function's domain counts as a worse residual
                rn, resn = r, math.inf
            if math.isfinite(resn) and resn < res:
                break
            step *= 0.5
        else:
            raise ConvergenceError("line search failed to reduce residual", (u, v), res)
        u, v, r, res = un, vn, rn, resn
    if res <= tol:
        return u, v
    raise ConvergenceError(f"no convergence in {max_iter} iterations", (u, v), res)
