"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 18


def mgf_tensor_sum(s, mu_over_xi, scaled_chol, p, nodes, weights):
    """Same contract as the compiled ``mgf_tensor_sum``.

    The grid is expanded level by level; once a frontier would exceed
    ``_CHUNK`` rows it is processed in row blocks so memory stays bounded.
    """
    mu_over_xi = np.asarray(mu_over_xi, dtype=float)
    chol = np.asarray(scaled_chol, dtype=float)
    p = np.asarray(p, dtype=float)
    a = np.asarray(nodes, dtype=float)
    w = np.asarray(weights, dtype=float)
    k_dim = mu_over_xi.shape[0]
    n = a.shape[0]

    def expand(level, wprod, part):
        if level == k_dim:
            return float(np.sum(wprod))
        rows = wprod.shape[0]
        if rows * n > _CHUNK and rows > 1:
            step = max(1, _CHUNK // n)
            return sum(expand(level, wprod[i:i + step], part[i:i + step])
                       for i in range(0, rows, step))
        nxt = part[:, None, :] + chol[:, level][None, None, :] * a[None, :, None]
        f = 1.0 - p[level] + p[level] * np.exp(-s * np.exp(nxt[:, :, level]))
        wn = wprod[:, None] * w[None, :] * f
        return expand(level + 1, wn.reshape(-1), nxt.reshape(-1, k_dim))

    return expand(0, np.ones(1), mu_over_xi[None, :].copy())
