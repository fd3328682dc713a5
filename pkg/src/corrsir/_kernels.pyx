# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tensor-grid kernel for the Gauss-Hermite MGF of a gated
correlated lognormal sum."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.stdlib cimport malloc, free

cnp.import_array()


cdef double _level(int l, int K, int N, double s, double* part,
                   const double* L, const double* p, const double* a,
                   const double* w, const double* growth) noexcept nogil:
    # growth[l * N + n] = exp(L[l, l] * a[n]), so each term needs one exp
    cdef double total = 0.0
    cdef double* cur = part + l * K
    cdef double* nxt = part + (l + 1) * K
    cdef const double* g = growth + l * N
    cdef double base = s * exp(cur[l])
    cdef double q = 1.0 - p[l]
    cdef int n, k
    cdef double an, f
    if l == K - 1:
        for n in range(N):
            total += w[n] * (q + p[l] * exp(-base * g[n]))
        return total
    for n in range(N):
        f = q + p[l] * exp(-base * g[n])
        if f == 0.0:
            continue
        an = a[n]
        for k in range(l + 1, K):
            nxt[k] = cur[k] + L[k * K + l] * an
        total += w[n] * f * _level(l + 1, K, N, s, part, L, p, a, w, growth)
    return total


def mgf_tensor_sum(double s, double[::1] mu_over_xi, double[:, ::1] scaled_chol,
                   double[::1] p, double[::1] nodes, double[::1] weights):
    """Sum over the N**K grid of prod_k (1 - p_k + p_k exp(-s exp(e_k))).

    ``e_k = mu_over_xi[k] + sum_l scaled_chol[k, l] * nodes[n_l]`` and
    ``weights`` are already divided by sqrt(pi).
    """
    cdef int K = mu_over_xi.shape[0]
    cdef int N = nodes.shape[0]
    cdef double* part = <double*> malloc((K + 1) * K * sizeof(double))
    cdef double* growth = <double*> malloc(K * N * sizeof(double))
    cdef int k, n
    cdef double out
    if part == NULL or growth == NULL:
        free(part)
        free(growth)
        raise MemoryError()
    try:
        for k in range(K):
            part[k] = mu_over_xi[k]
            for n in range(N):
                growth[k * N + n] = exp(scaled_chol[k, k] * nodes[n])
        with nogil:
            out = _level(0, K, N, s, part, &scaled_chol[0, 0], &p[0], &nodes[0], &weights[0], growth)
    finally:
        free(part)
        free(growth)
    return out
