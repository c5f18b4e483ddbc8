# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LDL' numeric kernels.

Mirrors the pure-Python reference in ``fallback`` line for line (same
operation order, so factors agree bitwise); only the loop execution moves
to C. Buffers are caller-allocated and reused across factorizations.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def ldl_factor(Py_ssize_t n,
               long long[::1] Ap, long long[::1] Ai, double[::1] Ax,
               long long[::1] Lp, long long[::1] parent,
               long long[::1] Li, double[::1] Lx,
               double[::1] D, double[::1] Dinv,
               long long[::1] signs, double eps,
               double[::1] y_vals, long long[::1] y_markers,
               long long[::1] y_idx, long long[::1] elim,
               long long[::1] l_next):
    """See fallback.ldl_factor; returns (num_pos, num_neg, num_perturbed)."""
    cdef Py_ssize_t k, p, i, tmp, nnz_y, nnz_e
    cdef long long b, nxt, c
    cdef double yv, d
    cdef long long npos = 0, nneg = 0, nreg = 0

    for i in range(n):
        y_vals[i] = 0.0
        y_markers[i] = 0
        D[i] = 0.0
        l_next[i] = Lp[i]
    for k in range(n):
        nnz_y = 0
        for p in range(Ap[k], Ap[k + 1]):
            b = Ai[p]
            if b == k:
                D[k] = Ax[p]
                continue
            y_vals[b] = Ax[p]
            nxt = b
            if y_markers[nxt] == 0:
                y_markers[nxt] = 1
                elim[0] = nxt
                nnz_e = 1
                nxt = parent[nxt]
                while nxt != -1 and nxt < k:
                    if y_markers[nxt] == 1:
                        break
                    y_markers[nxt] = 1
                    elim[nnz_e] = nxt
                    nnz_e += 1
                    nxt = parent[nxt]
                while nnz_e > 0:
                    nnz_e -= 1
                    y_idx[nnz_y] = elim[nnz_e]
                    nnz_y += 1
        while nnz_y > 0:
            nnz_y -= 1
            c = y_idx[nnz_y]
            tmp = l_next[c]
            yv = y_vals[c]
            for p in range(Lp[c], tmp):
                y_vals[Li[p]] -= Lx[p] * yv
            Li[tmp] = k
            Lx[tmp] = yv * Dinv[c]
            D[k] -= yv * Lx[tmp]
            l_next[c] = tmp + 1
            y_vals[c] = 0.0
            y_markers[c] = 0
        d = D[k]
        if (d if d >= 0.0 else -d) < eps:
            D[k] = eps if signs[k] > 0 else -eps
            nreg += 1
        if D[k] > 0.0:
            npos += 1
        else:
            nneg += 1
        Dinv[k] = 1.0 / D[k]
    return npos, nneg, nreg


def ldl_solve(Py_ssize_t n,
              long long[::1] Lp, long long[::1] Li, double[::1] Lx,
              double[::1] Dinv, double[::1] x):
    """In-place solve of L D L' x = b given b in x."""
    cdef Py_ssize_t j, p
    cdef double xj, acc
    for j in range(n):
        xj = x[j]
        if xj != 0.0:
            for p in range(Lp[j], Lp[j + 1]):
                x[Li[p]] -= Lx[p] * xj
    for j in range(n):
        x[j] *= Dinv[j]
    for j in range(n - 1, -1, -1):
        acc = 0.0
        for p in range(Lp[j], Lp[j + 1]):
            acc += Lx[p] * x[Li[p]]
        x[j] -= acc
