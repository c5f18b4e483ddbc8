"""Pure-Python LDL' numeric kernels (reference implementation).

Same loop structure and operation order as the compiled core, so both
backends produce bit-identical factors. Row k of L is computed by an
up-looking sweep over the elimination-tree reach of column k's pattern.
All outputs and scratch buffers are caller-allocated.
"""

from __future__ import annotations


def ldl_factor(n, Ap, Ai, Ax, Lp, parent, Li, Lx, D, Dinv,
               signs, eps, y_vals, y_markers, y_idx, elim, l_next):
    """Factor an upper-CSC quasidefinite matrix as L D L'.

    Pivots smaller in magnitude than eps are replaced by eps carrying the
    sign expected from ``signs`` (sign-preserving dynamic regularization).
    Returns (num_pos, num_neg, num_perturbed) where the counts give the
    inertia of the regularized D.
    """
    npos = nneg = nreg = 0
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


def ldl_solve(n, Lp, Li, Lx, Dinv, x):
    """In-place solve of L D L' x = b given b in x."""
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
