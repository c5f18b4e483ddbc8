"""Symbolic analysis for the quasidefinite LDL' factorization.

Works on the upper-triangular CSC pattern of the (already permuted) matrix.
The numeric kernels (see ``fallback`` and the compiled ``core``) consume the
elimination tree and column counts produced here; the analysis runs once per
sparsity pattern and is reused across factorizations.
"""

from __future__ import annotations

import heapq

import numpy as np


def etree_and_counts(n, Ap, Ai):
    """Elimination tree and per-column L counts of an upper CSC pattern.

    Returns (parent, Lnz, Lp) with Lp the exclusive cumulative sum of Lnz.
    Raises ValueError if an entry lies strictly below the diagonal.
    """
    parent = np.full(n, -1, dtype=np.int64)
    flag = np.full(n, -1, dtype=np.int64)
    Lnz = np.zeros(n, dtype=np.int64)
    for j in range(n):
        flag[j] = j
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i > j:
                raise ValueError("pattern must be upper triangular")
            while flag[i] != j:
                if parent[i] == -1:
                    parent[i] = j
                Lnz[i] += 1
                flag[i] = j
                i = parent[i]
    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(Lnz, out=Lp[1:])
    return parent, Lnz, Lp


def min_degree_order(n, Ap, Ai):
    """Exact minimum-degree elimination order for a symmetric pattern.

    The pattern is given by its upper triangle; fill is simulated by
    cliquing the live neighbors of each eliminated vertex. Ties break on
    the lowest vertex index, so the order is deterministic. Returns perm
    with perm[k] = original index eliminated at step k.
    """
    adj = [set() for _ in range(n)]
    for j in range(n):
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i != j:
                adj[i].add(j)
                adj[j].add(i)
    heap = [(len(adj[v]), v) for v in range(n)]
    heapq.heapify(heap)
    alive = np.ones(n, dtype=bool)
    perm = np.empty(n, dtype=np.int64)
    k = 0
    while heap:
        d, v = heapq.heappop(heap)
        if not alive[v] or d != len(adj[v]):
            continue  # stale heap entry
        perm[k] = v
        k += 1
        alive[v] = False
        nb = adj[v]
        adj[v] = set()
        for u in nb:
            adj[u].discard(v)
        nbl = list(nb)
        for u in nbl:
            adj[u].update(nb)
            adj[u].discard(u)
            heapq.heappush(heap, (len(adj[u]), u))
    return perm


def permute_upper(n, Ap, Ai, Ax, perm):
    """Symmetric permutation B = A[perm, perm] of an upper CSC matrix.

    Returns (Bp, Bi, Bx, posmap) where posmap sends each position in the
    input data array to its slot in B, so later numeric refreshes are a
    single scatter Bx[posmap] = Ax_new.
    """
    iperm = np.empty(n, dtype=np.int64)
    iperm[perm] = np.arange(n, dtype=np.int64)
    nnz = Ap[n]
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    src = np.arange(nnz, dtype=np.int64)
    for j in range(n):
        lo, hi = Ap[j], Ap[j + 1]
        r = iperm[Ai[lo:hi]]
        c = np.full(hi - lo, iperm[j], dtype=np.int64)
        swap = r > c
        rows[lo:hi] = np.where(swap, c, r)
        cols[lo:hi] = np.where(swap, r, c)
    order = np.lexsort((rows, cols))
    Bp = np.zeros(n + 1, dtype=np.int64)
    np.add.at(Bp[1:], cols[order], 1)
    np.cumsum(Bp, out=Bp)
    Bi = rows[order].copy()
    Bx = Ax[src[order]].copy()
    posmap = np.empty(nnz, dtype=np.int64)
    posmap[src[order]] = np.arange(nnz, dtype=np.int64)
    return Bp, Bi, Bx, posmap
