"""Regularized quasidefinite KKT system.

Assembles K = [[P + eps_s I, A'], [A, -(H + eps_s I)]] in upper-triangle CSC
form, factors it as LDL' with sign-preserving dynamic pivot regularization,
and solves the paired right-hand sides of the reduced step equations with
iterative refinement against the unregularized matrix. Second-order cone
blocks of dimension > 4 enter as a diagonal plus two appended rank-1
columns with +1/-1 pivots, which preserves quasidefiniteness and keeps the
factor sparse.

The pattern is fixed after construction: each iteration only refreshes the
scaling-block values and refactors in place ("allocation-free" — observable
through the allocation_count hook, which counts workspace acquisitions).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ._ldl import BACKEND, etree_and_counts, ldl_factor, ldl_solve, min_degree_order, permute_upper
from .model import quad_form, sym_matvec


class KKTError(ArithmeticError):
    pass


class PatternMismatch(KKTError):
    pass


class FactorizationFailure(KKTError):
    """Signature breakdown: D does not carry the quasidefinite inertia."""


class RefinementStalled(KKTError):
    """Refinement could not reach even the coarse residual backstop."""


class DegenerateDenominator(KKTError):
    """The tau-recovery denominator lost positivity."""


class KKTSystem:
    """One instance per solver; owns the pattern, factors, and workspaces."""

    def __init__(self, P, A, cone, settings):
        self.n = P.shape[0]
        self.m = A.shape[0]
        self.cone = cone
        self.settings = settings
        self.backend = BACKEND
        self._alloc_count = 0
        self._buffers = {}
        self._cached_const = None
        self.num_factorizations = 0
        self.last_refine_rounds = 0
        self.num_dyn_regularized = 0

        n, m = self.n, self.m
        # expansion bookkeeping: two extra rows per wide SOC block
        self._expansions = []
        k = 0
        for blk, sl in cone:
            if blk.kkt_block()[0] == "soclr":
                self._expansions.append((blk, sl, n + m + 2 * k))
                k += 1
        self.k_expand = k
        self.order = n + m + 2 * k

        rows, cols, base, raw = [], [], [], []

        def put(r, c, v, vraw=None):
            rows.append(r)
            cols.append(c)
            base.append(v)
            raw.append(v if vraw is None else vraw)
            return len(rows) - 1

        eps = float(settings.static_reg)
        self.eps_static = eps

        # (1,1) block: P upper triangle, eps_s added on the diagonal
        Pd = P.tocoo()
        seen_diag = np.zeros(n, dtype=bool)
        for r, c, v in zip(Pd.row, Pd.col, Pd.data):
            if r > c:
                raise PatternMismatch("P must be upper triangular")
            if r == c:
                seen_diag[r] = True
                put(r, c, v + eps, v)
            else:
                put(r, c, v)
        for i in np.flatnonzero(~seen_diag):
            put(i, i, eps, 0.0)

        # (1,2) block: A' (upper triangle since column index n+row > col)
        Ac = A.tocoo()
        for r, c, v in zip(Ac.row, Ac.col, Ac.data):
            put(c, n + r, v)

        # (2,2) block: -(H + eps_s I), one refresh descriptor per cone block
        self._refresh = []
        for blk, sl in cone:
            desc = blk.kkt_block()
            lo = n + sl.start
            if desc[0] == "empty":
                for i in range(blk.rows):
                    put(lo + i, lo + i, -eps, 0.0)
            elif desc[0] == "diag":
                pos = np.array(
                    [put(lo + i, lo + i, 0.0) for i in range(blk.rows)]
                )
                self._refresh.append(("diag", blk, pos))
            elif desc[0] == "dense":
                t = blk.rows
                iu, ju = np.triu_indices(t)
                pos = np.array([put(lo + i, lo + j, 0.0) for i, j in zip(iu, ju)])
                self._refresh.append(("dense", blk, pos, iu, ju, iu == ju))
            else:  # soclr
                ex = next(e for b, s, e in self._expansions if b is blk)
                posd = np.array(
                    [put(lo + i, lo + i, 0.0) for i in range(blk.rows)]
                )
                posu = np.array(
                    [put(lo + i, ex, 0.0) for i in range(blk.rows)]
                )
                posv = np.array(
                    [put(lo + i, ex + 1, 0.0) for i in range(blk.rows)]
                )
                put(ex, ex, 1.0 + eps, 1.0)
                put(ex + 1, ex + 1, -1.0 - eps, -1.0)
                self._refresh.append(("soclr", blk, posd, posu, posv))

        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        self._vals = np.asarray(base, dtype=np.float64)
        self._vals_raw = np.asarray(raw, dtype=np.float64)

        # assemble once into upper CSC, then permute with minimum degree
        order0 = np.lexsort((rows, cols))
        Ap = np.zeros(self.order + 1, dtype=np.int64)
        np.add.at(Ap[1:], cols[order0], 1)
        np.cumsum(Ap, out=Ap)
        Ai = rows[order0]
        to_csc0 = np.empty(len(order0), dtype=np.int64)
        to_csc0[order0] = np.arange(len(order0))
        col_of = np.repeat(np.arange(self.order), np.diff(Ap))
        if np.any((Ai[1:] == Ai[:-1]) & (col_of[1:] == col_of[:-1])):
            raise PatternMismatch("duplicate structural entry")

        self.perm = min_degree_order(self.order, Ap, Ai)
        Bp, Bi, _, posmap = permute_upper(
            self.order, Ap, Ai, np.zeros(len(Ai)), self.perm
        )
        self.Bp, self.Bi = Bp, Bi
        self._to_B = posmap[to_csc0]  # entry index -> position in Bx
        self.Bx = np.zeros(len(Ai))
        self.Bx_raw = np.zeros(len(Ai))

        # unregularized K for refinement, sharing the raw value buffer
        self._K0 = sp.csc_matrix(
            (self.Bx_raw, self.Bi, self.Bp), shape=(self.order, self.order)
        )
        self.Bx_raw = self._K0.data  # scipy may copy on construction
        self._K0T = self._K0.T  # CSR view over the same data array
        self._diag_pos = np.full(self.order, -1, dtype=np.int64)
        for j in range(self.order):
            for p in range(Bp[j], Bp[j + 1]):
                if Bi[p] == j:
                    self._diag_pos[j] = p
        self._has_diag = self._diag_pos >= 0

        # symbolic factorization and backend workspaces
        self.parent, Lnz, self.Lp = etree_and_counts(self.order, Bp, Bi)
        nnzL = int(self.Lp[-1])
        N = self.order
        self.Li = np.zeros(nnzL, dtype=np.int64)
        self.Lx = np.zeros(nnzL)
        self.D = np.zeros(N)
        self.Dinv = np.zeros(N)
        self._ws = dict(
            y_vals=np.zeros(N),
            y_markers=np.zeros(N, dtype=np.int64),
            y_idx=np.zeros(N, dtype=np.int64),
            elim=np.zeros(N, dtype=np.int64),
            l_next=np.zeros(N, dtype=np.int64),
        )
        signs = np.ones(N, dtype=np.int64)
        signs[self.n : self.n + self.m] = -1
        for _, _, ex in self._expansions:
            signs[ex] = 1
            signs[ex + 1] = -1
        self._signs = signs[self.perm].copy()
        self.expected_inertia = (self.n + self.k_expand, self.m + self.k_expand)
        self.refresh()

    # ------------------------------------------------------------- assembly

    def refresh(self):
        """Pull current cone scalings into the value arrays (pattern fixed)."""
        eps = self.eps_static
        for rec in self._refresh:
            kind, blk = rec[0], rec[1]
            desc = blk.kkt_block()
            if kind == "diag":
                if desc[0] != "diag":
                    raise PatternMismatch("cone block changed structure")
                pos = rec[2]
                self._vals_raw[pos] = -desc[1]
                self._vals[pos] = -desc[1] - eps
            elif kind == "dense":
                pos, iu, ju, on_diag = rec[2], rec[3], rec[4], rec[5]
                if desc[0] != "dense":
                    raise PatternMismatch("cone block changed structure")
                h = desc[1][iu, ju]
                self._vals_raw[pos] = -h
                self._vals[pos] = -h - np.where(on_diag, eps, 0.0)
            else:
                if desc[0] != "soclr":
                    raise PatternMismatch("cone block changed structure")
                posd, posu, posv = rec[2], rec[3], rec[4]
                _, d, u, v = desc
                self._vals_raw[posd] = -d
                self._vals[posd] = -d - eps
                self._vals_raw[posu] = u
                self._vals[posu] = u
                self._vals_raw[posv] = v
                self._vals[posv] = v
        self.Bx[self._to_B] = self._vals
        self.Bx_raw[self._to_B] = self._vals_raw
        self._cached_const = None

    # ------------------------------------------------------------ factor

    def factor(self):
        eps_d = float(self.settings.dynamic_reg)
        npos, nneg, nreg = ldl_factor(
            self.order,
            self.Bp,
            self.Bi,
            self.Bx,
            self.Lp,
            self.parent,
            self.Li,
            self.Lx,
            self.D,
            self.Dinv,
            self._signs,
            eps_d,
            **self._ws,
        )
        self.num_factorizations += 1
        self.num_dyn_regularized = nreg
        self._cached_const = None
        if (npos, nneg) != self.expected_inertia:
            raise FactorizationFailure(
                f"inertia {(npos, nneg)} != expected {self.expected_inertia}"
            )

    # ------------------------------------------------------------- solves

    def _buf(self, name, size):
        buf = self._buffers.get(name)
        if buf is None or len(buf) != size:
            buf = np.zeros(size)
            self._buffers[name] = buf
            self._alloc_count += 1
        return buf

    @property
    def allocation_count(self):
        """Workspace acquisitions so far; flat across steady-state iterations.

        Counts buffers handed out by the internal allocator (the kernels
        themselves write into preallocated arrays); numpy expression
        temporaries inside the refinement matvec are not tracked.
        """
        return self._alloc_count

    def _matvec_raw(self, x, out):
        # symmetric matvec with the unregularized matrix, both operands in
        # the permuted coordinates of the stored upper triangle
        out[:] = self._K0 @ x
        out += self._K0T @ x
        d = self.Bx_raw[self._diag_pos[self._has_diag]]
        out[self._has_diag] -= d * x[self._has_diag]

    def _ldl_apply(self, v):
        ldl_solve(self.order, self.Lp, self.Li, self.Lx, self.Dinv, v)

    def solve(self, b1, b2):
        """Solve the unregularized [[P, A'], [A, -H]] [dx; dz] = [b1; b2].

        Expansion rows carry zero right-hand sides. Refines against the
        raw matrix up to the configured round cap, stopping early on the
        relative-residual target or stagnation.
        """
        N = self.order
        rhs = self._buf("rhs", N)
        rhs[: self.n] = b1
        rhs[self.n : self.n + self.m] = b2
        rhs[self.n + self.m :] = 0.0
        prhs = self._buf("prhs", N)
        prhs[:] = rhs[self.perm]
        y = self._buf("sol", N)
        y[:] = prhs
        self._ldl_apply(y)

        scale = max(1.0, float(np.max(np.abs(prhs))))
        tol = float(self.settings.refine_stop_tol)
        resid = self._buf("resid", N)
        best = np.inf
        self.last_refine_rounds = 0
        for _ in range(int(self.settings.refine_max_rounds)):
            self._matvec_raw(y, resid)
            np.subtract(prhs, resid, out=resid)
            rnorm = float(np.max(np.abs(resid))) / scale
            if rnorm <= tol or rnorm >= 0.5 * best:
                break
            best = min(best, rnorm)
            self._ldl_apply(resid)
            y += resid
            self.last_refine_rounds += 1
        else:
            self._matvec_raw(y, resid)
            np.subtract(prhs, resid, out=resid)
            rnorm = float(np.max(np.abs(resid))) / scale
        if not np.isfinite(rnorm) or rnorm > 1e-4:
            raise RefinementStalled(f"relative residual {rnorm:.3e}")
        out = self._buf("unperm", N)
        out[self.perm] = y
        return out[: self.n].copy(), out[self.n : self.n + self.m].copy()

    def solve_const(self, q, b):
        """Cached solution of the constant right-hand side (-q, b)."""
        if self._cached_const is None:
            nq = self._buf("negq", self.n)
            np.negative(q, out=nq)
            self._cached_const = self.solve(nq, b)
        return self._cached_const


# ------------------------------------------------------- step recovery

def recover_step(dx1, dz1, dx2, dz2, d_tau, d_kappa, xi, kappa, tau, P, q, b,
                 cone=None):
    """Combine the two partial solves into (dx, dz, dtau).

    dtau = (d_tau - d_kappa/tau + (q + 2 P xi)' dx1 + b' dz1) / den, where
    den has two algebraically equal forms:

        difference:  kappa/tau + xi' P xi - (q + 2 P xi)' dx2 - b' dz2
        energy:      kappa/tau + ||dx2 - xi||_P^2 + ||dz2||_H^2

    Positivity is only evident in the energy form, and only it survives
    floating point: the difference form cancels catastrophically once the
    iterate is nearly converged (it can round negative while the true value
    is a tiny positive number). When the scaled cone is supplied the energy
    form is used; without it (oracle use) the difference form applies.
    """
    Pxi = sym_matvec(P, xi)
    qe = q + 2.0 * Pxi
    num = d_tau - d_kappa / tau + float(qe @ dx1) + float(b @ dz1)
    if cone is None:
        den = kappa / tau + float(xi @ Pxi) - float(qe @ dx2) - float(b @ dz2)
    else:
        # each term is a square; clamp the roundoff fuzz at zero
        v = dx2 - xi
        den = kappa / tau + max(quad_form(P, v), 0.0) \
            + max(float(dz2 @ cone.apply_H(dz2)), 0.0)
    if not np.isfinite(den) or den <= 0.0:
        raise DegenerateDenominator(f"denominator {den!r}")
    dtau = num / den
    return dx1 + dtau * dx2, dz1 + dtau * dz2, dtau


def recover_slacks(d_s, cone, dz, d_kappa, kappa, tau, dtau):
    """ds = -d_s - H dz and dkappa = -(d_kappa + kappa dtau)/tau."""
    ds = -d_s - cone.apply_H(dz)
    dkappa = -(d_kappa + kappa * dtau) / tau
    return ds, dkappa
