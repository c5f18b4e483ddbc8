"""PSD cone kernel on scaled upper-triangle (svec) coordinates.

svec stacks the upper triangle column by column with off-diagonal entries
scaled by sqrt(2), so that <svec(X), svec(Y)> = tr(XY).
"""

from __future__ import annotations

import numpy as np

from .base import ConeBlock, NumericalError

_SQRT2 = np.sqrt(2.0)
_cache = {}


def _tri_indices(n):
    """(rows, cols, scale) of svec coordinates in column-major upper order."""
    if n not in _cache:
        rows = np.concatenate([np.arange(j + 1) for j in range(n)])
        cols = np.concatenate([np.full(j + 1, j) for j in range(n)])
        scale = np.where(rows == cols, 1.0, _SQRT2)
        _cache[n] = (rows, cols, scale)
    return _cache[n]


def svec_dim(n):
    return n * (n + 1) // 2


def svec(M):
    n = M.shape[0]
    rows, cols, scale = _tri_indices(n)
    return M[rows, cols] * scale


def smat(v):
    t = v.shape[0]
    n = int(round((np.sqrt(8.0 * t + 1.0) - 1.0) / 2.0))
    rows, cols, scale = _tri_indices(n)
    M = np.zeros((n, n))
    M[rows, cols] = v / scale
    M[cols, rows] = M[rows, cols]
    return M


def svec_index(i, j, n):
    """Position of matrix entry (i, j), i <= j, in the svec vector."""
    return j * (j + 1) // 2 + i


class PSDBlock(ConeBlock):
    """PSD cone of side n in svec coordinates; barrier -log det."""

    kind = "PSDTriangle"

    def __init__(self, side):
        self.side = int(side)
        super().__init__(svec_dim(self.side))
        self.R = None
        self.Rinv = None
        self.lam_diag = None
        self.identity_scaling()

    @property
    def rows(self):
        return self.dim

    @property
    def degree(self):
        return self.side

    def interior(self, x):
        X = smat(x)
        try:
            np.linalg.cholesky(X)
            return True
        except np.linalg.LinAlgError:
            return False

    def unit_init(self):
        e = svec(np.eye(self.side))
        return e, e.copy()

    def margin(self, x):
        lmin = float(np.linalg.eigvalsh(smat(x))[0])
        return -lmin, svec(np.eye(self.side))

    def barrier(self, x):
        sign, logdet = np.linalg.slogdet(smat(x))
        if sign <= 0:
            return np.inf
        return float(-logdet)

    def grad(self, x):
        return -svec(np.linalg.inv(smat(x)))

    def grad_conj(self, z):
        return -svec(np.linalg.inv(smat(z)))

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        L = np.linalg.cholesky(smat(x))
        Linv = np.linalg.inv(L)
        M = Linv @ smat(dx) @ Linv.T
        lmin = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
        if lmin >= 0.0:
            return cap
        return min(cap, -1.0 / lmin)

    def update_scaling(self, s, z, mu):
        S = smat(s)
        Z = smat(z)
        try:
            Ls = np.linalg.cholesky(S)
            Lz = np.linalg.cholesky(Z)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("semidefinite scaling needs interior s, z") from exc
        U, sig, Vt = np.linalg.svd(Lz.T @ Ls)
        isq = 1.0 / np.sqrt(sig)
        self.R = Ls @ Vt.T * isq  # R = Ls V Sigma^(-1/2)
        self.Rinv = (isq[:, None] * U.T) @ Lz.T
        # lambda = svec(R' Z R) = svec(diag(sig)) in the NT basis
        self.lam_diag = sig

    def identity_scaling(self):
        self.R = np.eye(self.side)
        self.Rinv = np.eye(self.side)
        self.lam_diag = np.ones(self.side)

    # scaling operators: W(u) = svec(R' U R), so that W z = W^-T s = lambda
    def apply_W(self, u):
        return svec(self.R.T @ smat(u) @ self.R)

    def apply_Wt(self, u):
        return svec(self.R @ smat(u) @ self.R.T)

    def apply_Winv(self, u):
        return svec(self.Rinv.T @ smat(u) @ self.Rinv)

    def apply_Winvt(self, u):
        # inverse adjoint; carries s to lambda just like W carries z
        return svec(self.Rinv @ smat(u) @ self.Rinv.T)

    def apply_H(self, u):
        Wm = self.R @ self.R.T
        return svec(Wm @ smat(u) @ Wm)

    def kkt_block(self):
        Wm = self.R @ self.R.T
        rows, cols, scale = _tri_indices(self.side)
        t = self.dim
        H = np.empty((t, t))
        for k in range(t):
            i, j, c = rows[k], cols[k], scale[k]
            # image of the k-th svec basis matrix under U -> Wm U Wm
            B = np.outer(Wm[:, i], Wm[j, :])
            if i != j:
                M = (B + np.outer(Wm[:, j], Wm[i, :])) / _SQRT2
            else:
                M = B
            H[:, k] = (M + M.T)[rows, cols] / 2.0 * scale
        return ("dense", H)

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        lam = self.lam_diag
        T = np.diag(lam * lam)
        # the correction lives in the lambda frame: W^-T on the s side,
        # W on the z side (they differ once R is far from orthogonal)
        A = smat(self.apply_Winvt(ds_aff))
        B = smat(self.apply_W(dz_aff))
        T = T + 0.5 * (A @ B + B @ A)
        T -= sigma_mu * np.eye(self.side)
        # solve Lam o D = T  with Lam = diag(lam)
        D = 2.0 * T / (lam[:, None] + lam[None, :])
        return self.apply_Wt(svec(0.5 * (D + D.T)))
