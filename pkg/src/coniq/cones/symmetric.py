"""Zero, nonnegative-orthant and second-order cone kernels."""

from __future__ import annotations

import numpy as np

from .base import ConeBlock, NumericalError, min_positive_root

# SOC blocks above this dimension enter the KKT matrix as a sparse
# diagonal-plus-rank-two expansion instead of a dense lower-right block.
SOC_DENSE_LIMIT = 4


class ZeroBlock(ConeBlock):
    """K = {0}; the dual is all of R^d. Carries no barrier and no scaling."""

    kind = "Zero"

    @property
    def degree(self):
        return 0

    def interior(self, x):
        return bool(np.all(x == 0.0))

    def dual_interior(self, z):
        return True

    def unit_init(self):
        return np.zeros(self.dim), np.zeros(self.dim)

    def margin(self, x):
        # x + alpha*0 stays feasible for every alpha, so this block never
        # binds the blockwise max used for the initialization shift
        return -np.inf, np.zeros(self.dim)

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        return cap

    def update_scaling(self, s, z, mu):
        pass

    def identity_scaling(self):
        pass

    def apply_H(self, v):
        return np.zeros_like(v)

    def kkt_block(self):
        return ("empty",)

    def affine_ds(self, s):
        return np.zeros(self.dim)

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        return np.zeros(self.dim)


class NonnegBlock(ConeBlock):
    """Nonnegative orthant with barrier -sum(log x_i)."""

    kind = "Nonnegative"

    def __init__(self, dim):
        super().__init__(dim)
        self.w = None  # NT scaling point, H = diag(w^2)
        self.identity_scaling()

    @property
    def degree(self):
        return self.dim

    def interior(self, x):
        return bool(np.all(x > 0.0))

    def unit_init(self):
        e = np.ones(self.dim)
        return e, e.copy()

    def margin(self, x):
        return float(-np.min(x)), np.ones(self.dim)

    def barrier(self, x):
        return float(-np.sum(np.log(x)))

    def grad(self, x):
        return -1.0 / x

    def grad_conj(self, z):
        return -1.0 / z

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        neg = dx < 0.0
        if not np.any(neg):
            return cap
        return min(cap, float(np.min(-x[neg] / dx[neg])))

    def update_scaling(self, s, z, mu):
        if np.any(s <= 0.0) or np.any(z <= 0.0):
            raise NumericalError("orthant scaling needs strictly positive s, z")
        self.w = np.sqrt(s / z)
        self.lam = np.sqrt(s * z)

    def identity_scaling(self):
        self.w = np.ones(self.dim)
        self.lam = np.ones(self.dim)

    def apply_H(self, v):
        return (self.w * self.w) * v

    def kkt_block(self):
        return ("diag", self.w * self.w)

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        # W'(lam \ (lam o lam + (W^-1 ds) o (W dz) - sigma*mu*e)) elementwise
        return (s * z + ds_aff * dz_aff - sigma_mu) / z


def _jmul(x):
    # J = diag(1, -I)
    y = -np.array(x, dtype=np.float64, copy=True)
    y[0] = x[0]
    return y


class SOCBlock(ConeBlock):
    """Second-order cone {(u, v) : ||v|| <= u}, barrier -log(u^2 - ||v||^2)."""

    kind = "SecondOrder"

    def __init__(self, dim):
        super().__init__(dim)
        self.eta = None
        self.wbar = None
        self.v = None  # hyperbolic Householder vector of W = eta (2 v v' - J)
        self.lam = None
        self.identity_scaling()

    @property
    def degree(self):
        return 2

    def interior(self, x):
        return bool(x[0] > np.linalg.norm(x[1:]))

    def unit_init(self):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e, e.copy()

    def margin(self, x):
        e = np.zeros(self.dim)
        e[0] = 1.0
        return float(np.linalg.norm(x[1:]) - x[0]), e

    def _jquad(self, x):
        return float(x[0] * x[0] - x[1:] @ x[1:])

    def barrier(self, x):
        return float(-np.log(self._jquad(x)))

    def grad(self, x):
        return -2.0 * _jmul(x) / self._jquad(x)

    def grad_conj(self, z):
        return -2.0 * _jmul(z) / self._jquad(z)

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        a = self._jquad(dx)
        b = float(x[0] * dx[0] - x[1:] @ dx[1:])
        c = self._jquad(x)
        return min(cap, min_positive_root(a, b, c))

    def update_scaling(self, s, z, mu):
        a2 = self._jquad(s)
        b2 = self._jquad(z)
        if s[0] <= 0.0 or z[0] <= 0.0 or a2 <= 0.0 or b2 <= 0.0:
            raise NumericalError("second-order scaling needs interior s, z")
        a = np.sqrt(a2)
        b = np.sqrt(b2)
        sbar = s / a
        zbar = z / b
        gamma = np.sqrt((1.0 + sbar @ zbar) / 2.0)
        wbar = (sbar + _jmul(zbar)) / (2.0 * gamma)
        self.eta = np.sqrt(a / b)
        self.wbar = wbar
        self.v = (wbar + _unit(self.dim)) / np.sqrt(2.0 * (1.0 + wbar[0]))
        self.lam = self.apply_W(z)

    def identity_scaling(self):
        self.eta = 1.0
        self.wbar = _unit(self.dim)
        self.v = _unit(self.dim)
        self.lam = _unit(self.dim)

    # W = eta (2 v v' - J) is symmetric; W^-1 = (1/eta)(2 (Jv)(Jv)' - J)
    def apply_W(self, x):
        v = self.v
        return self.eta * (2.0 * v * (v @ x) - _jmul(x))

    def apply_Winv(self, x):
        jv = _jmul(self.v)
        return (2.0 * jv * (jv @ x) - _jmul(x)) / self.eta

    def apply_H(self, x):
        w = self.wbar
        return (self.eta ** 2) * (2.0 * w * (w @ x) - _jmul(x))

    def kkt_block(self):
        w = self.wbar
        e2 = self.eta ** 2
        if self.dim <= SOC_DENSE_LIMIT:
            H = 2.0 * e2 * np.outer(w, w)
            H[0, 0] -= e2
            H[np.arange(1, self.dim), np.arange(1, self.dim)] += e2
            return ("dense", H)
        # exact expansion H = eta^2 (D + u u' - v v'), D = diag(w0^2-1, 1, ..)
        d = np.ones(self.dim)
        d[0] = w[0] * w[0] - 1.0
        u = np.sqrt(2.0) * self.eta * w
        vcol = np.zeros(self.dim)
        vcol[0] = self.eta * w[0]
        return ("soclr", e2 * d, u, vcol)

    @staticmethod
    def _circ(x, y):
        out = np.empty_like(x)
        out[0] = x @ y
        out[1:] = x[0] * y[1:] + y[0] * x[1:]
        return out

    def _lam_div(self, u):
        # solve Arw(lam) d = u
        lam = self.lam
        sq = self._jquad(lam)
        d = np.empty_like(u)
        d0 = (lam[0] * u[0] - lam[1:] @ u[1:]) / sq
        d[0] = d0
        d[1:] = (u[1:] - d0 * lam[1:]) / lam[0]
        return d

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        lam = self.lam
        t = self._circ(lam, lam)
        t += self._circ(self.apply_Winv(ds_aff), self.apply_W(dz_aff))
        t[0] -= sigma_mu
        return self.apply_W(self._lam_div(t))


def _unit(dim):
    e = np.zeros(dim)
    e[0] = 1.0
    return e
