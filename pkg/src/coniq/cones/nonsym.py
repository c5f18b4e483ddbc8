"""Exponential and power cone kernels.

Both cones are three-dimensional with barrier degree 3 and are not self-dual,
so the scaling matrix H cannot come from a Nesterov-Todd point. Instead H is
a rank-3 BFGS-style update of the dual-barrier Hessian satisfying the secants
H z = s and H grad f(s) = grad f*(z).

The barrier pair is oriented around the dual side: each cone has a symmetric
linear map M with M(K*) = K, so f*(z) := f(M z) is a closed-form barrier for
K* and all of grad f*, hess f*, and the third-order tensor are available
directly. The primal barrier of the pair is the Legendre conjugate of f*,
whose gradient has no closed form and is evaluated by a damped Newton solve
(grad_primal). The closed-form kernel f itself only supplies membership
tests, derivative oracles, and the raw material for the composed dual
derivatives.
"""

from __future__ import annotations

import numpy as np

from .base import ConeBlock, NumericalError

_NU = 3  # barrier degree of both cones

# Unit initialization point of the exponential cone: minimizer of
# 0.5*||z||^2 + f*(z) with f*(z) = f(z1 - z2, -z1, z3) the closed-form dual
# barrier.  Satisfies z = -grad f*(z), hence <z, z> = 3 and the pair
# s = z = EXP_UNIT sits exactly on the mu = 1 central path.
# Refined by Newton to ~1e-16 residual against the barrier code below.
EXP_UNIT = np.array([-1.0513839437502288, 0.5564096186043385, 1.2589678864644602])


class NotInterior(NumericalError):
    """Raised when a cone operation receives a point outside the open cone."""


class NonsymBlock(ConeBlock):
    is_symmetric = False

    def __init__(self):
        super().__init__(3)
        self._conj_warm = None
        self._st = None  # -grad f*(z) at the last scaling point
        self._Hstar = None
        self.H = None
        self.identity_scaling()

    @property
    def degree(self):
        return _NU

    def unit_init(self):
        p = self._unit_point()
        return p.copy(), p.copy()

    def margin(self, x):
        raise NotImplementedError("nonsymmetric blocks use unit initialization")

    # subclasses: interior, dual_interior, _unit_point, barrier, grad, _hess,
    # _third(x, a, b), and the symmetric map _M (with inverse _Minv) carrying
    # the dual cone onto the primal one.

    # -- dual barrier f*(z) = f(M z), closed form -------------------------
    def grad_conj(self, z):
        """grad f*(z) for the closed-form dual barrier (z in int K*)."""
        return self._M @ self.grad(self._M @ z)

    def hess_dual(self, z):
        M = self._M
        return M @ self._hess(M @ z) @ M

    def third_dual(self, z, a, b):
        M = self._M
        return M @ self._third(M @ z, M @ a, M @ b)

    # -- primal barrier of the pair: Legendre conjugate of f* -------------
    def grad_primal(self, s):
        """Gradient of the conjugate of the dual barrier at s in int K.

        No closed form exists; inverts grad_conj by a damped Newton solve on
        the kernel barrier (M^-1 s lies in int K* exactly when s is interior).
        """
        return -(self._Minv @ self._conj_point(self._Minv @ s))

    def _conj_point(self, z):
        """argmin_x <z, x> + f(x); satisfies grad f(x) = -z."""
        if not self.dual_interior(z):
            raise NotInterior(f"{self.kind}: point is not in the open dual cone")
        zs = float(np.max(np.abs(z)))
        x = None
        if self._conj_warm is not None and self.interior(self._conj_warm):
            x = self._conj_warm.copy()
        if x is None:
            u = self._unit_point()
            x = u * (_NU / float(u @ z))
            if not self.interior(x):
                x = u.copy()
        for _ in range(50):
            g = z + self.grad(x)
            if np.max(np.abs(g)) <= 1e-13 * max(1.0, zs):
                break
            H = self._hess(x)
            try:
                d = -np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                # boundary-grazing iterate: the Hessian overflows LAPACK's
                # range; damp it and settle for the best point found so far
                # if even that fails
                diag = float(np.trace(H)) / H.shape[0]
                if not np.isfinite(diag) or diag <= 0.0:
                    break
                try:
                    d = -np.linalg.solve(
                        H + (1e-14 * diag) * np.eye(H.shape[0]), g)
                except np.linalg.LinAlgError:
                    break
            lam2 = float(-(g @ d))
            if lam2 <= 0.0:
                break
            lam = np.sqrt(lam2)
            t = 1.0 if lam <= 0.25 else 1.0 / (1.0 + lam)
            xn = x + t * d
            k = 0
            while k < 60 and not self.interior(xn):
                t *= 0.5
                xn = x + t * d
                k += 1
            if k == 60:
                break
            x = xn
        self._conj_warm = x.copy()
        return x

    def update_scaling(self, s, z, mu):
        if not (self.interior(s) and self.dual_interior(z)):
            raise NotInterior("scaling update needs s in int K, z in int K*")
        zt = -self.grad_primal(s)
        st = -self.grad_conj(z)
        Hstar = self.hess_dual(z)
        muloc = float(s @ z) / _NU
        mut = float(st @ zt) / _NU
        self._st = st
        self._Hstar = Hstar
        H = muloc * Hstar
        dprod = muloc * mut - 1.0
        ds_vec = s - muloc * st
        Hzt = Hstar @ zt
        qden = float(zt @ Hzt) - _NU * mut * mut
        # rank-3 secant correction; fall back to mu*Hstar when the
        # denominators degenerate (exactly on the central path)
        guard = 1e-12 * max(1.0, abs(muloc * mut))
        if dprod > guard and qden > 1e-12 * abs(float(zt @ Hzt)):
            c = s + muloc * st + ds_vec / dprod
            r = Hzt - mut * st
            Hfull = (
                H
                + (np.outer(ds_vec, c) + np.outer(c, ds_vec)) / (2.0 * muloc * _NU)
                - (muloc / qden) * np.outer(r, r)
            )
            try:
                np.linalg.cholesky(Hfull)
                H = Hfull
            except np.linalg.LinAlgError:
                pass
        self.H = 0.5 * (H + H.T)

    def identity_scaling(self):
        self.H = np.eye(3)
        self._st = None
        self._Hstar = None

    def apply_H(self, v):
        return self.H @ v

    def kkt_block(self):
        return ("dense", self.H)

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        member = self.dual_interior if dual else self.interior
        if member(x + cap * dx):
            return cap
        lo, hi = 0.0, cap
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if member(x + mid * dx):
                lo = mid
            else:
                hi = mid
        return lo

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        # d_s = s + sigma*mu*grad f*(z) + eta, with the third-order term
        # eta = -1/2 grad^3 f*(z)[dz, (hess f*)^-1 ds]
        w = np.linalg.solve(self._Hstar, ds_aff)
        eta = -0.5 * self.third_dual(z, dz_aff, w)
        return s - sigma_mu * self._st + eta

    def proximity(self, s, z, mu):
        # residual of the central-path equation s = -mu grad f*(z), measured
        # in the local norm of the dual barrier; exactly 0 on the path
        if not (self.interior(s) and self.dual_interior(z)):
            return np.inf
        r = s + mu * self.grad_conj(z)
        try:
            y = np.linalg.solve(self.hess_dual(z), r)
        except np.linalg.LinAlgError:
            # hessian degenerates approaching the boundary: treat as far off
            return np.inf
        return float(np.sqrt(max(r @ y, 0.0)))


def _log_psi_third(psi, gpsi, Hpsi, psi3ab, a, b):
    """grad^3 of -log(psi) contracted with (a, b)."""
    Pa = float(gpsi @ a)
    Pb = float(gpsi @ b)
    Qab = float(a @ Hpsi @ b)
    Ha = Hpsi @ a
    Hb = Hpsi @ b
    return (
        -2.0 * Pa * Pb * gpsi / psi**3
        + (Qab * gpsi + Pb * Ha + Pa * Hb) / psi**2
        - psi3ab / psi
    )


class ExpBlock(NonsymBlock):
    """K = closure{(s1,s2,s3) : s2 e^(s1/s2) <= s3, s2 > 0}."""

    kind = "Exponential"

    # T z = (z1 - z2, -z1, z3) carries the dual cone onto the primal one
    _M = np.array([[1.0, -1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    _Minv = np.array([[0.0, -1.0, 0.0], [-1.0, -1.0, 0.0], [0.0, 0.0, 1.0]])

    def interior(self, x):
        s1, s2, s3 = x
        return s2 > 0.0 and s3 > 0.0 and s2 * np.log(s3 / s2) > s1

    def dual_interior(self, z):
        z1, z2, z3 = z
        # interior of {z : -z1 e^(z2/z1) <= e z3, z1 < 0}
        return z1 < 0.0 and z3 > 0.0 and np.log(z3) > np.log(-z1) + z2 / z1 - 1.0

    def _unit_point(self):
        return EXP_UNIT.copy()

    def _psi(self, x):
        s1, s2, s3 = x
        return s2 * np.log(s3 / s2) - s1

    def barrier(self, x):
        s1, s2, s3 = x
        return float(-np.log(self._psi(x)) - np.log(s2) - np.log(s3))

    def grad(self, x):
        s1, s2, s3 = x
        psi = self._psi(x)
        ell = np.log(s3 / s2)
        gpsi = np.array([-1.0, ell - 1.0, s2 / s3])
        g = -gpsi / psi
        g[1] -= 1.0 / s2
        g[2] -= 1.0 / s3
        return g

    def _hess(self, x):
        s1, s2, s3 = x
        psi = self._psi(x)
        ell = np.log(s3 / s2)
        gpsi = np.array([-1.0, ell - 1.0, s2 / s3])
        Hpsi = np.array([
            [0.0, 0.0, 0.0],
            [0.0, -1.0 / s2, 1.0 / s3],
            [0.0, 1.0 / s3, -s2 / (s3 * s3)],
        ])
        H = np.outer(gpsi, gpsi) / psi**2 - Hpsi / psi
        H[1, 1] += 1.0 / s2**2
        H[2, 2] += 1.0 / s3**2
        return H

    def _third(self, x, a, b):
        s1, s2, s3 = x
        psi = self._psi(x)
        ell = np.log(s3 / s2)
        gpsi = np.array([-1.0, ell - 1.0, s2 / s3])
        Hpsi = np.array([
            [0.0, 0.0, 0.0],
            [0.0, -1.0 / s2, 1.0 / s3],
            [0.0, 1.0 / s3, -s2 / (s3 * s3)],
        ])
        psi3ab = np.array([
            0.0,
            a[1] * b[1] / s2**2 - a[2] * b[2] / s3**2,
            -(a[1] * b[2] + a[2] * b[1]) / s3**2 + 2.0 * s2 * a[2] * b[2] / s3**3,
        ])
        out = _log_psi_third(psi, gpsi, Hpsi, psi3ab, a, b)
        out[1] += -2.0 * a[1] * b[1] / s2**3
        out[2] += -2.0 * a[2] * b[2] / s3**3
        return out


class PowBlock(NonsymBlock):
    """K = {(s1,s2,s3) : s1^alpha s2^(1-alpha) >= |s3|, s1, s2 >= 0}."""

    kind = "Power"

    def __init__(self, alpha):
        self.alpha = float(alpha)
        # diag(1/a, 1/(1-a), 1) carries the dual cone onto the primal one
        d = np.array([1.0 / self.alpha, 1.0 / (1.0 - self.alpha), 1.0])
        self._M = np.diag(d)
        self._Minv = np.diag(1.0 / d)
        super().__init__()

    def interior(self, x):
        s1, s2, s3 = x
        a = self.alpha
        if s1 <= 0.0 or s2 <= 0.0:
            return False
        if s3 == 0.0:
            return True
        return a * np.log(s1) + (1 - a) * np.log(s2) > np.log(abs(s3))

    def dual_interior(self, z):
        z1, z2, z3 = z
        a = self.alpha
        if z1 <= 0.0 or z2 <= 0.0:
            return False
        lhs = a * np.log(z1 / a) + (1 - a) * np.log(z2 / (1 - a))
        return lhs > np.log(abs(z3)) if z3 != 0.0 else True

    def _unit_point(self):
        a = self.alpha
        return np.array([np.sqrt(1.0 + a), np.sqrt(2.0 - a), 0.0])

    def _phi_parts(self, x):
        s1, s2, _ = x
        b1 = 2.0 * self.alpha
        b2 = 2.0 - b1
        phi = np.exp(b1 * np.log(s1) + b2 * np.log(s2))
        return phi, b1, b2

    def barrier(self, x):
        s1, s2, s3 = x
        a = self.alpha
        phi, _, _ = self._phi_parts(x)
        return float(-np.log(phi - s3 * s3) - (1 - a) * np.log(s1) - a * np.log(s2))

    def grad(self, x):
        s1, s2, s3 = x
        a = self.alpha
        phi, b1, b2 = self._phi_parts(x)
        psi = phi - s3 * s3
        gpsi = np.array([b1 * phi / s1, b2 * phi / s2, -2.0 * s3])
        g = -gpsi / psi
        g[0] -= (1 - a) / s1
        g[1] -= a / s2
        return g

    def _psi_derivs(self, x):
        s1, s2, s3 = x
        phi, b1, b2 = self._phi_parts(x)
        psi = phi - s3 * s3
        gpsi = np.array([b1 * phi / s1, b2 * phi / s2, -2.0 * s3])
        Hpsi = np.array([
            [b1 * (b1 - 1) * phi / s1**2, b1 * b2 * phi / (s1 * s2), 0.0],
            [b1 * b2 * phi / (s1 * s2), b2 * (b2 - 1) * phi / s2**2, 0.0],
            [0.0, 0.0, -2.0],
        ])
        return phi, b1, b2, psi, gpsi, Hpsi

    def _hess(self, x):
        s1, s2, _ = x
        a = self.alpha
        _, _, _, psi, gpsi, Hpsi = self._psi_derivs(x)
        H = np.outer(gpsi, gpsi) / psi**2 - Hpsi / psi
        H[0, 0] += (1 - a) / s1**2
        H[1, 1] += a / s2**2
        return H

    def _third(self, x, a_vec, b_vec):
        s1, s2, _ = x
        al = self.alpha
        phi, b1, b2, psi, gpsi, Hpsi = self._psi_derivs(x)
        a1, a2 = a_vec[0], a_vec[1]
        c1, c2 = b_vec[0], b_vec[1]
        t111 = b1 * (b1 - 1) * (b1 - 2) * phi / s1**3
        t112 = b1 * (b1 - 1) * b2 * phi / (s1**2 * s2)
        t122 = b1 * b2 * (b2 - 1) * phi / (s1 * s2**2)
        t222 = b2 * (b2 - 1) * (b2 - 2) * phi / s2**3
        psi3ab = np.array([
            t111 * a1 * c1 + t112 * (a1 * c2 + a2 * c1) + t122 * a2 * c2,
            t112 * a1 * c1 + t122 * (a1 * c2 + a2 * c1) + t222 * a2 * c2,
            0.0,
        ])
        out = _log_psi_third(psi, gpsi, Hpsi, psi3ab, a_vec, b_vec)
        out[0] += -2.0 * (1 - al) * a_vec[0] * b_vec[0] / s1**3
        out[1] += -2.0 * al * a_vec[1] * b_vec[1] / s2**3
        return out
