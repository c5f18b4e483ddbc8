"""Per-block cone kernel interface.

Each block owns its rows of (s, z) and provides membership tests, barrier
calculus, a primal-dual scaling H with H z = s, and the step/centering
helpers the interior-point loop needs. Symmetric blocks use Nesterov-Todd
scalings; the three-dimensional nonsymmetric blocks use a BFGS-style update
of the conjugate Hessian.
"""

from __future__ import annotations

import numpy as np


class NumericalError(ArithmeticError):
    """Raised when a scaling update meets a point outside the open cone."""


class ConeBlock:
    kind = None
    is_symmetric = True

    def __init__(self, dim):
        self.dim = int(dim)

    @property
    def rows(self) -> int:
        return self.dim

    @property
    def degree(self) -> int:
        raise NotImplementedError

    # -- membership ------------------------------------------------------
    def interior(self, x) -> bool:
        raise NotImplementedError

    def dual_interior(self, z) -> bool:
        # self-dual by default; nonsymmetric blocks override
        return self.interior(z)

    # -- initialization ---------------------------------------------------
    def unit_init(self):
        """(s0, z0) for unit initialization."""
        raise NotImplementedError

    def margin(self, x):
        """(alpha, e) with alpha = inf{a : x + a e in K}; negative inside."""
        raise NotImplementedError

    # -- barrier calculus --------------------------------------------------
    def barrier(self, x) -> float:
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def grad_conj(self, z):
        """gradient of the conjugate (dual) barrier at z in int K*."""
        raise NotImplementedError

    # -- steps -------------------------------------------------------------
    def step_to_boundary(self, x, dx, cap=1.0, dual=False) -> float:
        raise NotImplementedError

    # -- scaling -----------------------------------------------------------
    def update_scaling(self, s, z, mu):
        raise NotImplementedError

    def identity_scaling(self):
        """Set H to the identity (used by the saddle-point initialization)."""
        raise NotImplementedError

    def apply_H(self, v):
        """H @ v with the current scaling (exact, independent of the KKT
        representation)."""
        raise NotImplementedError

    def kkt_block(self):
        """How this block enters the KKT matrix:

        ("empty",)                      -- zero cone (H = 0)
        ("diag", d)                     -- diagonal H
        ("dense", H)                    -- dense symmetric H
        ("soclr", d, u, v)              -- diagonal + u u' - v v' expansion
        """
        raise NotImplementedError

    # -- centering ---------------------------------------------------------
    def affine_ds(self, s):
        return np.array(s, dtype=np.float64, copy=True)

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        raise NotImplementedError

    def proximity(self, s, z, mu) -> float:
        """Distance to the central path; only nonsymmetric blocks use it."""
        return 0.0


def min_positive_root(a, b, c):
    """Smallest positive root of a t^2 + 2 b t + c = 0, or inf.

    Uses the numerically stable split to avoid cancellation.
    """
    if a == 0.0:
        if b == 0.0:
            return np.inf
        t = -c / (2.0 * b)
        return t if t > 0 else np.inf
    disc = b * b - a * c
    if disc < 0.0:
        return np.inf
    sq = np.sqrt(disc)
    # roots: (-b -+ sq)/a  via stable form
    if b >= 0.0:
        r1 = (-b - sq) / a
        r2 = c / (a * r1) if r1 != 0.0 else np.inf
    else:
        r2 = (-b + sq) / a
        r1 = c / (a * r2) if r2 != 0.0 else np.inf
    best = np.inf
    for r in (r1, r2):
        if r > 0.0 and r < best:
            best = r
    return best
