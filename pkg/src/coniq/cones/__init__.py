"""Cone kernels and the ordered block container used by the solver."""

from __future__ import annotations

import numpy as np

from ..model import EXP, NONNEG, POW, PSD, SOC, ZERO, ConeSpec
from .base import ConeBlock, NumericalError
from .nonsym import ExpBlock, NotInterior, PowBlock
from .psd import PSDBlock, smat, svec, svec_dim
from .symmetric import SOC_DENSE_LIMIT, NonnegBlock, SOCBlock, ZeroBlock

__all__ = [
    "CompositeCone",
    "ConeBlock",
    "ExpBlock",
    "NonnegBlock",
    "NotInterior",
    "NumericalError",
    "PowBlock",
    "PSDBlock",
    "SOCBlock",
    "SOC_DENSE_LIMIT",
    "ZeroBlock",
    "make_block",
    "smat",
    "svec",
    "svec_dim",
]

_FACTORY = {
    ZERO: lambda c: ZeroBlock(c.dim),
    NONNEG: lambda c: NonnegBlock(c.dim),
    SOC: lambda c: SOCBlock(c.dim),
    PSD: lambda c: PSDBlock(c.dim),
    EXP: lambda c: ExpBlock(),
    POW: lambda c: PowBlock(c.alpha),
}


def make_block(spec: ConeSpec) -> ConeBlock:
    try:
        return _FACTORY[spec.kind](spec)
    except KeyError:
        raise ValueError(f"unknown cone kind {spec.kind!r}") from None


class CompositeCone:
    """Ordered cone blocks with their row offsets into the slack vector.

    All per-block operations concatenate in block order; vectors passed in
    must have length ``rows`` (the conic rows of A). The total barrier
    degree nu drives the complementarity measure mu = (s'z + tau*kappa)/(nu+1).
    """

    def __init__(self, specs):
        self.specs = list(specs)
        self.blocks = [make_block(c) for c in self.specs]
        self.slices = []
        lo = 0
        for blk in self.blocks:
            self.slices.append(slice(lo, lo + blk.rows))
            lo += blk.rows
        self.rows = lo
        self.degree = sum(blk.degree for blk in self.blocks)
        self.has_nonsym = any(not blk.is_symmetric for blk in self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(zip(self.blocks, self.slices))

    def unit_init(self):
        s = np.empty(self.rows)
        z = np.empty(self.rows)
        for blk, sl in self:
            s[sl], z[sl] = blk.unit_init()
        return s, z

    def interior(self, x, dual=False):
        for blk, sl in self:
            ok = blk.dual_interior(x[sl]) if dual else blk.interior(x[sl])
            if not ok:
                return False
        return True

    def shift_to_interior(self, x, eps, dual=False):
        """Blockwise margin shift: x <- x + (eps + alpha_p) e when needed.

        alpha_p is the largest blockwise infimum of {alpha : x + alpha e in K}.
        Zero blocks never bind: on the primal side they are pinned to 0, on
        the dual side the variable is free. Modifies x in place.
        """
        alpha_p = -np.inf
        e = np.zeros(self.rows)
        for blk, sl in self:
            if isinstance(blk, ZeroBlock):
                if not dual:
                    x[sl] = 0.0
                continue
            a, eb = blk.margin(x[sl])
            e[sl] = eb
            alpha_p = max(alpha_p, a)
        if alpha_p >= -eps:
            x += (eps + alpha_p) * e
        return x

    def step_to_boundary(self, x, dx, cap=1.0, dual=False):
        a = cap
        for blk, sl in self:
            a = min(a, blk.step_to_boundary(x[sl], dx[sl], cap=a, dual=dual))
        return a

    def update_scalings(self, s, z, mu):
        for blk, sl in self:
            blk.update_scaling(s[sl], z[sl], mu)

    def identity_scalings(self):
        for blk, _ in self:
            blk.identity_scaling()

    def apply_H(self, v):
        out = np.empty(self.rows)
        for blk, sl in self:
            out[sl] = blk.apply_H(v[sl])
        return out

    def affine_ds(self, s):
        out = np.empty(self.rows)
        for blk, sl in self:
            out[sl] = blk.affine_ds(s[sl])
        return out

    def combined_ds(self, s, z, sigma_mu, ds_aff, dz_aff):
        out = np.empty(self.rows)
        for blk, sl in self:
            out[sl] = blk.combined_ds(s[sl], z[sl], sigma_mu, ds_aff[sl], dz_aff[sl])
        return out

    def proximity(self, s, z, mu):
        return max(blk.proximity(s[sl], z[sl], mu) for blk, sl in self)

    def barrier(self, x):
        return sum(
            blk.barrier(x[sl]) for blk, sl in self if not isinstance(blk, ZeroBlock)
        )
