"""Problem data, cone specs, settings and solve results.

Problems are stored in the conic standard form

    minimize   (1/2) x'Px + q'x
    subject to Ax + s = b,  s in K,

with P kept upper-triangular (CSC) and K a product of the supported cones.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
import scipy.sparse as sp

# cone kind tags (also the strings used in the JSON problem format)
ZERO = "Zero"
NONNEG = "Nonnegative"
SOC = "SecondOrder"
PSD = "PSDTriangle"
EXP = "Exponential"
POW = "Power"

_KINDS = (ZERO, NONNEG, SOC, PSD, EXP, POW)


class Status(str, Enum):
    SOLVED = "Solved"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ALMOST_SOLVED = "AlmostSolved"
    ALMOST_PRIMAL_INFEASIBLE = "AlmostPrimalInfeasible"
    ALMOST_DUAL_INFEASIBLE = "AlmostDualInfeasible"
    MAX_ITERATIONS = "MaxIterations"
    TIME_LIMIT = "TimeLimit"
    NUMERICAL_ERROR = "NumericalError"
    INSUFFICIENT_PROGRESS = "InsufficientProgress"

    def __str__(self):
        return self.value


class ProblemError(ValueError):
    """Base class for problem validation failures."""


class DimensionMismatch(ProblemError):
    pass


class ConeDimensionMismatch(ProblemError):
    pass


class BadConeParameter(ProblemError):
    pass


class NonFiniteData(ProblemError):
    pass


@dataclass(frozen=True)
class ConeSpec:
    """One cone block. ``dim`` is the matrix side for PSDTriangle, the vector
    dimension otherwise. ``alpha`` is only meaningful for Power."""

    kind: str
    dim: int
    alpha: float = None

    @property
    def rows(self) -> int:
        # number of rows of (A, b) the block occupies
        if self.kind == PSD:
            return self.dim * (self.dim + 1) // 2
        return self.dim

    @property
    def degree(self) -> int:
        if self.kind == ZERO:
            return 0
        if self.kind == NONNEG:
            return self.dim
        if self.kind == SOC:
            return 2
        if self.kind == PSD:
            return self.dim
        return 3  # Exponential, Power

    def validate(self):
        if self.kind not in _KINDS:
            raise BadConeParameter(f"unknown cone kind {self.kind!r}")
        if self.kind in (ZERO, NONNEG, PSD) and self.dim < 1:
            raise ConeDimensionMismatch(f"{self.kind} needs dim >= 1, got {self.dim}")
        if self.kind == SOC and self.dim < 2:
            raise ConeDimensionMismatch(f"{SOC} needs dim >= 2, got {self.dim}")
        if self.kind in (EXP, POW) and self.dim != 3:
            raise ConeDimensionMismatch(f"{self.kind} is three-dimensional, got dim {self.dim}")
        if self.kind == POW:
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise BadConeParameter(f"{POW} needs alpha in the open interval (0, 1), got {self.alpha}")
        elif self.alpha is not None:
            raise BadConeParameter(f"alpha given for non-{POW} cone {self.kind}")


@dataclass(eq=False)
class ProblemData:
    P: sp.csc_matrix  # n x n, upper triangle only
    q: np.ndarray
    A: sp.csc_matrix  # m x n
    b: np.ndarray
    cones: tuple
    obj_offset: float = 0.0
    metadata: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ProblemData):
            return NotImplemented
        return (
            self.obj_offset == other.obj_offset
            and tuple(self.cones) == tuple(other.cones)
            and np.array_equal(self.q, other.q)
            and np.array_equal(self.b, other.b)
            and _csc_equal(self.P, other.P)
            and _csc_equal(self.A, other.A)
        )

    def copy(self) -> "ProblemData":
        return ProblemData(
            P=self.P.copy(),
            q=self.q.copy(),
            A=self.A.copy(),
            b=self.b.copy(),
            cones=tuple(self.cones),
            obj_offset=self.obj_offset,
            metadata=dict(self.metadata),
        )


def _csc_equal(a, b):
    return (
        a.shape == b.shape
        and a.nnz == b.nnz
        and np.array_equal(a.indptr, b.indptr)
        and np.array_equal(a.indices, b.indices)
        and np.array_equal(a.data, b.data)
    )


def _as_csc(M, shape, name):
    if M is None:
        M = sp.csc_matrix(shape)
    if not sp.issparse(M):
        M = sp.csc_matrix(np.asarray(M, dtype=np.float64))
    M = M.tocsc().astype(np.float64)
    if M.shape != shape:
        raise DimensionMismatch(f"{name} has shape {M.shape}, expected {shape}")
    M.sum_duplicates()
    M.sort_indices()
    return M


def _as_vec(v, length, name):
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != length:
        raise DimensionMismatch(f"{name} has shape {v.shape}, expected ({length},)")
    return v


def validate_problem(data: ProblemData) -> ProblemData:
    """Check shapes/cones/finiteness and return a canonicalized copy.

    Sparse inputs come back in sorted, duplicate-free CSC form; the result is a
    fixed point of this function. P must hold only the upper triangle of the
    quadratic term -- positive semidefiniteness itself is not checked here (see
    :func:`check_quadratic_psd_sample` for a debug spot-check).
    """
    cones = tuple(data.cones)
    for c in cones:
        c.validate()
    q = np.ascontiguousarray(data.q, dtype=np.float64)
    if q.ndim != 1:
        raise DimensionMismatch(f"q must be a vector, got shape {q.shape}")
    n = q.shape[0]
    A = data.A if sp.issparse(data.A) else sp.csc_matrix(np.asarray(data.A, dtype=np.float64))
    m = A.shape[0]
    if sum(c.rows for c in cones) != m:
        raise ConeDimensionMismatch(
            f"cone rows sum to {sum(c.rows for c in cones)} but A has {m} rows"
        )
    A = _as_csc(A, (m, n), "A")
    P = _as_csc(data.P, (n, n), "P")
    if P.nnz and np.any(P.indices > np.repeat(np.arange(n), np.diff(P.indptr))):
        raise DimensionMismatch(
            "P must store the upper triangle only; pass triu(P) for symmetric input"
        )
    b = _as_vec(data.b, m, "b")
    for name, arr in (("P", P.data), ("q", q), ("A", A.data), ("b", b)):
        if arr.size and not np.all(np.isfinite(arr)):
            raise NonFiniteData(f"{name} contains non-finite entries")
    off = float(data.obj_offset)
    if not np.isfinite(off):
        raise NonFiniteData("obj_offset is not finite")
    return ProblemData(P=P, q=q, A=A, b=b, cones=cones, obj_offset=off, metadata=dict(data.metadata))


def sym_matvec(P_upper: sp.csc_matrix, x: np.ndarray) -> np.ndarray:
    """(P + P' - diag(P)) @ x for upper-triangular storage."""
    y = P_upper @ x
    y += P_upper.T @ x
    y -= P_upper.diagonal() * x
    return y


def quad_form(P_upper: sp.csc_matrix, x: np.ndarray) -> float:
    """x'Px with P stored as its upper triangle."""
    return float(x @ sym_matvec(P_upper, x))


def duality_gap(data: ProblemData, x: np.ndarray, z: np.ndarray) -> float:
    """The gap identity x'Px + q'x + b'z (zero at optimality)."""
    return quad_form(data.P, x) + float(data.q @ x) + float(data.b @ z)


def check_quadratic_psd_sample(data: ProblemData, k: int = 32, seed: int = 0, tol: float = 1e-10):
    """Debug spot-check: k random Rayleigh quotients of P must be >= -tol.

    Not called from validate_problem (a full PSD check would dominate setup
    cost); intended for test/debug use on suspect inputs.
    """
    rng = np.random.default_rng(seed)
    n = data.n
    for _ in range(k):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v) or 1.0
        if quad_form(data.P, v) < -tol:
            raise BadConeParameter("quadratic term fails a random PSD spot-check")


@dataclass
class Settings:
    max_iter: int = 200
    time_limit: float = 0.0  # seconds; 0 disables
    verbose: int = 0

    tol_feas: float = 1e-8
    tol_near: float = 1e-5
    tol_infeas_rel: float = 1e-8
    tol_infeas_abs: float = 1e-8

    static_reg: float = 1e-8
    dynamic_reg: float = 1e-13
    refine_max_rounds: int = 10
    refine_stop_tol: float = 1e-13

    gamma_step: float = 0.99
    proximity_beta: float = 0.5
    max_step_halvings: int = 20

    equilibrate: bool = True
    equilibrate_passes: int = 10

    init_margin: float = 1.0

    chordal: bool = True
    merge_strategy: str = "clique_graph"  # none | parent_child | clique_graph
    merge_fill_limit: int = 8
    merge_overlap_ratio: float = 0.4
    min_decompose_side: int = 9  # PSD blocks below this side are left alone

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.time_limit < 0:
            raise ValueError("time_limit must be >= 0")
        for name in ("tol_feas", "tol_near", "tol_infeas_rel", "tol_infeas_abs",
                     "static_reg", "dynamic_reg", "refine_stop_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.gamma_step < 1.0:
            raise ValueError("gamma_step must lie in (0, 1)")
        if not 0.0 < self.proximity_beta:
            raise ValueError("proximity_beta must be positive")
        if self.merge_strategy not in ("none", "parent_child", "clique_graph"):
            raise ValueError(f"unknown merge_strategy {self.merge_strategy!r}")

    def copy(self, **overrides) -> "Settings":
        return replace(self, **overrides)


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    obj_primal: float
    obj_dual: float
    iterations: int
    solve_time: float
    info: dict = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == Status.SOLVED
