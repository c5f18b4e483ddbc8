"""Benchmark problem generators.

Everything is deterministic under a seed. Where a certified optimum is cheap
to carry (planted KKT points, top-eigenvalue SDPs) it is recorded in
``metadata.expected_objective`` so downstream harnesses can regression-check
solves without an extra oracle.
"""

import numpy as np
import scipy.sparse as sp

from .cones.psd import svec
from .model import (
    NONNEG,
    PSD,
    SOC,
    ZERO,
    ConeSpec,
    DimensionMismatch,
    ProblemData,
    validate_problem,
)


def _dense(A):
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    return A


def generate_huber(A, b, M=1.0, name=None):
    """Huber regression as a QP.

    Variables (x, u, r, s): minimize u'u + 2M 1'(r+s) subject to
    Ax - b - u = r - s and r, s >= 0. The quadratic region has half-width M.
    """
    A = _dense(A)
    m, n = A.shape
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({m},)")
    N = n + 3 * m
    u = np.arange(n, n + m)
    P = sp.csc_matrix((np.full(m, 2.0), (u, u)), shape=(N, N))
    q = np.zeros(N)
    q[n + m:] = 2.0 * M
    I = sp.identity(m, format="csc")
    Zn = sp.csc_matrix((m, n))
    rows = sp.bmat([
        [sp.csc_matrix(A), -I, -I, I],       # Ax - u - r + s = b
        [Zn, None, -I, None],                # r >= 0
        [Zn, None, None, -I],                # s >= 0
    ], format="csc")
    rhs = np.concatenate([b, np.zeros(2 * m)])
    return validate_problem(ProblemData(
        P=P, q=q, A=rows, b=rhs,
        cones=(ConeSpec(ZERO, m), ConeSpec(NONNEG, 2 * m)),
        metadata={"name": name or f"huber_{m}x{n}"},
    ))


def generate_lasso(A, b, lam=None, name=None):
    """l1-regularized least squares: minimize y'y + lam*1't with
    Ax - b = y and -t <= x <= t. Default lam = ||A'b||_inf."""
    A = _dense(A)
    m, n = A.shape
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (m,):
        raise DimensionMismatch(f"b has shape {b.shape}, expected ({m},)")
    if lam is None:
        lam = float(np.abs(A.T @ b).max())
    if lam < 0:
        raise DimensionMismatch("lam must be nonnegative")
    N = m + 2 * n
    y = np.arange(m)
    P = sp.csc_matrix((np.full(m, 2.0), (y, y)), shape=(N, N))
    q = np.zeros(N)
    q[m + n:] = lam
    Im, In = sp.identity(m, format="csc"), sp.identity(n, format="csc")
    Znm = sp.csc_matrix((n, m))
    rows = sp.bmat([
        [-Im, sp.csc_matrix(A), None],       # Ax - y = b
        [Znm, -In, -In],                     # x + t >= 0
        [Znm, In, -In],                      # t - x >= 0
    ], format="csc")
    rhs = np.concatenate([b, np.zeros(2 * n)])
    return validate_problem(ProblemData(
        P=P, q=q, A=rows, b=rhs,
        cones=(ConeSpec(ZERO, m), ConeSpec(NONNEG, 2 * n)),
        metadata={"name": name or f"lasso_{m}x{n}"},
    ))


def huber_instance(m=10, n=4, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    b = A @ x0 + 0.1 * rng.standard_normal(m)
    b[rng.choice(m, size=max(1, m // 5), replace=False)] += rng.choice(
        [-5.0, 5.0], size=max(1, m // 5))  # outliers: where Huber earns its keep
    return generate_huber(A, b, M=1.0, name=f"huber_{m}x{n}_s{seed}")


def lasso_instance(m=8, n=5, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x0 = np.zeros(n)
    support = rng.choice(n, size=max(1, n // 2), replace=False)
    x0[support] = rng.standard_normal(support.size)
    b = A @ x0 + 0.05 * rng.standard_normal(m)
    return generate_lasso(A, b, name=f"lasso_{m}x{n}_s{seed}")


def _planted_orthant(rng, A, x, frac_active):
    """Complementary (s, z) for Nonnegative rows: a strict partition."""
    m = A.shape[0]
    k = max(1, int(round(frac_active * m)))
    active = np.zeros(m, dtype=bool)
    active[rng.choice(m, size=k, replace=False)] = True
    s = np.where(active, 0.0, rng.uniform(0.5, 1.5, m))
    z = np.where(active, rng.uniform(0.5, 1.5, m), 0.0)
    return s, z


def random_lp(m=12, n=5, seed=0):
    """LP with a planted nondegenerate vertex optimum.

    Draw x*, split rows into an active set of size n (s=0, z>0) and a slack
    remainder (s>0, z=0), then back-solve b = Ax* + s* and q = -A'z*. The
    KKT point certifies optimality; the value q'x* rides along as metadata.
    """
    if m < n:
        raise DimensionMismatch("need m >= n to pin a vertex")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    active = rng.choice(m, size=n, replace=False)
    s = rng.uniform(0.5, 1.5, m)
    s[active] = 0.0
    z = np.zeros(m)
    z[active] = rng.uniform(0.5, 1.5, n)
    b = A @ x + s
    q = -A.T @ z
    return validate_problem(ProblemData(
        P=sp.csc_matrix((n, n)), q=q, A=sp.csc_matrix(A), b=b,
        cones=(ConeSpec(NONNEG, m),),
        metadata={"name": f"lp_{m}x{n}_s{seed}",
                  "expected_objective": float(q @ x)},
    ))


def random_qp(m=10, n=6, seed=0):
    """Strongly convex QP with a planted KKT point (same recipe as random_lp
    but stationarity back-solves q = -(Px* + A'z*))."""
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((n, n)) / np.sqrt(n)
    Pfull = L @ L.T + np.eye(n)
    A = rng.standard_normal((m, n))
    x = rng.standard_normal(n)
    s, z = _planted_orthant(rng, A, x, 0.5)
    b = A @ x + s
    q = -(Pfull @ x + A.T @ z)
    obj = 0.5 * float(x @ Pfull @ x) + float(q @ x)
    return validate_problem(ProblemData(
        P=sp.csc_matrix(np.triu(Pfull)), q=q, A=sp.csc_matrix(A), b=b,
        cones=(ConeSpec(NONNEG, m),),
        metadata={"name": f"qp_{m}x{n}_s{seed}", "expected_objective": obj},
    ))


def random_socp(n=6, seed=0):
    """SOCP with planted complementarity: orthant rows split as in random_lp,
    one second-order block with s on the boundary and z its reflection."""
    rng = np.random.default_rng(seed)
    m1 = n
    A1 = rng.standard_normal((m1, n))
    A2 = rng.standard_normal((n + 1, n))
    x = rng.standard_normal(n)
    s1, z1 = _planted_orthant(rng, A1, x, 0.5)
    w = rng.standard_normal(n)
    t = float(np.linalg.norm(w))
    s2 = np.concatenate([[t], w])
    z2 = rng.uniform(0.5, 1.5) * np.concatenate([[t], -w])
    A = np.vstack([A1, A2])
    b = A @ x + np.concatenate([s1, s2])
    q = -A.T @ np.concatenate([z1, z2])
    return validate_problem(ProblemData(
        P=sp.csc_matrix((n, n)), q=q, A=sp.csc_matrix(A), b=b,
        cones=(ConeSpec(NONNEG, m1), ConeSpec(SOC, n + 1)),
        metadata={"name": f"socp_{n}_s{seed}",
                  "expected_objective": float(q @ x)},
    ))


def block_arrow_matrix(side, width, arm=None, seed=0):
    """Symmetric matrix with diagonal blocks of the given width plus a dense
    coupling tail (the arrow); the sparsity pattern chordal decomposition
    thrives on."""
    arm = width if arm is None else arm
    if arm >= side:
        raise DimensionMismatch("arrow arm must be narrower than the matrix")
    rng = np.random.default_rng(seed)
    C = np.zeros((side, side))
    body = side - arm
    for lo in range(0, body, width):
        hi = min(lo + width, body)
        B = rng.standard_normal((hi - lo, hi - lo))
        C[lo:hi, lo:hi] = 0.5 * (B + B.T)
    T = rng.standard_normal((arm, side))
    C[body:, :] = T
    C[:, body:] = T.T
    C[body:, body:] = 0.5 * (C[body:, body:] + C[body:, body:].T)
    C[np.diag_indices(side)] = rng.uniform(1.0, 2.0, side)
    return C


def block_arrow_sdp(side=30, width=5, seed=0):
    """Largest-eigenvalue SDP over a block-arrow pattern: min t with
    t*I - C >= 0. Optimum is lambda_max(C), recorded as metadata."""
    C = block_arrow_matrix(side, width, seed=seed)
    lam = float(np.linalg.eigvalsh(C)[-1])
    return validate_problem(ProblemData(
        P=sp.csc_matrix((1, 1)),
        q=np.array([1.0]),
        A=sp.csc_matrix(-svec(np.eye(side))[:, None]),
        b=svec(-C),
        cones=(ConeSpec(PSD, side),),
        metadata={"name": f"blockarrow_{side}w{width}_s{seed}",
                  "expected_objective": lam},
    ))
