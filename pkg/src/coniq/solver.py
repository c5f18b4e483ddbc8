"""Predictor-corrector interior-point loop on the homogeneous embedding.

The solver works with the embedded variable v = (x, z, s, tau, kappa): a
root of G(v) = 0 with tau > 0 maps to a primal-dual optimum after dividing
by tau, while tau -> 0 with kappa > 0 exposes an infeasibility certificate.
Each iteration refreshes the cone scalings, factors the condensed KKT matrix
once, and takes a Mehrotra-style affine (predictor) step followed by a
combined (corrector) step with higher-order correction.

Termination is always evaluated on the original (un-equilibrated) data.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .cones import CompositeCone, NumericalError
from .kkt import KKTError, KKTSystem, recover_slacks, recover_step
from .model import (
    NONNEG,
    ZERO,
    ProblemData,
    Settings,
    SolveResult,
    Status,
    sym_matvec,
    validate_problem,
)

_LOG = logging.getLogger("coniq")

_INFEASIBLE = (
    Status.PRIMAL_INFEASIBLE,
    Status.DUAL_INFEASIBLE,
    Status.ALMOST_PRIMAL_INFEASIBLE,
    Status.ALMOST_DUAL_INFEASIBLE,
)


class StepTooSmall(ArithmeticError):
    """Step length collapsed; converted into a progress status by the loop."""


# --------------------------------------------------------------- equilibration

@dataclass
class EquilibrationData:
    """Diagonal Ruiz scalings with cost normalization c.

    Scaled data: P^ = c E P E, q^ = c E q, A^ = D A E, b^ = D b. Iterates map
    back as x = E x^, s = s^ / d, z = (d / c) z^; (tau, kappa) are unscaled.
    """

    d: np.ndarray
    e: np.ndarray
    c: float = 1.0

    @classmethod
    def identity(cls, m: int, n: int) -> "EquilibrationData":
        return cls(np.ones(m), np.ones(n), 1.0)

    def unscale_x(self, x):
        return self.e * x

    def unscale_s(self, s):
        return s / self.d

    def unscale_z(self, z):
        return (self.d / self.c) * z

    def unscale_problem(self, data: ProblemData) -> ProblemData:
        """Invert the scaling on a data copy (round-trip identity check)."""
        ei = sp.diags(1.0 / self.e)
        di = sp.diags(1.0 / self.d)
        P = (ei @ data.P @ ei).multiply(1.0 / self.c).tocsc()
        A = (di @ data.A @ ei).tocsc()
        return ProblemData(
            P=P, q=data.q / (self.c * self.e), A=A, b=data.b / self.d,
            cones=data.cones, obj_offset=data.obj_offset,
            metadata=dict(data.metadata),
        )


def _colmax(M) -> np.ndarray:
    if M.nnz == 0:
        return np.zeros(M.shape[1])
    return np.abs(M).max(axis=0).toarray().ravel()


def _rowmax(M) -> np.ndarray:
    if M.nnz == 0:
        return np.zeros(M.shape[0])
    return np.abs(M).max(axis=1).toarray().ravel()


def _sym_colmax(P) -> np.ndarray:
    # column norms of the full symmetric matrix from its stored upper triangle
    return np.maximum(_colmax(P), _rowmax(P))


def ruiz_equilibrate(data: ProblemData, max_passes: int = 10):
    """Scale rows/columns of [P A'; A 0] toward unit infinity norms.

    Rows belonging to one SecondOrder/PSDTriangle/Exponential/Power block
    share a single scalar so cone membership is preserved; Zero and
    Nonnegative rows scale independently. Each pass ends with an OSQP-style
    cost normalization of (P, q). Stops once every nonzero row/column norm
    lies in [0.9, 1.1], checked before scaling so equilibrated data is a
    fixed point.
    """
    P = data.P.copy().astype(np.float64)
    A = data.A.copy().astype(np.float64)
    q = data.q.copy()
    b = data.b.copy()
    m, n = A.shape
    eq = EquilibrationData.identity(m, n)
    groups = []
    lo = 0
    for c in data.cones:
        groups.append((slice(lo, lo + c.rows), c.kind not in (ZERO, NONNEG)))
        lo += c.rows

    for _ in range(int(max_passes)):
        cn = np.maximum(_sym_colmax(P), _colmax(A))
        rn = _rowmax(A)
        for sl, uniform in groups:
            if uniform and rn[sl].size:
                rn[sl] = rn[sl].max()
        live = np.concatenate([cn[cn > 0], rn[rn > 0]])
        if live.size == 0 or (live.min() >= 0.9 and live.max() <= 1.1):
            break
        dx = np.clip(np.where(cn > 0, 1.0 / np.sqrt(np.where(cn > 0, cn, 1.0)), 1.0),
                     1e-4, 1e4)
        dr = np.clip(np.where(rn > 0, 1.0 / np.sqrt(np.where(rn > 0, rn, 1.0)), 1.0),
                     1e-4, 1e4)
        DX = sp.diags(dx)
        P = (DX @ P @ DX).tocsc()
        A = (sp.diags(dr) @ A @ DX).tocsc()
        q *= dx
        b *= dr
        eq.e *= dx
        eq.d *= dr
        pc = _sym_colmax(P)
        denom = max(float(pc.mean()) if pc.size else 0.0,
                    float(np.max(np.abs(q))) if q.size else 0.0)
        if denom > 0.0:
            gamma = float(np.clip(1.0 / denom, 1e-4, 1e4))
            P = P.multiply(gamma).tocsc()
            q *= gamma
            eq.c *= gamma

    scaled = ProblemData(P=P.tocsc(), q=q, A=A.tocsc(), b=b, cones=data.cones,
                         obj_offset=data.obj_offset, metadata=dict(data.metadata))
    return scaled, eq


# ------------------------------------------------------------------ state

@dataclass
class SolverState:
    x: np.ndarray
    z: np.ndarray
    s: np.ndarray
    tau: float = 1.0
    kappa: float = 1.0
    mu: float = 0.0
    iteration: int = 0


@dataclass
class Residuals:
    """Residual components of the embedded root system.

    Stored with the signs r_x = Px + A'z + q*tau, r_z = Ax + s - b*tau,
    r_tau = x'Px/tau + q'x + b'z + kappa. The root function G(v) carries
    (-r_x, r_z, r_tau): see build_rhs_affine.
    """

    r_x: np.ndarray
    r_z: np.ndarray
    r_tau: float


@dataclass
class StepRhs:
    d_x: np.ndarray
    d_z: np.ndarray
    d_tau: float
    d_s: np.ndarray
    d_kappa: float


@dataclass
class Direction:
    dx: np.ndarray
    dz: np.ndarray
    ds: np.ndarray
    dtau: float
    dkappa: float


def compute_residuals(state: SolverState, data: ProblemData):
    """Residuals at the current iterate plus mu = (s'z + tau*kappa)/(nu + 1)."""
    Px = sym_matvec(data.P, state.x)
    r_x = Px + data.A.T @ state.z + data.q * state.tau
    r_z = data.A @ state.x + state.s - data.b * state.tau
    r_tau = (float(state.x @ Px) / state.tau + float(data.q @ state.x)
             + float(data.b @ state.z) + state.kappa)
    nu = sum(c.degree for c in data.cones)
    mu = (float(state.s @ state.z) + state.tau * state.kappa) / (nu + 1)
    return Residuals(r_x, r_z, r_tau), mu


def centering_parameter(alpha_aff: float) -> float:
    sigma = (1.0 - alpha_aff) ** 3
    return min(max(sigma, 0.0), 1.0)


def build_rhs_affine(state: SolverState, res: Residuals, cone: CompositeCone) -> StepRhs:
    """Predictor right-hand side: the full Newton residual of G(v) = 0.

    The x-row of G is -(Px + A'z + q*tau), hence the sign flip on r_x.
    """
    return StepRhs(-res.r_x, res.r_z.copy(), res.r_tau,
                   cone.affine_ds(state.s), state.tau * state.kappa)


def build_rhs_combined(state: SolverState, res: Residuals, cone: CompositeCone,
                       d_aff: Direction, sigma: float, mu: float) -> StepRhs:
    """Corrector right-hand side: (1-sigma)-scaled residuals plus the
    Mehrotra / third-order complementarity corrections from the cones."""
    rho = 1.0 - sigma
    d_kappa = state.tau * state.kappa + d_aff.dkappa * d_aff.dtau - sigma * mu
    d_s = cone.combined_ds(state.s, state.z, sigma * mu, d_aff.ds, d_aff.dz)
    return StepRhs(-rho * res.r_x, rho * res.r_z, rho * res.r_tau, d_s, d_kappa)


def _solve_direction(kkt: KKTSystem, rhs: StepRhs, state: SolverState,
                     data: ProblemData, cone: CompositeCone) -> Direction:
    dx1, dz1 = kkt.solve(rhs.d_x, rhs.d_s - rhs.d_z)
    dx2, dz2 = kkt.solve_const(data.q, data.b)
    xi = state.x / state.tau
    dx, dz, dtau = recover_step(dx1, dz1, dx2, dz2, rhs.d_tau, rhs.d_kappa,
                                xi, state.kappa, state.tau, data.P, data.q,
                                data.b, cone=cone)
    ds, dkappa = recover_slacks(rhs.d_s, cone, dz, rhs.d_kappa,
                                state.kappa, state.tau, dtau)
    return Direction(dx, dz, ds, dtau, dkappa)


def boundary_step(state: SolverState, delta: Direction, cone: CompositeCone,
                  cap: float = 1.0) -> float:
    """Largest alpha <= cap keeping (s, z, tau, kappa) inside their cones."""
    a = cone.step_to_boundary(state.s, delta.ds, cap=cap, dual=False)
    a = cone.step_to_boundary(state.z, delta.dz, cap=a, dual=True)
    if delta.dtau < 0.0:
        a = min(a, -state.tau / delta.dtau)
    if delta.dkappa < 0.0:
        a = min(a, -state.kappa / delta.dkappa)
    return min(a, cap)


def proximity_step(state: SolverState, delta: Direction, cone: CompositeCone,
                   settings: Settings, alpha: float) -> float:
    """Halve alpha until the trial iterate is inside the beta*mu proximity
    tube; 0.0 when no halving gets there."""
    nu1 = cone.degree + 1
    for _ in range(int(settings.max_step_halvings)):
        s_t = state.s + alpha * delta.ds
        z_t = state.z + alpha * delta.dz
        mu_t = (float(s_t @ z_t)
                + (state.tau + alpha * delta.dtau)
                * (state.kappa + alpha * delta.dkappa)) / nu1
        if mu_t > 0.0 and cone.proximity(s_t, z_t, mu_t) <= settings.proximity_beta * mu_t:
            return alpha
        alpha *= 0.5
    return 0.0


def affine_step_size(state: SolverState, delta: Direction, cone: CompositeCone,
                     settings: Settings) -> float:
    """Step size achievable along the affine direction, feeding the centering
    heuristic. With nonsymmetric blocks this must honor the proximity tube,
    not just the cone boundary: when the tube is the binding constraint a
    boundary-only measure reports a near-full step, the centering weight
    collapses, and the iteration stalls on the edge of the neighborhood."""
    alpha = boundary_step(state, delta, cone)
    if cone.has_nonsym:
        alpha = proximity_step(state, delta, cone, settings,
                               settings.gamma_step * alpha)
    return alpha


def step_length(state: SolverState, delta: Direction, cone: CompositeCone,
                settings: Settings) -> float:
    """Fraction-to-boundary step, with proximity backtracking when any
    nonsymmetric block is present."""
    alpha = min(1.0, settings.gamma_step * boundary_step(state, delta, cone))
    if cone.has_nonsym:
        alpha = proximity_step(state, delta, cone, settings, alpha)
        if alpha == 0.0:
            raise StepTooSmall("proximity neighborhood unattainable")
    if alpha < 1e-12:
        raise StepTooSmall(f"step length {alpha:.2e}")
    return alpha


# -------------------------------------------------------------- initialization

def _full_sym(P):
    return P + sp.triu(P, k=1).T


def initialize(data: ProblemData, cone: CompositeCone, settings: Settings) -> SolverState:
    """Starting iterate.

    All-symmetric (plus Zero) cones: solve the least-squares saddle systems
    and shift (s, z) into the interior by (eps + alpha_p) along the unit
    element when the margin alpha_p is insufficient. Any nonsymmetric block
    switches the whole problem to per-block unit initialization. tau = kappa
    = 1 in every case.
    """
    n, m = data.n, data.m
    if cone.has_nonsym:
        s, z = cone.unit_init()
        return SolverState(x=np.zeros(n), z=z, s=s)

    K = sp.bmat([[_full_sym(data.P), data.A.T], [data.A, -sp.identity(m)]],
                format="csc")
    lu = spla.splu(K)
    eps = float(settings.init_margin)
    if data.P.count_nonzero():
        sol = lu.solve(np.concatenate([-data.q, data.b]))
        x = sol[:n]
        zs = sol[n:]
        s = cone.shift_to_interior(-zs.copy(), eps)
        z = cone.shift_to_interior(zs.copy(), eps, dual=True)
    else:
        sol = lu.solve(np.concatenate([np.zeros(n), data.b]))
        x = sol[:n]
        s = cone.shift_to_interior(-sol[n:], eps)
        sol = lu.solve(np.concatenate([-data.q, np.zeros(m)]))
        z = cone.shift_to_interior(sol[n:].copy(), eps, dual=True)
    return SolverState(x=x, z=z, s=s)


# ---------------------------------------------------------------- termination

def _inf(v) -> float:
    return float(np.max(np.abs(v))) if np.size(v) else 0.0


def check_termination(state: SolverState, data: ProblemData,
                      eq: EquilibrationData, settings: Settings,
                      near: bool = False):
    """Evaluate the convergence / infeasibility criteria on unscaled data.

    Returns a Status or None (continue). `near` swaps in the weaker
    tolerance used on early termination and maps hits to Almost* statuses.
    """
    tol = settings.tol_near if near else settings.tol_feas
    eps_r = settings.tol_near if near else settings.tol_infeas_rel
    eps_a = settings.tol_near if near else settings.tol_infeas_abs

    x = eq.unscale_x(state.x)
    s = eq.unscale_s(state.s)
    z = eq.unscale_z(state.z)
    tau = state.tau
    xb, sb, zb = x / tau, s / tau, z / tau

    Pxb = sym_matvec(data.P, xb)
    r_p = data.A @ xb + sb - data.b
    r_d = Pxb + data.A.T @ zb + data.q
    xqx = 0.5 * float(xb @ Pxb)
    g_p = xqx + float(data.q @ xb)
    g_d = -xqx - float(data.b @ zb)

    if (_inf(r_p) < tol * max(1.0, _inf(data.b) + _inf(xb) + _inf(sb))
            and _inf(r_d) < tol * max(1.0, _inf(data.q) + _inf(xb) + _inf(zb))
            and abs(g_p - g_d) < tol * max(1.0, min(abs(g_p), abs(g_d)))):
        return Status.ALMOST_SOLVED if near else Status.SOLVED

    # certificates use the raw (un-normalized) iterates since tau -> 0
    btz = float(data.b @ z)
    if (btz < -eps_a
            and _inf(data.A.T @ z) < -eps_r * max(1.0, _inf(x) + _inf(z)) * btz):
        return Status.ALMOST_PRIMAL_INFEASIBLE if near else Status.PRIMAL_INFEASIBLE

    qtx = float(data.q @ x)
    if (qtx < -eps_a
            and _inf(sym_matvec(data.P, x)) < -eps_r * max(1.0, _inf(x)) * qtx
            and _inf(data.A @ x + s) < -eps_r * max(1.0, _inf(x) + _inf(s)) * qtx):
        return Status.ALMOST_DUAL_INFEASIBLE if near else Status.DUAL_INFEASIBLE

    return None


# ----------------------------------------------------------------- main loop

def _record(sink, verbose, **fields):
    if sink is not None:
        sink.append(dict(fields))
    if verbose >= 1:
        _LOG.info(
            "iter %2s  mu %.3e  rx %.3e  rz %.3e  rt %.3e  alpha %s  sigma %s  %s",
            fields["iter"], fields["mu"], fields["res_x"], fields["res_z"],
            fields["res_tau"],
            "-" if fields["alpha"] is None else f"{fields['alpha']:.3f}",
            "-" if fields["sigma"] is None else f"{fields['sigma']:.3f}",
            fields["status"],
        )


def solve(data: ProblemData, settings: Settings = None, log_sink: list = None) -> SolveResult:
    """Run the interior-point method on one problem instance."""
    settings = settings if settings is not None else Settings()
    data = validate_problem(data)
    t0 = time.perf_counter()

    if settings.equilibrate:
        scaled, eq = ruiz_equilibrate(data, settings.equilibrate_passes)
    else:
        scaled, eq = data, EquilibrationData.identity(data.m, data.n)

    cone = CompositeCone(scaled.cones)
    records = [] if log_sink is None else log_sink
    status = Status.MAX_ITERATIONS
    steps = 0
    state = None
    kkt = None
    try:
        kkt = KKTSystem(scaled.P, scaled.A, cone, settings)
        state = initialize(scaled, cone, settings)
    except (KKTError, NumericalError, RuntimeError) as exc:
        _LOG.warning("setup failed: %s", exc)
        nanv = lambda k: np.full(k, np.nan)
        return SolveResult(
            status=Status.NUMERICAL_ERROR, x=nanv(data.n), s=nanv(data.m),
            z=nanv(data.m), obj_primal=np.nan, obj_dual=np.nan, iterations=0,
            solve_time=time.perf_counter() - t0,
            info={"error": str(exc), "log": records},
        )

    retried = False
    for it in range(settings.max_iter):
        state.iteration = it
        res, mu = compute_residuals(state, scaled)
        state.mu = mu

        st = check_termination(state, data, eq, settings)
        if st is not None:
            status = st
            _record(records, settings.verbose, iter=it, mu=mu,
                    res_x=_inf(res.r_x), res_z=_inf(res.r_z),
                    res_tau=abs(res.r_tau), alpha=None, sigma=None,
                    status=str(st))
            break
        if settings.time_limit and time.perf_counter() - t0 > settings.time_limit:
            status = check_termination(state, data, eq, settings, near=True) \
                or Status.TIME_LIMIT
            break

        try:
            cone.update_scalings(state.s, state.z, mu)
            kkt.refresh()
            kkt.factor()
            rhs_aff = build_rhs_affine(state, res, cone)
            d_aff = _solve_direction(kkt, rhs_aff, state, scaled, cone)
            alpha_aff = affine_step_size(state, d_aff, cone, settings)
            sigma = centering_parameter(alpha_aff)
            rhs = build_rhs_combined(state, res, cone, d_aff, sigma, mu)
            delta = _solve_direction(kkt, rhs, state, scaled, cone)
            alpha = step_length(state, delta, cone, settings)

            # validate before committing so a retry starts from a clean state
            s_n = state.s + alpha * delta.ds
            z_n = state.z + alpha * delta.dz
            tau_n = state.tau + alpha * delta.dtau
            kappa_n = state.kappa + alpha * delta.dkappa
            if not (tau_n > 0.0 and kappa_n > 0.0 and cone.interior(s_n)
                    and cone.interior(z_n, dual=True)):
                raise StepTooSmall("iterate left the cone interior")
            state.x += alpha * delta.dx
            state.s, state.z = s_n, z_n
            state.tau, state.kappa = tau_n, kappa_n
        except (KKTError, NumericalError, StepTooSmall, FloatingPointError,
                np.linalg.LinAlgError) as exc:
            if not retried:
                # one rescue attempt: refactor with doubled dynamic shift
                retried = True
                kkt.settings = kkt.settings.copy(
                    dynamic_reg=2.0 * kkt.settings.dynamic_reg)
                _LOG.info("retrying iteration %d after: %s", it, exc)
                continue
            near = check_termination(state, data, eq, settings, near=True)
            if near is not None:
                status = near
            elif isinstance(exc, StepTooSmall):
                status = Status.INSUFFICIENT_PROGRESS
            else:
                status = Status.NUMERICAL_ERROR
            break

        steps += 1
        _record(records, settings.verbose, iter=it, mu=mu,
                res_x=_inf(res.r_x), res_z=_inf(res.r_z),
                res_tau=abs(res.r_tau), alpha=alpha, sigma=sigma,
                status="continue")
    else:
        status = check_termination(state, data, eq, settings, near=True) \
            or Status.MAX_ITERATIONS

    solve_time = time.perf_counter() - t0
    x = eq.unscale_x(state.x)
    s = eq.unscale_s(state.s)
    z = eq.unscale_z(state.z)
    if status in _INFEASIBLE:
        obj_p = obj_d = float("nan")
    else:
        x, s, z = x / state.tau, s / state.tau, z / state.tau
        Px = sym_matvec(data.P, x)
        xqx = 0.5 * float(x @ Px)
        obj_p = xqx + float(data.q @ x) + data.obj_offset
        obj_d = -xqx - float(data.b @ z) + data.obj_offset

    info = {
        "mu": state.mu,
        "tau": state.tau,
        "kappa": state.kappa,
        "num_factorizations": kkt.num_factorizations,
        "ldl_backend": kkt.backend,
        "equilibration_cost": eq.c,
        "log": records,
    }
    return SolveResult(status=status, x=x, s=s, z=z, obj_primal=obj_p,
                       obj_dual=obj_d, iterations=steps,
                       solve_time=solve_time, info=info)
