import numpy as np
import pytest
import scipy.sparse as sp

from coniq.cones import CompositeCone
from coniq.kkt import (
    DegenerateDenominator,
    FactorizationFailure,
    KKTError,
    KKTSystem,
    PatternMismatch,
    RefinementStalled,
    recover_slacks,
    recover_step,
)
from coniq.model import EXP, NONNEG, POW, PSD, SOC, ZERO, ConeSpec, Settings, sym_matvec

from test_cones import rand_exp, rand_exp_dual, rand_pow, rand_pow_dual, rand_psd, rand_soc


def upper(dense):
    return sp.triu(sp.csc_matrix(dense), format="csc")


def dense_H(cone):
    H = np.zeros((cone.rows, cone.rows))
    for blk, sl in cone:
        desc = blk.kkt_block()
        if desc[0] == "empty":
            continue
        if desc[0] == "diag":
            H[sl, sl] = np.diag(desc[1])
        elif desc[0] == "dense":
            H[sl, sl] = desc[1]
        else:
            _, d, u, v = desc
            H[sl, sl] = np.diag(d) + np.outer(u, u) - np.outer(v, v)
    return H


def random_system(rng, n, specs, pfactor=1.0, update=True):
    """A KKT system with genuine NT/BFGS scalings from random interior pairs."""
    M = rng.standard_normal((n, n))
    Pd = pfactor * (M.T @ M / n + np.eye(n))
    cone = CompositeCone(specs)
    m = cone.rows
    A = sp.csc_matrix(rng.standard_normal((m, n)))
    if update:
        s = np.empty(m)
        z = np.empty(m)
        for blk, sl in cone:
            if blk.kind == ZERO:
                s[sl], z[sl] = 0.0, rng.standard_normal(blk.rows)
            elif blk.kind == NONNEG:
                s[sl], z[sl] = rng.uniform(0.5, 2.0, blk.rows), rng.uniform(0.5, 2.0, blk.rows)
            elif blk.kind == SOC:
                s[sl], z[sl] = rand_soc(blk.rows, rng), rand_soc(blk.rows, rng)
            elif blk.kind == PSD:
                s[sl], z[sl] = rand_psd(blk.side, rng), rand_psd(blk.side, rng)
            elif blk.kind == EXP:
                s[sl], z[sl] = rand_exp(rng), rand_exp_dual(rng)
            else:
                s[sl], z[sl] = rand_pow(blk.alpha, rng), rand_pow_dual(blk.alpha, rng)
        mu = (s @ z) / max(cone.degree, 1)
        cone.update_scalings(s, z, mu)
    return upper(Pd), A, cone, Pd


def unpermuted_dense(kkt, raw=False):
    vals = kkt.Bx_raw if raw else kkt.Bx
    B = sp.csc_matrix((vals, kkt.Bi, kkt.Bp), shape=(kkt.order, kkt.order)).toarray()
    B = B + B.T - np.diag(np.diag(B))
    inv = np.empty_like(kkt.perm)
    inv[kkt.perm] = np.arange(kkt.order)
    return B[np.ix_(inv, inv)]


def test_assemble_one_by_one():
    # P = 0, A = [1], one orthant row with identity scaling
    P = upper(np.zeros((1, 1)))
    A = sp.csc_matrix(np.ones((1, 1)))
    cone = CompositeCone([ConeSpec(NONNEG, 1)])
    kkt = KKTSystem(P, A, cone, Settings())
    K = unpermuted_dense(kkt)
    assert np.array_equal(K, np.array([[1e-8, 1.0], [1.0, -(1.0 + 1e-8)]]))
    K0 = unpermuted_dense(kkt, raw=True)
    assert np.array_equal(K0, np.array([[0.0, 1.0], [1.0, -1.0]]))


def test_two_by_two_hand_elimination():
    P = upper(np.zeros((1, 1)))
    A = sp.csc_matrix(np.ones((1, 1)))
    cone = CompositeCone([ConeSpec(NONNEG, 1)])
    kkt = KKTSystem(P, A, cone, Settings())
    kkt.factor()
    # tie-break keeps natural order, so the pivots are available by hand:
    # d1 = 1e-8, then d2 = -(1+1e-8) - 1/1e-8
    assert np.array_equal(kkt.perm, [0, 1])
    assert kkt.D[0] == 1e-8
    assert np.isclose(kkt.D[1], -(1.0 + 1e-8) - 1e8, rtol=1e-15)
    assert kkt.num_dyn_regularized == 0


def test_factor_reconstructs_order_50():
    # no zero cone here: its eps-sized pivots give the factor O(1/eps)
    # element growth by design, and accuracy there comes from refinement
    rng = np.random.default_rng(3)
    P, A, cone, _ = random_system(
        rng, 20, [ConeSpec(NONNEG, 14), ConeSpec(SOC, 3),
                  ConeSpec(SOC, 9), ConeSpec(PSD, 2), ConeSpec(EXP, 3)]
    )
    kkt = KKTSystem(P, A, cone, Settings())
    assert kkt.n + kkt.m == 52
    kkt.factor()
    N = kkt.order
    L = np.eye(N)
    for j in range(N):
        for p in range(kkt.Lp[j], kkt.Lp[j + 1]):
            L[kkt.Li[p], j] = kkt.Lx[p]
    rebuilt = L @ np.diag(kkt.D) @ L.T
    B = sp.csc_matrix((kkt.Bx, kkt.Bi, kkt.Bp), shape=(N, N)).toarray()
    B = B + B.T - np.diag(np.diag(B))
    scale = np.max(np.abs(B))
    assert np.max(np.abs(rebuilt - B)) <= 1e-12 * scale


def test_dynamic_lift_of_vanishing_pivot():
    # with (numerically) no static shift the first pivot underflows and is
    # lifted to +dynamic_reg, keeping the signature intact
    P = upper(np.zeros((1, 1)))
    A = sp.csc_matrix(np.ones((1, 1)))
    cone = CompositeCone([ConeSpec(ZERO, 1)])
    st = Settings(static_reg=1e-30)
    kkt = KKTSystem(P, A, cone, st)
    kkt.factor()
    assert kkt.num_dyn_regularized >= 1
    assert kkt.D[0] == st.dynamic_reg
    dx, dz = kkt.solve(np.array([2.0]), np.array([3.0]))
    # K0 = [[0, 1], [1, 0]] swaps the right-hand side blocks
    assert np.allclose(dx, 3.0, rtol=1e-12)
    assert np.allclose(dz, 2.0, rtol=1e-12)


def test_zero_rhs_gives_zero():
    rng = np.random.default_rng(11)
    P, A, cone, _ = random_system(rng, 5, [ConeSpec(NONNEG, 4), ConeSpec(SOC, 3)])
    kkt = KKTSystem(P, A, cone, Settings())
    kkt.factor()
    dx, dz = kkt.solve(np.zeros(5), np.zeros(7))
    assert not dx.any() and not dz.any()
    assert kkt.last_refine_rounds == 0


def test_refined_solve_order_20():
    rng = np.random.default_rng(5)
    P, A, cone, Pd = random_system(rng, 8, [ConeSpec(NONNEG, 6), ConeSpec(SOC, 3),
                                            ConeSpec(POW, 3, alpha=0.4)])
    kkt = KKTSystem(P, A, cone, Settings())
    assert kkt.order == 20
    kkt.factor()
    b1 = rng.standard_normal(8)
    b2 = rng.standard_normal(12)
    dx, dz = kkt.solve(b1, b2)
    K0 = np.block([[Pd, A.toarray().T], [A.toarray(), -dense_H(cone)]])
    resid = K0 @ np.concatenate([dx, dz]) - np.concatenate([b1, b2])
    rel = np.max(np.abs(resid)) / max(1.0, np.max(np.abs(np.concatenate([b1, b2]))))
    assert rel <= 1e-10
    assert kkt.last_refine_rounds <= 3


def test_const_rhs_cache():
    rng = np.random.default_rng(13)
    P, A, cone, _ = random_system(rng, 4, [ConeSpec(NONNEG, 5)])
    q = rng.standard_normal(4)
    b = rng.standard_normal(5)
    kkt = KKTSystem(P, A, cone, Settings())
    kkt.factor()
    first = kkt.solve_const(q, b)
    again = kkt.solve_const(q, b)
    assert again is first  # cached, no extra work
    ref = kkt.solve(-q, b)
    assert np.allclose(first[0], ref[0]) and np.allclose(first[1], ref[1])
    kkt.factor()
    assert kkt.solve_const(q, b) is not first  # invalidated by refactor


def test_recover_step_against_full_system():
    rng = np.random.default_rng(17)
    n = 7
    P, A, cone, Pd = random_system(
        rng, n, [ConeSpec(ZERO, 2), ConeSpec(NONNEG, 4), ConeSpec(SOC, 6),
                 ConeSpec(EXP, 3)]
    )
    m = cone.rows
    q = rng.standard_normal(n)
    b = rng.standard_normal(m)
    tau, kappa = 0.8, 0.45
    xi = rng.standard_normal(n) / tau
    d_x = rng.standard_normal(n)
    d_z = rng.standard_normal(m)
    d_s = rng.standard_normal(m)
    d_tau, d_kappa = 0.3, -0.2

    kkt = KKTSystem(P, A, cone, Settings())
    kkt.factor()
    dx1, dz1 = kkt.solve(d_x, d_s - d_z)
    dx2, dz2 = kkt.solve_const(q, b)
    dx, dz, dtau = recover_step(dx1, dz1, dx2, dz2, d_tau, d_kappa,
                                xi, kappa, tau, P, q, b)

    H = dense_H(cone)
    qe = q + 2.0 * (Pd @ xi)
    M3 = np.zeros((n + m + 1, n + m + 1))
    M3[:n, :n] = Pd
    M3[:n, n:n + m] = A.toarray().T
    M3[:n, -1] = q
    M3[n:n + m, :n] = -A.toarray()
    M3[n:n + m, n:n + m] = H
    M3[n:n + m, -1] = b
    M3[-1, :n] = -qe
    M3[-1, n:n + m] = -b
    M3[-1, -1] = xi @ Pd @ xi + kappa / tau
    rhs = np.concatenate([d_x, d_z - d_s, [d_tau - d_kappa / tau]])
    resid = M3 @ np.concatenate([dx, dz, [dtau]]) - rhs
    assert np.max(np.abs(resid)) <= 1e-10 * max(1.0, np.max(np.abs(rhs)))


def test_denominator_positivity_identity():
    # kappa/tau + xi'P xi - (q + 2P xi)'dx2 - b'dz2
    #   == kappa/tau + ||dx2 - xi||_P^2 + ||dz2||_H^2  when K [dx2; dz2] = (-q, b)
    rng = np.random.default_rng(19)
    n = 6
    P, A, cone, Pd = random_system(rng, n, [ConeSpec(NONNEG, 4), ConeSpec(SOC, 5)])
    m = cone.rows
    q = rng.standard_normal(n)
    b = rng.standard_normal(m)
    kkt = KKTSystem(P, A, cone, Settings())
    kkt.factor()
    dx2, dz2 = kkt.solve_const(q, b)
    tau, kappa = 1.3, 0.7
    xi = rng.standard_normal(n)
    qe = q + 2.0 * (Pd @ xi)
    form_direct = kappa / tau + xi @ Pd @ xi - qe @ dx2 - b @ dz2
    H = dense_H(cone)
    form_energy = kappa / tau + (dx2 - xi) @ Pd @ (dx2 - xi) + dz2 @ H @ dz2
    assert form_direct == pytest.approx(form_energy, rel=1e-8)
    assert form_energy > 0.0
    # the energy form also shows the P = 0 reduction directly
    P0 = upper(np.zeros((n, n)))
    kkt0 = KKTSystem(P0, A, cone, Settings())
    kkt0.factor()
    dx0, dz0 = kkt0.solve_const(q, b)
    direct0 = kappa / tau - q @ dx0 - b @ dz0
    assert direct0 == pytest.approx(kappa / tau + dz0 @ H @ dz0, rel=1e-8)


def test_recover_step_degenerate_denominator():
    n, m = 2, 2
    P = upper(np.zeros((n, n)))
    q = np.array([1.0, 0.0])
    b = np.array([1.0, 0.0])
    # fabricated second solve pointing the denominator negative
    dx2 = np.array([5.0, 0.0])
    dz2 = np.array([5.0, 0.0])
    with pytest.raises(DegenerateDenominator):
        recover_step(np.zeros(n), np.zeros(m), dx2, dz2, 0.1, 0.1,
                     np.zeros(n), 1.0, 1.0, P, q, b)


def test_recover_slacks_hand_value():
    cone = CompositeCone([ConeSpec(NONNEG, 1)])
    cone.update_scalings(np.array([4.0]), np.array([1.0]), 4.0)  # w^2 = 4
    ds, dkappa = recover_slacks(np.array([2.0]), cone, np.array([1.0]),
                                d_kappa=3.0, kappa=2.0, tau=0.5, dtau=1.0)
    assert ds[0] == -6.0  # -d_s - H dz = -2 - 4*1
    assert dkappa == -10.0  # -(3 + 2*1)/0.5


def test_signature_counts_with_expansion():
    rng = np.random.default_rng(23)
    n = 5
    P, A, cone, _ = random_system(
        rng, n, [ConeSpec(SOC, 8), ConeSpec(SOC, 3), ConeSpec(NONNEG, 2)]
    )
    kkt = KKTSystem(P, A, cone, Settings())
    assert kkt.k_expand == 1  # only the dim-8 block is expanded
    assert kkt.order == n + cone.rows + 2
    assert kkt.expected_inertia == (n + 1, cone.rows + 1)
    kkt.factor()  # raises FactorizationFailure on any signature mismatch

    # solution still matches the dense unexpanded system
    b1 = rng.standard_normal(n)
    b2 = rng.standard_normal(cone.rows)
    dx, dz = kkt.solve(b1, b2)
    Pd = np.zeros((n, n))
    Pt = P.toarray()
    Pd = Pt + Pt.T - np.diag(np.diag(Pt))
    K0 = np.block([[Pd, A.toarray().T], [A.toarray(), -dense_H(cone)]])
    ref = np.linalg.solve(K0, np.concatenate([b1, b2]))
    assert np.allclose(np.concatenate([dx, dz]), ref, atol=1e-9)


def test_signature_mismatch_raises():
    # an indefinite (1,1) block cannot carry the expected n positive pivots
    P = upper(np.diag([1.0, -50.0]))
    A = sp.csc_matrix(np.eye(2))
    cone = CompositeCone([ConeSpec(NONNEG, 2)])
    kkt = KKTSystem(P, A, cone, Settings())
    with pytest.raises(FactorizationFailure):
        kkt.factor()
    assert issubclass(FactorizationFailure, KKTError)


def test_lower_triangle_P_rejected():
    P = sp.csc_matrix(np.array([[1.0, 0.0], [0.5, 1.0]]))
    A = sp.csc_matrix(np.eye(2))
    cone = CompositeCone([ConeSpec(NONNEG, 2)])
    with pytest.raises(PatternMismatch):
        KKTSystem(P, A, cone, Settings())


def test_allocation_count_stabilizes():
    rng = np.random.default_rng(29)
    P, A, cone, _ = random_system(
        rng, 6, [ConeSpec(NONNEG, 4), ConeSpec(SOC, 6), ConeSpec(EXP, 3)]
    )
    q = rng.standard_normal(6)
    b = rng.standard_normal(cone.rows)
    kkt = KKTSystem(P, A, cone, Settings())

    def cycle():
        kkt.refresh()
        kkt.factor()
        kkt.solve(q, b)
        kkt.solve_const(q, b)

    cycle()  # warm-up populates every workspace
    baseline = kkt.allocation_count
    for _ in range(5):
        cycle()
    assert kkt.allocation_count == baseline


def test_refresh_tracks_scaling_updates():
    rng = np.random.default_rng(31)
    P, A, cone, Pd = random_system(rng, 4, [ConeSpec(NONNEG, 3), ConeSpec(SOC, 6)],
                                   update=False)
    kkt = KKTSystem(P, A, cone, Settings())
    m = cone.rows
    s = np.concatenate([rng.uniform(0.5, 2.0, 3), rand_soc(6, rng)])
    z = np.concatenate([rng.uniform(0.5, 2.0, 3), rand_soc(6, rng)])
    cone.update_scalings(s, z, (s @ z) / cone.degree)
    kkt.refresh()
    # eliminating the two expansion rows of the raw matrix must reproduce
    # the dense [[P, A'], [A, -H]] exactly (H = D + uu' - vv' with +-1 pivots)
    K0 = unpermuted_dense(kkt, raw=True)
    M = 4 + m
    assert kkt.order - M == 2
    schur = K0[:M, :M] - K0[:M, M:] @ np.linalg.solve(K0[M:, M:], K0[M:, :M])
    expect = np.block([[Pd, A.toarray().T], [A.toarray(), -dense_H(cone)]])
    assert np.allclose(schur, expect, atol=1e-13)

    kkt.factor()
    b1 = rng.standard_normal(4)
    b2 = rng.standard_normal(m)
    dx, dz = kkt.solve(b1, b2)
    ref = np.linalg.solve(expect, np.concatenate([b1, b2]))
    assert np.allclose(np.concatenate([dx, dz]), ref, atol=1e-9)


def test_refinement_stall_detected():
    # a singular raw matrix cannot be refined: zero cone with zero A column
    P = upper(np.zeros((2, 2)))
    A = sp.csc_matrix(np.array([[1.0, 0.0]]))  # second variable unconstrained
    cone = CompositeCone([ConeSpec(ZERO, 1)])
    kkt = KKTSystem(P, A, cone, Settings(static_reg=1e-7))
    kkt.factor()
    with pytest.raises(RefinementStalled):
        kkt.solve(np.array([0.3, 1.0]), np.array([0.5]))
