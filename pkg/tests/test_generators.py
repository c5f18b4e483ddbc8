"""Generator correctness against independent oracles.

Huber gets a scalar reduction argument (the generated QP's optimal value must
equal the direct Huber objective minimized by brute force); LASSO gets a
proximal-gradient oracle; the random families plant their own KKT points and
must solve back to them.
"""

import numpy as np
import pytest

from coniq.generators import (
    block_arrow_sdp,
    generate_huber,
    generate_lasso,
    huber_instance,
    lasso_instance,
    random_lp,
    random_qp,
    random_socp,
)
from coniq.model import NONNEG, PSD, SOC, ZERO, DimensionMismatch, Status
from coniq.solver import solve


def huber_phi(r, M=1.0):
    r = np.abs(r)
    return np.where(r <= M, r * r, 2.0 * M * r - M * M)


# ------------------------------------------------------------ huber

def test_huber_structure():
    data = generate_huber(np.ones((4, 2)), np.zeros(4), M=1.0)
    assert data.n == 2 + 3 * 4
    assert [(c.kind, c.dim) for c in data.cones] == [(ZERO, 4), (NONNEG, 8)]
    assert data.P.nnz == 4  # quadratic cost on u only


def test_huber_zero_residual():
    r = solve(generate_huber([[1.0]], [0.0]))
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal) < 1e-9


def test_huber_exact_interpolation():
    r = solve(generate_huber([[1.0]], [10.0]))
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal) < 1e-8
    assert abs(r.x[0] - 10.0) < 1e-6


def test_huber_two_point_objective_matches_scalar_oracle():
    data = generate_huber([[1.0], [1.0]], [0.0, 10.0], M=1.0)
    grid = np.linspace(-2.0, 12.0, 200001)
    oracle = np.min(huber_phi(grid) + huber_phi(grid - 10.0))
    r = solve(data)
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal - oracle) <= 1e-6 * max(1.0, oracle)


def test_huber_random_objective_matches_penalty_oracle():
    data = huber_instance(m=12, n=4, seed=7)
    r = solve(data)
    assert r.status is Status.SOLVED
    # evaluate the Huber objective directly at the recovered x
    A = np.zeros((12, 4))
    # rebuild A, b from the Zero rows: A x - u - r + s = b
    Az = data.A[:12].toarray()
    A = Az[:, :4]
    b = data.b[:12]
    direct = float(np.sum(huber_phi(A @ r.x[:4] - b)))
    assert abs(r.obj_primal - direct) <= 1e-6 * (1.0 + abs(direct))


def test_huber_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        generate_huber(np.ones((3, 2)), np.zeros(4))


# ------------------------------------------------------------ lasso

def ista_oracle(A, b, lam, iters=40000):
    """Proximal gradient on ||Ax-b||^2 + lam*||x||_1 (no 1/2 factor)."""
    L = 2.0 * np.linalg.norm(A, 2) ** 2
    t = 1.0 / L
    x = np.zeros(A.shape[1])
    for _ in range(iters):
        g = 2.0 * A.T @ (A @ x - b)
        x = x - t * g
        x = np.sign(x) * np.maximum(np.abs(x) - t * lam, 0.0)
    return float(np.sum((A @ x - b) ** 2) + lam * np.sum(np.abs(x)))


def test_lasso_structure():
    data = generate_lasso(np.ones((3, 2)), np.zeros(3), lam=0.5)
    assert data.n == 3 + 2 * 2
    assert [(c.kind, c.dim) for c in data.cones] == [(ZERO, 3), (NONNEG, 4)]


def test_lasso_zero_penalty_interpolates():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    b = rng.standard_normal(3)
    r = solve(generate_lasso(A, b, lam=0.0))
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal) < 1e-8
    assert np.allclose(r.x[3:6], np.linalg.solve(A, b), atol=1e-5)


def test_lasso_zero_data():
    r = solve(generate_lasso(np.ones((2, 2)), np.zeros(2)))
    assert abs(r.obj_primal) < 1e-9


def test_lasso_objective_matches_prox_oracle():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((5, 3))
    b = rng.standard_normal(5)
    lam = float(np.abs(A.T @ b).max())  # default rule, pinned explicitly
    data = generate_lasso(A, b)
    oracle = ista_oracle(A, b, lam)
    r = solve(data)
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal - oracle) <= 1e-5 * (1.0 + abs(oracle))


def test_lasso_default_penalty_recorded():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((4, 2))
    b = rng.standard_normal(4)
    data = generate_lasso(A, b)
    lam = float(np.abs(A.T @ b).max())
    assert data.q[4 + 2:].max() == pytest.approx(lam)


# --------------------------------------------------- planted families

@pytest.mark.parametrize("factory,kwargs", [
    (random_lp, {"m": 12, "n": 5}),
    (random_qp, {"m": 10, "n": 6}),
    (random_socp, {"n": 6}),
])
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_planted_optimum_is_recovered(factory, kwargs, seed):
    data = factory(seed=seed, **kwargs)
    expected = data.metadata["expected_objective"]
    r = solve(data)
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal - expected) <= 1e-7 * (1.0 + abs(expected))


def test_generators_deterministic():
    for factory in (lambda: random_qp(seed=4), lambda: huber_instance(seed=4),
                    lambda: lasso_instance(seed=4), lambda: random_socp(seed=4),
                    lambda: block_arrow_sdp(12, 3, seed=4)):
        assert factory() == factory()
    assert random_qp(seed=4) != random_qp(seed=5)


def test_random_socp_has_second_order_block():
    data = random_socp(n=5, seed=0)
    assert any(c.kind == SOC for c in data.cones)


def test_lp_needs_enough_rows():
    with pytest.raises(DimensionMismatch):
        random_lp(m=3, n=5)


# ------------------------------------------------------------ sdp

def test_block_arrow_metadata_matches_eigenvalue():
    data = block_arrow_sdp(12, 3, seed=2)
    assert data.cones[0].kind == PSD and data.cones[0].dim == 12
    r = solve(data)
    assert r.status is Status.SOLVED
    assert abs(r.obj_primal - data.metadata["expected_objective"]) < 1e-7


def test_block_arrow_decomposition_equivalence():
    import coniq
    data = block_arrow_sdp(18, 3, seed=6)
    on = coniq.solve(data, chordal=True)
    off = coniq.solve(data, chordal=False)
    expected = data.metadata["expected_objective"]
    for r in (on, off):
        assert abs(r.obj_primal - expected) <= 1e-6 * (1.0 + abs(expected))
    assert "chordal" in on.info


def test_block_arrow_rejects_fat_arm():
    with pytest.raises(DimensionMismatch):
        block_arrow_sdp(5, 5, seed=0)
