import numpy as np
import pytest
from hypothesis import given, strategies as st

from pogd_ilc.linalg import (
    BoxSet,
    BoxValidationError,
    ProjectionError,
    SpdMatrix,
    SpdValidationError,
    solve_box_qp,
    spectral_norm,
    weighted_mat_norm,
    weighted_project,
    weighted_vec_norm,
)

from conftest import make_rng, random_box, random_spd


def grid_project_2d(x, lower, upper, w_mat, points=2001):
    """Brute-force weighted projection oracle: argmin over a dense grid."""
    g0 = np.linspace(lower[0], upper[0], points)
    g1 = np.linspace(lower[1], upper[1], points)
    z0, z1 = np.meshgrid(g0, g1, indexing="ij")
    d0 = z0 - x[0]
    d1 = z1 - x[1]
    dist = (w_mat[0, 0] * d0 * d0 + 2.0 * w_mat[0, 1] * d0 * d1
            + w_mat[1, 1] * d1 * d1)
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    return np.array([g0[i], g1[j]])


# --- SpdMatrix -------------------------------------------------------------

def test_spd_factorizations_consistent(rng):
    p = SpdMatrix(random_spd(rng, 6, cond=50.0))
    np.testing.assert_allclose(p.sqrt @ p.sqrt, p.mat, atol=1e-10)
    np.testing.assert_allclose(p.inv_sqrt @ p.sqrt, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(p.inv @ p.mat, np.eye(6), atol=1e-9)
    np.testing.assert_allclose(p.solve(p.mat[:, 0]), np.eye(6)[:, 0], atol=1e-9)
    assert p.cond == pytest.approx(50.0, rel=1e-8)


def test_spd_rejects_asymmetric_and_indefinite():
    with pytest.raises(SpdValidationError):
        SpdMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(SpdValidationError):
        SpdMatrix(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_spd_identity_and_diagonal():
    assert np.array_equal(SpdMatrix.identity(3).mat, np.eye(3))
    d = SpdMatrix.diagonal(np.array([4.0, 1.0]))
    np.testing.assert_allclose(d.sqrt, np.diag([2.0, 1.0]))


# --- norms -----------------------------------------------------------------

def test_weighted_vec_norm_hand_case():
    p = SpdMatrix.diagonal(np.array([4.0, 1.0]))
    # ||(3, 4)||_P = sqrt(4*9 + 16)
    assert weighted_vec_norm(np.array([3.0, 4.0]), p) == pytest.approx(
        np.sqrt(52.0), rel=1e-12)


def test_weighted_mat_norm_hand_case():
    # P = diag(4, 1), A = [[0, 1], [0, 0]]: P^(1/2) A P^(-1/2) = [[0, 2], [0, 0]]
    p = SpdMatrix.diagonal(np.array([4.0, 1.0]))
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert weighted_mat_norm(a, p) == pytest.approx(2.0, rel=1e-12)


def test_weighted_mat_norm_identity_reduces_to_spectral(rng):
    a = rng.standard_normal((5, 5))
    p = SpdMatrix.identity(5)
    assert weighted_mat_norm(a, p) == pytest.approx(spectral_norm(a), rel=1e-12)
    assert spectral_norm(a) == pytest.approx(np.linalg.norm(a, 2), rel=1e-12)


def test_weighted_mat_norm_submultiplicative_on_vectors(rng):
    p = SpdMatrix(random_spd(rng, 4, cond=30.0))
    a = rng.standard_normal((4, 4))
    for _ in range(20):
        x = rng.standard_normal(4)
        assert weighted_vec_norm(a @ x, p) <= (
            weighted_mat_norm(a, p) * weighted_vec_norm(x, p) * (1 + 1e-12))


# --- BoxSet ----------------------------------------------------------------

def test_box_validation():
    with pytest.raises(BoxValidationError):
        BoxSet(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    box = BoxSet.scalar_bounds(0.0, 1.0, 3)
    assert box.is_bounded and not box.is_unconstrained
    assert BoxSet.unbounded(3).is_unconstrained


def test_box_clamp_and_contains():
    box = BoxSet.scalar_bounds(-1.0, 1.0, 2)
    np.testing.assert_allclose(box.clamp(np.array([2.0, -3.0])),
                               np.array([1.0, -1.0]))
    assert box.contains(np.array([0.5, -0.5]))
    assert not box.contains(np.array([1.5, 0.0]))


# --- weighted projection ---------------------------------------------------

def test_identity_weight_projection_is_clamp(rng):
    box = BoxSet.scalar_bounds(-1.0, 1.0, 4)
    w = SpdMatrix.identity(4)
    for _ in range(10):
        x = rng.uniform(-3.0, 3.0, 4)
        np.testing.assert_allclose(weighted_project(x, box, w), box.clamp(x),
                                   atol=1e-10)


def test_projection_matches_grid_oracle(rng):
    for _ in range(10):
        lower, upper = random_box(rng, 2)
        w_mat = random_spd(rng, 2, cond=rng.uniform(1.5, 4.0))
        box = BoxSet(lower, upper)
        x = rng.uniform(-2.0, 2.0, 2)
        got = weighted_project(x, box, SpdMatrix(w_mat))
        want = grid_project_2d(x, lower, upper, w_mat)
        assert np.max(np.abs(got - want)) < 1e-3


def test_projection_interior_point_fixed():
    box = BoxSet.scalar_bounds(0.0, 10.0, 3)
    w = SpdMatrix(random_spd(make_rng(0), 3, cond=5.0))
    x = np.array([5.0, 5.0, 5.0])
    np.testing.assert_allclose(weighted_project(x, box, w), x, atol=1e-9)


@given(st.integers(0, 10_000))
def test_projection_nonexpansive_and_idempotent(seed):
    rng = make_rng(seed)
    n = int(rng.integers(1, 6))
    lower, upper = random_box(rng, n)
    box = BoxSet(lower, upper)
    w = SpdMatrix(random_spd(rng, n, cond=float(rng.uniform(1.0, 100.0))))
    x = rng.uniform(-3.0, 3.0, n)
    y = rng.uniform(-3.0, 3.0, n)
    px = weighted_project(x, box, w)
    py = weighted_project(y, box, w)
    assert box.contains(px, tol=1e-9)
    lhs = weighted_vec_norm(px - py, w)
    rhs = weighted_vec_norm(x - y, w)
    assert lhs <= rhs + 1e-8 * max(1.0, rhs)
    ppx = weighted_project(px, box, w)
    assert weighted_vec_norm(ppx - px, w) <= 1e-7 * max(1.0, weighted_vec_norm(px, w))


def test_unbounded_projection_is_identity(rng):
    w = SpdMatrix(random_spd(rng, 3))
    x = rng.standard_normal(3)
    np.testing.assert_allclose(weighted_project(x, BoxSet.unbounded(3), w), x)


# --- box QP ----------------------------------------------------------------

def test_box_qp_kkt_conditions(rng):
    for _ in range(10):
        n = int(rng.integers(2, 6))
        hess = random_spd(rng, n, cond=20.0)
        lin = rng.standard_normal(n)
        lower, upper = random_box(rng, n)
        box = BoxSet(lower, upper)
        u = solve_box_qp(hess, lin, box, tol=1e-11, max_iter=100_000)
        grad = hess @ u - lin
        at_lower = u <= lower + 1e-8
        at_upper = u >= upper - 1e-8
        free = ~(at_lower | at_upper)
        assert np.all(np.abs(grad[free]) < 1e-6)
        assert np.all(grad[at_lower] > -1e-6)
        assert np.all(grad[at_upper] < 1e-6)


def test_box_qp_interior_matches_direct_solve(rng):
    hess = random_spd(rng, 4, cond=8.0)
    x_free = np.linalg.solve(hess, np.full(4, 0.01))
    box = BoxSet.scalar_bounds(-10.0, 10.0, 4)
    u = solve_box_qp(hess, np.full(4, 0.01), box, tol=1e-12, max_iter=100_000)
    np.testing.assert_allclose(u, x_free, atol=1e-8)


def test_box_qp_iteration_cap_raises():
    # max_iter=0 disables both the active-set passes and the gradient loop,
    # so any start away from the optimum must hit the cap error
    hess = np.array([[1.0, 0.0], [0.0, 100.0]])
    box = BoxSet.scalar_bounds(-1.0, 1.0, 2)
    with pytest.raises(ProjectionError):
        solve_box_qp(hess, np.array([0.5, 50.0]), box, tol=1e-16, max_iter=0,
                     x0=np.array([-1.0, -1.0]))
