import math

import numpy as np
import pytest
from oracles import random_polytope, triangle_steiner

from ljsaa.ellipsoid import (
    CONVERGED,
    Ellipsoid,
    contains_point,
    max_volume_inscribed_ellipsoid,
    verify_inscribed,
)
from ljsaa.errors import DegenerateError
from ljsaa.linsolve import enumerate_vertices
from ljsaa.polyhedron import Polyhedron


def mvie(P, **kw):
    E, rep = max_volume_inscribed_ellipsoid(P, **kw)
    assert rep.status == CONVERGED
    assert rep.max_residual <= 1e-8
    assert rep.grad_norm <= 1e-7
    return E


def test_unit_box():
    E = mvie(Polyhedron.box([-1, -1], [1, 1]))
    assert np.allclose(E.S, np.eye(2), atol=1e-6)
    assert np.allclose(E.center, 0, atol=1e-6)


def test_scaled_box():
    E = mvie(Polyhedron.box([0, 0], [2, 4]))
    assert np.allclose(E.center, [1, 2], atol=1e-6)
    assert np.allclose(E.S, np.diag([1, 2]), atol=1e-6)


def test_triangle_is_steiner_inellipse():
    P = Polyhedron([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])
    E = mvie(P)
    c, area = triangle_steiner((0, 0), (1, 0), (0, 1))
    assert np.allclose(E.center, c, atol=1e-4)
    assert math.pi * E.volume_factor == pytest.approx(area, abs=1e-4)
    # the inellipse touches each side at its midpoint
    for a, g, mid in (([-1, 0], 0, (0, 0.5)), ([0, -1], 0, (0.5, 0)), ([1, 1], 1, (0.5, 0.5))):
        a = np.asarray(a, float)
        u = E.L.T @ a / np.linalg.norm(E.L.T @ a)
        touch = E.center + E.S @ np.linalg.solve(E.S, E.L @ u)
        assert np.allclose(touch, mid, atol=1e-4)


def test_shape_invariants():
    rng = np.random.default_rng(0)
    E = mvie(Polyhedron(*random_polytope(rng, 3)))
    assert np.allclose(E.S, E.S.T, atol=1e-10)
    assert np.all(np.linalg.eigvalsh(E.S) > 0)
    assert E.logdet == pytest.approx(np.linalg.slogdet(E.S)[1], abs=1e-8)


def test_verify_inscribed_examples():
    ball = Ellipsoid.from_shape([0, 0], np.eye(2))
    assert np.all(verify_inscribed(ball, Polyhedron.box([-1, -1], [1, 1])) <= 1e-12)
    res = verify_inscribed(ball, Polyhedron.box([-0.5, -0.5], [0.5, 0.5]))
    assert np.allclose(res, 0.5)


def test_contains_point_examples():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((3, 3))
    E = Ellipsoid.from_shape(rng.standard_normal(3), A @ A.T + np.eye(3))
    assert contains_point(E, E.center)
    u = rng.standard_normal(3)
    u /= np.linalg.norm(u)
    assert contains_point(E, E.center + E.S @ u)
    assert not contains_point(E, E.center + 1.01 * E.S @ u)


def test_containment_on_random_polytopes():
    rng = np.random.default_rng(2)
    for _ in range(20):
        P = Polyhedron(*random_polytope(rng, 3))
        E = mvie(P)
        assert np.all(verify_inscribed(E, P) <= 1e-8)


def test_degenerate_slab_is_rejected():
    P = Polyhedron.box([0, 0], [1, 0])
    with pytest.raises(DegenerateError):
        max_volume_inscribed_ellipsoid(P)


def test_restarts_agree():
    rng = np.random.default_rng(3)
    for _ in range(10):
        d = int(rng.integers(2, 5))
        P = Polyhedron(*random_polytope(rng, d))
        a = mvie(P, seed=1)
        b = mvie(P, seed=2)
        assert np.allclose(a.center, b.center, atol=1e-5)
        assert np.allclose(a.S, b.S, atol=1e-5)


def test_john_factor():
    rng = np.random.default_rng(4)
    for d in (2, 3, 4):
        P = Polyhedron(*random_polytope(rng, d))
        E = mvie(P)
        for v in enumerate_vertices(P):
            assert E.norm_of(v) <= d + 1e-6
            assert contains_point(E, v, scale=d)


def test_monotone_under_extra_cut():
    rng = np.random.default_rng(5)
    for _ in range(10):
        P = Polyhedron(*random_polytope(rng, 3))
        E = mvie(P)
        a = rng.standard_normal(3)
        a /= np.linalg.norm(a)
        Q = P.intersect(a, [float(a @ E.center) + 0.3])
        assert mvie(Q).logdet <= E.logdet + 1e-9


def test_affine_equivariance():
    rng = np.random.default_rng(6)
    for _ in range(10):
        P = Polyhedron(*random_polytope(rng, 2))
        M = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        t = rng.standard_normal(2)
        E = mvie(P)
        F = mvie(P.affine_image(M, t))
        assert np.allclose(F.center, M @ E.center + t, atol=1e-6)
        # shapes compare through S^2, which is independent of the factor's rotation
        assert np.allclose(F.S @ F.S, M @ E.S @ E.S @ M.T, atol=1e-6)


def test_deterministic():
    rng = np.random.default_rng(7)
    P = Polyhedron(*random_polytope(rng, 3))
    a, b = mvie(P), mvie(P)
    assert a.S.tobytes() == b.S.tobytes() and a.center.tobytes() == b.center.tobytes()


def test_matches_conic_solver():
    cp = pytest.importorskip("cvxpy")
    rng = np.random.default_rng(8)
    for _ in range(5):
        G, g = random_polytope(rng, 2, box=1.5)
        B = cp.Variable((2, 2), PSD=True)
        c = cp.Variable(2)
        cons = [cp.norm(B @ G[i]) + G[i] @ c <= g[i] for i in range(len(g))]
        prob = cp.Problem(cp.Maximize(cp.log_det(B)), cons)
        # default conic tolerances are looser than the comparison
        prob.solve(solver="CLARABEL", tol_gap_abs=1e-11, tol_gap_rel=1e-11, tol_feas=1e-11)
        assert prob.status in ("optimal", "optimal_inaccurate")
        E = mvie(Polyhedron(G, g))
        assert E.logdet == pytest.approx(prob.value, abs=1e-7)
        assert np.allclose(E.center, c.value, atol=1e-5)
