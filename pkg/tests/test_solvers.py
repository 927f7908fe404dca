"""Weighted projection QP: examples, clamping equivalence, optimality."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

import truncpol.geometry as geo
from truncpol.errors import EmptySetError
from truncpol.solvers import QpProblem, solve_mode_qp
from test_geometry import random_polytope


def unit_box_poly(d):
    eye = np.eye(d)
    return geo.HPolytope(np.vstack([eye, -eye]), np.ones(2 * d))


def test_feasible_target_returned_unchanged():
    p = QpProblem(np.ones(2), np.zeros(2), unit_box_poly(2))
    assert np.array_equal(solve_mode_qp(p), np.zeros(2))


def test_axis_projection_onto_box():
    p = QpProblem(np.ones(2), np.array([2.0, 0.0]), unit_box_poly(2))
    x = solve_mode_qp(p)
    np.testing.assert_allclose(x, [1.0, 0.0], atol=1e-10)


def test_single_halfspace_closed_form():
    # target (2,2), sigma (1,2), halfspace x1+x2 <= 1:
    # stationarity gives a = mu - lam * (sigma^2 * n), activity fixes lam = 3/5
    sigma = np.array([1.0, 2.0])
    poly = geo.HPolytope(np.array([[1.0, 1.0]]), np.array([1.0]))
    p = QpProblem(1.0 / sigma**2, np.array([2.0, 2.0]), poly)
    x = solve_mode_qp(p)
    np.testing.assert_allclose(x, [1.4, -0.4], atol=1e-10)
    assert abs(x.sum() - 1.0) < 1e-10


def test_weighted_corner_projection():
    # heavy weight on x2 keeps it near the target, x1 absorbs the move
    p = QpProblem(np.array([1.0, 100.0]), np.array([2.0, 0.5]), unit_box_poly(2))
    x = solve_mode_qp(p)
    np.testing.assert_allclose(x, [1.0, 0.5], atol=1e-10)


def test_empty_polytope_raises():
    poly = geo.HPolytope(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    with pytest.raises(EmptySetError):
        solve_mode_qp(QpProblem(np.ones(1), np.zeros(1), poly))


def test_bad_problem_data_rejected():
    box = unit_box_poly(2)
    with pytest.raises(ValueError):
        QpProblem(np.array([1.0, -1.0]), np.zeros(2), box)
    with pytest.raises(ValueError):
        QpProblem(np.ones(3), np.zeros(3), box)


@settings(max_examples=40)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_interval_constraints_match_clamping(seed, d):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-2.0, 0.0, d)
    hi = lo + rng.uniform(0.2, 2.5, d)
    mu = rng.uniform(-3.0, 3.0, d)
    w = 1.0 / rng.uniform(0.1, 1.0, d) ** 2
    poly = geo.Interval(lo, hi).to_hpolytope()
    x = solve_mode_qp(QpProblem(w, mu, poly))
    np.testing.assert_allclose(x, np.clip(mu, lo, hi), atol=1e-10)


def test_random_polytopes_local_optimality():
    # projected point never beaten by feasible random perturbations
    rng = np.random.default_rng(7)
    for _ in range(30):
        d = int(rng.integers(2, 6))
        poly = random_polytope(rng, d)
        mu = rng.uniform(-2.5, 2.5, d)
        w = 1.0 / rng.uniform(0.1, 1.0, d) ** 2
        prob = QpProblem(w, mu, poly)
        x = solve_mode_qp(prob)
        assert poly.contains(x, tol=1e-9)
        f_star = prob.objective(x)
        pts = rng.uniform(-1.0, 1.0, (2000, d))
        inside = geo.contains_many(poly, pts)
        vals = ((pts[inside] - mu) ** 2 * w).sum(axis=1)
        if vals.size:
            assert vals.min() >= f_star - 1e-9


def test_matches_slsqp_reference():
    rng = np.random.default_rng(99)
    for _ in range(15):
        d = int(rng.integers(2, 5))
        poly = random_polytope(rng, d)
        mu = rng.uniform(-2.5, 2.5, d)
        w = 1.0 / rng.uniform(0.1, 1.0, d) ** 2
        prob = QpProblem(w, mu, poly)
        x = solve_mode_qp(prob)
        ref = optimize.minimize(
            prob.objective,
            geo.chebyshev_center(poly),
            jac=lambda z: 2.0 * w * (z - mu),
            constraints=[{
                "type": "ineq",
                "fun": lambda z: poly.offsets - poly.normals @ z,
                "jac": lambda z: -poly.normals,
            }],
            method="SLSQP",
            options={"maxiter": 200, "ftol": 1e-12},
        )
        assert ref.success
        assert prob.objective(x) <= prob.objective(ref.x) + 1e-7


def test_projection_is_deterministic():
    rng = np.random.default_rng(5)
    poly = random_polytope(rng, 3)
    prob = QpProblem(np.array([1.0, 4.0, 0.5]), np.array([2.0, -1.5, 3.0]), poly)
    a = solve_mode_qp(prob)
    b = solve_mode_qp(prob)
    assert np.array_equal(a, b)
