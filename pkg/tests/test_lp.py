"""Simplex LP kernel against scipy.optimize.linprog as an independent oracle."""

import numpy as np
import pytest
from scipy.optimize import linprog

from truncpol import lp


def random_bounded_lp(rng, d):
    """Random LP with box rows so the feasible set is bounded and nonempty."""
    m = int(rng.integers(1, 3 * d + 1))
    A = rng.standard_normal((m, d))
    x0 = rng.uniform(-1, 1, d)
    b = A @ x0 + rng.uniform(0.05, 1.0, m)
    eye = np.eye(d)
    A = np.vstack([A, eye, -eye])
    b = np.concatenate([b, np.full(2 * d, 2.0)])
    c = rng.standard_normal(d)
    return c, A, b


def test_simplex_matches_scipy_on_random_lps():
    rng = np.random.default_rng(7)
    for _ in range(60):
        d = int(rng.integers(1, 7))
        c, A, b = random_bounded_lp(rng, d)
        res = lp.lp_solve(c, A, b)
        ref = linprog(c, A_ub=A, b_ub=b, bounds=(None, None), method="highs")
        assert res.status is lp.LpStatus.OPTIMAL
        assert ref.status == 0
        assert res.value == pytest.approx(ref.fun, abs=1e-7)
        assert (A @ res.x <= b + 1e-8).all()


def test_simplex_maximize_direction():
    # max x1 + x2 over the unit simplex equals 1
    A = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    b = np.array([0.0, 0.0, 1.0])
    res = lp.lp_solve(np.array([1.0, 1.0]), A, b, maximize=True)
    assert res.status is lp.LpStatus.OPTIMAL
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_simplex_negative_rhs_needs_phase1():
    # x >= 1, x <= 3, minimize x -> 1; the x >= 1 row has negative rhs
    A = np.array([[-1.0], [1.0]])
    b = np.array([-1.0, 3.0])
    res = lp.lp_solve(np.array([1.0]), A, b)
    assert res.status is lp.LpStatus.OPTIMAL
    assert res.value == pytest.approx(1.0, abs=1e-9)


def test_simplex_detects_infeasible():
    # x <= -1 and x >= 1
    A = np.array([[1.0], [-1.0]])
    b = np.array([-1.0, -1.0])
    res = lp.lp_solve(np.array([1.0]), A, b)
    assert res.status is lp.LpStatus.INFEASIBLE


def test_simplex_detects_unbounded():
    # minimize -x subject to x >= 0
    A = np.array([[-1.0]])
    b = np.array([0.0])
    res = lp.lp_solve(np.array([-1.0]), A, b)
    assert res.status is lp.LpStatus.UNBOUNDED


def test_simplex_degenerate_overlapping_rows():
    # duplicated and redundant rows force degenerate pivots; Bland terminates
    A = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0],
                  [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([1.0, 1.0, 1.0, 2.0, 0.0, 0.0])
    res = lp.lp_solve(np.array([-1.0, -1.0]), A, b)
    assert res.status is lp.LpStatus.OPTIMAL
    assert res.value == pytest.approx(-2.0, abs=1e-9)


def test_simplex_equality_like_rows():
    # x1 + x2 <= 1 and x1 + x2 >= 1 pin the optimum to the diagonal face
    A = np.array([[1.0, 1.0], [-1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([1.0, -1.0, 0.0, 0.0])
    res = lp.lp_solve(np.array([1.0, 2.0]), A, b)
    assert res.status is lp.LpStatus.OPTIMAL
    assert res.value == pytest.approx(1.0, abs=1e-9)  # all mass on x1
