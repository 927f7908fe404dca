"""Diagonal-metric quadratic projection onto a polytope.

The mode of a truncated diagonal Gaussian is the point of the constraint
polytope closest to the untruncated mean in the metric weighted by inverse
variances:

    minimize sum_i w_i (x_i - target_i)^2   s.t.  A x <= b,  w_i > 0.

Solved with a primal active-set method.  With a diagonal Hessian the
equality-constrained subproblem has the closed form

    x = target - D^{-1} A_W^T lam,   (A_W D^{-1} A_W^T) lam = A_W target - b_W,

so each iteration is one small dense solve.  Blocking constraints are added
one at a time (ties broken by lowest row index), constraints with negative
multipliers are dropped (most negative first, lowest index on ties), and
feasibility of the iterate is maintained throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySetError, NumericError, UnboundedSetError
from .geometry import HPolytope, chebyshev_ball
from .lp import LpStatus, lp_solve


@dataclass(frozen=True)
class QpProblem:
    """Projection problem data; weights are the diagonal metric entries."""

    weights: np.ndarray
    target: np.ndarray
    constraints: HPolytope

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        t = np.asarray(self.target, dtype=float)
        if w.shape != t.shape or w.ndim != 1:
            raise ValueError("weights and target must be matching vectors")
        if (w <= 0).any():
            raise ValueError("weights must be strictly positive")
        if self.constraints.dim != t.shape[0]:
            raise ValueError("constraint dimension mismatch")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "target", t)

    def objective(self, x) -> float:
        dx = np.asarray(x, float) - self.target
        return float((self.weights * dx * dx).sum())


def _eqp_solve(problem: QpProblem, working: list[int]):
    """Minimizer with the working-set rows forced to equality, and multipliers."""
    if not working:
        return problem.target.copy(), np.empty(0)
    A_w = problem.constraints.normals[working]
    b_w = problem.constraints.offsets[working]
    inv_d = 1.0 / (2.0 * problem.weights)  # D = 2 diag(w) is the Hessian
    M = (A_w * inv_d) @ A_w.T
    rhs = A_w @ problem.target - b_w
    lam, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    x = problem.target - inv_d * (A_w.T @ lam)
    return x, lam


def solve_mode_qp(problem: QpProblem, tol: float = 1e-10) -> np.ndarray:
    """Weighted projection of target onto the constraint polytope.

    Returns target itself when it is already feasible.  Otherwise runs the
    active-set iteration from the Chebyshev center, for at most 50 times the
    number of halfspaces, and verifies the KKT conditions at the result.
    """
    poly = problem.constraints
    if poly.contains(problem.target, tol=tol):
        return problem.target.copy()
    try:
        x, _ = chebyshev_ball(poly)
    except UnboundedSetError:
        # unbounded polytope: any feasible point will do as a start
        res = lp_solve(np.zeros(poly.dim), poly.normals, poly.offsets)
        if res.status is not LpStatus.OPTIMAL:
            raise EmptySetError("constraint polytope has no feasible point")
        x = res.x
    working: list[int] = []
    m = poly.n_halfspaces
    max_iters = 50 * m
    for _ in range(max_iters):
        x_star, lam = _eqp_solve(problem, working)
        step = x_star - x
        if np.abs(step).max() <= tol:
            # at the working-set minimizer; check multiplier signs
            if lam.size and lam.min() < -tol:
                order = np.lexsort((working, lam))  # most negative first, low index ties
                working.pop(int(order[0]))
                continue
            return _kkt_check(problem, x_star, working, lam, tol)
        # longest feasible step toward the subproblem minimizer
        rates = poly.normals @ step
        slack = poly.offsets - poly.normals @ x
        ratios = np.full(m, np.inf)
        movable = rates > 1e-13
        if working:
            movable[working] = False
        ratios[movable] = np.maximum(slack[movable], 0.0) / rates[movable]
        j_min = int(np.argmin(ratios))  # argmin takes the lowest index on ties
        if ratios[j_min] < 1.0:
            x = x + ratios[j_min] * step
            working.append(j_min)
        else:
            x = x_star
    raise NumericError("active-set projection exceeded its iteration budget")


def _kkt_check(problem: QpProblem, x, working, lam, tol):
    poly = problem.constraints
    slack = poly.offsets - poly.normals @ x
    feas = float(min(0.0, slack.min()))
    grad = 2.0 * problem.weights * (x - problem.target)
    if working:
        grad = grad + poly.normals[working].T @ lam
    stat = float(np.abs(grad).max())
    scale = 1.0 + float(np.abs(problem.weights * problem.target).max())
    if -feas > 1e-9 or stat > 1e-8 * scale:
        raise NumericError("projection KKT check failed",
                           residual=max(-feas, stat))
    # clip boundary rounding so the result is feasible as returned
    if feas < 0.0:
        j = int(np.argmin(slack))
        a = poly.normals[j]
        x = x + (feas / float(a @ a)) * a
    return x
