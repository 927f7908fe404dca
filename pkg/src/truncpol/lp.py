"""Dense linear programming and barrier kernels.

Self-contained two-phase tableau simplex over inequality systems ``A x <= b``
with free variables, used for support functions, Chebyshev centers and
zonotope containment.  Bland's anti-cycling rule throughout, so every solve
terminates.  Problem sizes in this package are tiny (tens of rows), which a
dense tableau handles comfortably and deterministically.

Also hosts the log-barrier Newton solver for the largest inscribed
axis-aligned box (maximum geometric mean of side lengths), shared by the
geometry module.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import nnls

from .errors import DegenerateSetError, NumericError, UnboundedSetError

_TOL = 1e-9


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpResult:
    status: LpStatus
    x: np.ndarray | None
    value: float


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _simplex_iterate(T, basis, cost, allowed, max_iters):
    """Run simplex pivots on the tableau until optimal or unbounded.

    T is the (m, N+1) tableau with nonnegative rhs column, basis the list of
    basic column indices, cost the length-N objective (minimized), allowed a
    mask of columns permitted to enter.  Entering variable: lowest-index
    column with negative reduced cost; leaving variable: lowest basis index
    among minimum-ratio rows (Bland's rule).
    """
    m = T.shape[0]
    for _ in range(max_iters):
        reduced = cost - cost[basis] @ T[:, :-1]
        candidates = np.flatnonzero(allowed & (reduced < -_TOL))
        if candidates.size == 0:
            return LpStatus.OPTIMAL
        enter = int(candidates[0])
        col = T[:, enter]
        positive = col > _TOL
        if not positive.any():
            return LpStatus.UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[positive] = T[positive, -1] / col[positive]
        rmin = ratios.min()
        ties = np.flatnonzero(ratios <= rmin + 1e-12 * (1.0 + abs(rmin)))
        leave = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, leave, enter)
        basis[leave] = enter
    raise NumericError("simplex iteration limit exceeded", residual=float("nan"))


def lp_solve(c, A, b, *, maximize: bool = False) -> LpResult:
    """Solve min (or max) c^T x subject to A x <= b over free x.

    Returns an LpResult; status INFEASIBLE / UNBOUNDED instead of raising, so
    callers can map outcomes onto their own error taxonomy.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    m, n = A.shape
    if b.shape[0] != m or c.shape[0] != n:
        raise ValueError("inconsistent LP dimensions")
    obj = -c if maximize else c.copy()

    # Standard form over [x+, x-, slack, artificial]; rows with negative rhs
    # are negated, which flips their slack sign and requires an artificial.
    neg = b < 0
    n_art = int(neg.sum())
    N = 2 * n + m + n_art
    T = np.zeros((m, N + 1))
    sign = np.where(neg, -1.0, 1.0)
    T[:, :n] = sign[:, None] * A
    T[:, n : 2 * n] = -sign[:, None] * A
    T[np.arange(m), 2 * n + np.arange(m)] = sign
    art_cols = {}
    k = 2 * n + m
    basis = []
    for i in range(m):
        if neg[i]:
            T[i, k] = 1.0
            art_cols[i] = k
            basis.append(k)
            k += 1
        else:
            basis.append(2 * n + i)
    T[:, -1] = np.abs(b)

    max_iters = 2000 + 50 * (m + n)
    allowed = np.ones(N, dtype=bool)

    if n_art > 0:
        cost1 = np.zeros(N)
        cost1[2 * n + m :] = 1.0
        status = _simplex_iterate(T, basis, cost1, allowed, max_iters)
        if status is not LpStatus.OPTIMAL:
            raise NumericError("phase-1 simplex did not reach optimality")
        phase1_value = cost1[basis] @ T[:, -1]
        if phase1_value > 1e-7 * (1.0 + np.abs(b).max()):
            return LpResult(LpStatus.INFEASIBLE, None, float("nan"))
        # Pivot lingering artificials out of the basis; rows where that is
        # impossible are redundant and dropped.
        drop_rows = []
        for i in range(m):
            if basis[i] >= 2 * n + m:
                entering = np.flatnonzero(np.abs(T[i, : 2 * n + m]) > _TOL)
                if entering.size > 0:
                    _pivot(T, i, int(entering[0]))
                    basis[i] = int(entering[0])
                else:
                    drop_rows.append(i)
        if drop_rows:
            keep = [i for i in range(m) if i not in drop_rows]
            T = T[keep]
            basis = [basis[i] for i in keep]
        T = np.hstack([T[:, : 2 * n + m], T[:, -1:]])
        allowed = np.ones(2 * n + m, dtype=bool)
        N = 2 * n + m

    cost2 = np.zeros(N)
    cost2[:n] = obj
    cost2[n : 2 * n] = -obj
    status = _simplex_iterate(T, basis, cost2, allowed, max_iters)
    if status is LpStatus.UNBOUNDED:
        return LpResult(LpStatus.UNBOUNDED, None, float("-inf") if not maximize else float("inf"))
    x = np.zeros(n)
    for i, j in enumerate(basis):
        if j < n:
            x[j] += T[i, -1]
        elif j < 2 * n:
            x[j - n] -= T[i, -1]
    return LpResult(LpStatus.OPTIMAL, x, float(c @ x))


def max_geomean_box(A, b, center0, radius0, *, kkt_tol: float = 1e-8,
                    max_newton: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Largest axis-aligned box inside {x : A x <= b} by geometric mean of sides.

    Maximizes sum_i log r_i over box center c and half-widths r > 0 subject to
    A c + |A| r <= b, via a log-barrier path (factor-10 reduction) with damped
    Newton steps.  (center0, radius0) must give a strictly feasible start,
    e.g. a Chebyshev ball shrunk to fit the box corners.

    Returns (center, halfwidths).  Raises NumericError with the final KKT
    residual if the iteration budget is exhausted before residual <= kkt_tol.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, d = A.shape
    G = np.hstack([A, np.abs(A)])

    z = np.concatenate([np.asarray(center0, float), np.asarray(radius0, float)])
    s = b - G @ z
    if (s <= 0).any() or (z[d:] <= 0).any():
        raise DegenerateSetError("inscribed-box solver needs a strictly feasible start")

    # Normalized barrier: minimize -sum log r + eta * (-sum log s) with eta
    # shrinking 1 -> kkt_tol / 10 by factors of 10.  Dividing the classic
    # t-scaled objective by t keeps function values O(d log r), so Armijo
    # comparisons stay measurable at late stages instead of drowning in the
    # float noise of values ~ t.
    eta = 1.0
    eta_final = kkt_tol / 10.0
    newton_used = 0
    while True:
        for _ in range(50):
            if newton_used >= max_newton:
                residual = _box_kkt_residual(G, b, z, d, eta)
                raise NumericError("inscribed-box Newton budget exhausted", residual=residual)
            newton_used += 1
            r = z[d:]
            s = b - G @ z
            inv_s = 1.0 / s
            grad = eta * (G.T @ inv_s)
            grad[d:] -= 1.0 / r
            H = eta * (G * inv_s[:, None] ** 2).T @ G
            H[np.arange(d, 2 * d), np.arange(d, 2 * d)] += 1.0 / r**2
            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, -grad, rcond=None)[0]
            decrement = float(-grad @ step)
            # Backtrack to stay strictly feasible with sufficient decrease.
            alpha = 1.0
            f0 = _box_barrier_value(G, b, z, d, eta)
            moved = False
            for _ in range(60):
                z_new = z + alpha * step
                s_new = b - G @ z_new
                if (s_new > 0).all() and (z_new[d:] > 0).all():
                    if _box_barrier_value(G, b, z_new, d, eta) <= f0 - 0.25 * alpha * decrement:
                        moved = True
                        break
                alpha *= 0.5
            if moved:
                z = z_new
            if z[d:].max() > 1e8:
                raise UnboundedSetError("inscribed box grows without bound")
            # Stop the stage once the decrement hits the noise floor or the
            # line search can no longer measure progress.  Intermediate
            # stages only need to track the central path loosely.
            stage_tol = 1e-13 * (1.0 + abs(f0)) if eta <= eta_final else 1e-8
            if decrement < stage_tol or not moved:
                break
        if eta <= eta_final:
            residual = _box_kkt_residual(G, b, z, d, eta)
            if residual > kkt_tol:
                raise NumericError("inscribed-box solve did not converge", residual=residual)
            return z[:d].copy(), z[d:].copy()
        eta *= 0.1


def _box_barrier_value(G, b, z, d, eta):
    s = b - G @ z
    if (s <= 0).any() or (z[d:] <= 0).any():
        return np.inf
    return float(-np.log(z[d:]).sum() - eta * np.log(s).sum())


def _box_kkt_residual(G, b, z, d, eta):
    """KKT residual with refitted multipliers on the strongly active rows.

    The raw barrier multipliers eta / s inherit the float noise of the tiny
    active slacks, which floors the measurable stationarity residual around
    1e-7.  Inactive rows keep the (precise) barrier multiplier while
    strongly active ones are refit by least squares, giving a
    well-conditioned certificate; their complementarity products stay at
    the eta gap by construction.
    """
    s = b - G @ z
    grad_f0 = np.zeros(2 * d)
    grad_f0[d:] = -1.0 / z[d:]
    lam = eta / s
    scale = 1.0 + np.abs(b)
    active = s <= 1e-6 * scale
    if active.any():
        rhs = -(grad_f0 + G[~active].T @ lam[~active])
        # joint nonnegative fit of stationarity and complementarity: with a
        # degenerate active set, a clamped least-squares fit can park weight
        # on a near-active row whose slack then dominates the residual
        M = np.vstack([G[active].T, np.diag(s[active])])
        target = np.concatenate([rhs, np.zeros(int(active.sum()))])
        lam[active] = nnls(M, target)[0]
    stat = float(np.abs(grad_f0 + G.T @ lam).max())
    comp = float(np.abs(lam * s).max())
    feas = float(max(0.0, -s.min()))
    return max(stat, comp, feas)
