"""Constraint-set geometry: intervals, halfspace polytopes, zonotopes, unions.

All sets are immutable after construction and live in R^d for small d.
Operations needing linear programming (polytope support, Chebyshev centers,
zonotope containment) go through the dense simplex in ``lp``; zonotope
support is closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import DegenerateSetError, EmptySetError, UnboundedSetError


def _as_vector(x, name="x") -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class Interval:
    """Axis-aligned box {x : lower <= x <= upper}, strict widths per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower")
        upper = _as_vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise ValueError("lower/upper shape mismatch")
        if not (lower < upper).all():
            raise DegenerateSetError("interval needs lower < upper in every dimension")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def halfwidth(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _as_vector(x)
        return bool((x >= self.lower - tol).all() and (x <= self.upper + tol).all())

    def support(self, direction) -> float:
        ell = _as_vector(direction, "direction")
        return float(np.where(ell > 0, ell * self.upper, ell * self.lower).sum())

    def to_hpolytope(self) -> "HPolytope":
        d = self.dim
        eye = np.eye(d)
        return HPolytope(np.vstack([eye, -eye]), np.concatenate([self.upper, -self.lower]))

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(np.maximum(self.lower, other.lower),
                        np.minimum(self.upper, other.upper))


@dataclass(frozen=True)
class HPolytope:
    """Halfspace intersection {x : normals @ x <= offsets}."""

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = _as_vector(self.offsets, "offsets")
        if A.shape[0] != b.shape[0]:
            raise ValueError("row count of normals must match offsets")
        if A.shape[0] == 0:
            raise ValueError("polytope needs at least one halfspace")
        object.__setattr__(self, "normals", A)
        object.__setattr__(self, "offsets", b)

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def n_halfspaces(self) -> int:
        return self.normals.shape[0]

    def contains(self, x, tol: float = 0.0) -> bool:
        x = _as_vector(x)
        return bool((self.normals @ x <= self.offsets + tol).all())

    def slack(self, x) -> np.ndarray:
        """Per-halfspace slack b - A x; nonnegative inside."""
        return self.offsets - self.normals @ _as_vector(x)

    def support(self, direction) -> float:
        ell = _as_vector(direction, "direction")
        res = lp.lp_solve(ell, self.normals, self.offsets, maximize=True)
        if res.status is lp.LpStatus.UNBOUNDED:
            raise UnboundedSetError("polytope unbounded in queried direction")
        if res.status is lp.LpStatus.INFEASIBLE:
            raise EmptySetError("polytope is empty")
        return float(res.value)


@dataclass(frozen=True)
class Zonotope:
    """Affine image of a unit cube: {center + generators @ beta : |beta|_inf <= 1}."""

    center: np.ndarray
    generators: np.ndarray

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if G.shape[0] != c.shape[0]:
            raise ValueError("generator rows must match center dimension")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "generators", G)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def n_generators(self) -> int:
        return self.generators.shape[1]

    def support(self, direction) -> float:
        ell = _as_vector(direction, "direction")
        return float(ell @ self.center + np.abs(ell @ self.generators).sum())

    def contains(self, x, tol: float = 1e-9) -> bool:
        """Membership via the smallest box-norm residual feasibility LP."""
        x = _as_vector(x)
        g = self.n_generators
        z = x - self.center
        G = self.generators
        # Variables (beta, t): minimize t s.t. |G beta - z|_inf <= t, |beta| <= 1.
        A = np.vstack([
            np.hstack([G, -np.ones((self.dim, 1))]),
            np.hstack([-G, -np.ones((self.dim, 1))]),
            np.hstack([np.eye(g), np.zeros((g, 1))]),
            np.hstack([-np.eye(g), np.zeros((g, 1))]),
        ])
        b = np.concatenate([z, -z, np.ones(g), np.ones(g)])
        c = np.zeros(g + 1)
        c[-1] = 1.0
        res = lp.lp_solve(c, A, b)
        if res.status is not lp.LpStatus.OPTIMAL:
            return False
        return res.value <= tol


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of intervals with pairwise disjoint interiors."""

    members: tuple[Interval, ...] = field(default_factory=tuple)

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("union needs at least one member interval")
        d = members[0].dim
        for mem in members:
            if mem.dim != d:
                raise ValueError("union members must share a dimension")
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                a, bm = members[i], members[j]
                if ((a.lower < bm.upper) & (a.upper > bm.lower)).all():
                    raise ValueError(f"members {i} and {j} have overlapping interiors")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def contains(self, x, tol: float = 0.0) -> bool:
        return any(mem.contains(x, tol) for mem in self.members)

    def support(self, direction) -> float:
        return max(mem.support(direction) for mem in self.members)


ConstraintSet = Interval | HPolytope | Zonotope | IntervalUnion


def contains(cset: ConstraintSet, x, tol: float = 0.0) -> bool:
    if isinstance(cset, Zonotope):
        return cset.contains(x, tol=max(tol, 1e-9))
    return cset.contains(x, tol)


def support(cset: ConstraintSet, direction) -> float:
    return cset.support(direction)


def contains_many(cset: ConstraintSet, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Vectorized membership for a batch of points, shape (n, d) -> bool (n,).

    Zonotopes fall back to per-point LPs; every other set type is a fused
    numpy reduction, which is what the Monte Carlo oracle relies on.
    """
    X = np.atleast_2d(np.asarray(X))
    if isinstance(cset, Interval):
        return ((X >= cset.lower - tol) & (X <= cset.upper + tol)).all(axis=1)
    if isinstance(cset, HPolytope):
        return (X @ cset.normals.T <= cset.offsets + tol).all(axis=1)
    if isinstance(cset, IntervalUnion):
        out = np.zeros(X.shape[0], dtype=bool)
        for mem in cset.members:
            out |= ((X >= mem.lower - tol) & (X <= mem.upper + tol)).all(axis=1)
        return out
    return np.array([cset.contains(x, tol=max(tol, 1e-9)) for x in X])


def affine_preimage(cset: ConstraintSet, shift, scale) -> ConstraintSet:
    """Preimage of cset under x -> shift + scale * x for positive diagonal scale.

    A point y is in the result iff shift + scale * y is in cset.
    """
    shift = _as_vector(shift, "shift")
    scale = _as_vector(scale, "scale")
    if (scale <= 0).any():
        raise ValueError("scale must be strictly positive")
    if isinstance(cset, Interval):
        return Interval((cset.lower - shift) / scale, (cset.upper - shift) / scale)
    if isinstance(cset, HPolytope):
        return HPolytope(cset.normals * scale, cset.offsets - cset.normals @ shift)
    if isinstance(cset, Zonotope):
        return Zonotope((cset.center - shift) / scale, cset.generators / scale[:, None])
    if isinstance(cset, IntervalUnion):
        return IntervalUnion(tuple(affine_preimage(m, shift, scale) for m in cset.members))
    raise TypeError(f"unsupported set type {type(cset)!r}")


def chebyshev_ball(poly: HPolytope) -> tuple[np.ndarray, float]:
    """Center and radius of the largest inscribed ball.

    Solves max rho s.t. a_j^T x + |a_j|_2 rho <= b_j.  An optimal rho < 0
    certifies emptiness; rho may be 0 for degenerate (flat) polytopes.
    """
    norms = np.linalg.norm(poly.normals, axis=1)
    if (norms <= 0).any():
        raise ValueError("zero normal row in polytope")
    d = poly.dim
    A = np.hstack([poly.normals, norms[:, None]])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = lp.lp_solve(c, A, poly.offsets, maximize=True)
    if res.status is lp.LpStatus.UNBOUNDED:
        raise UnboundedSetError("polytope admits arbitrarily large inscribed balls")
    if res.status is lp.LpStatus.INFEASIBLE:
        raise EmptySetError("chebyshev LP infeasible")
    rho = float(res.x[-1])
    if rho < -1e-9:
        raise EmptySetError("polytope is empty (negative chebyshev radius)")
    return res.x[:d].copy(), max(rho, 0.0)


def chebyshev_center(poly: HPolytope) -> np.ndarray:
    return chebyshev_ball(poly)[0]


def outer_interval(poly: HPolytope) -> Interval:
    """Tightest axis-aligned bounding box, one support LP per facet direction."""
    d = poly.dim
    lower = np.empty(d)
    upper = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        upper[i] = poly.support(e)
        lower[i] = -poly.support(-e)
    return Interval(lower, upper)


def _presolve_bounds(poly: HPolytope):
    """Split halfspaces into per-dimension bounds and irredundant general rows.

    Singleton rows collapse into bounds [lo, hi]; general rows already
    implied by that bound box are dropped.  The returned system describes
    exactly the same set as the input.
    """
    A, b = poly.normals, poly.offsets
    d = poly.dim
    nonzero = A != 0.0
    n_nonzero = nonzero.sum(axis=1)
    lo = np.full(d, -np.inf)
    hi = np.full(d, np.inf)
    for i in np.flatnonzero(n_nonzero == 1):
        j = int(np.flatnonzero(nonzero[i])[0])
        coef = A[i, j]
        if coef > 0:
            hi[j] = min(hi[j], b[i] / coef)
        else:
            lo[j] = max(lo[j], b[i] / coef)
    general = np.flatnonzero(n_nonzero > 1)
    if general.size:
        Ag = A[general]
        # box support of each general row; np.where keeps 0 * inf out
        terms = np.where(Ag > 0, Ag * hi, 0.0) + np.where(Ag < 0, Ag * lo, 0.0)
        support_box = terms.sum(axis=1)
        keep = ~(support_box <= b[general] - 1e-9)
        Ag, bg = Ag[keep], b[general][keep]
    else:
        Ag = np.empty((0, d))
        bg = np.empty(0)
    return lo, hi, Ag, bg


def _strict_interior_start(lo, hi, Ag, bg):
    """Cheap strictly feasible box seed at the bound-box center, or (None, None).

    A box around the center with half-widths capped at 0.45 of both the
    bound widths and each general row's scaled slack satisfies every
    constraint strictly, skipping the Chebyshev LP.
    """
    if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
        return None, None
    center = 0.5 * (lo + hi)
    slack = bg - Ag @ center
    if (slack <= 1e-9).any():
        return None, None
    row_l1 = np.abs(Ag).sum(axis=1)
    r_general = 0.45 * (slack / row_l1).min()
    r0 = np.minimum(0.45 * (hi - lo), r_general)
    if (r0 <= 0).any():
        return None, None
    return center, r0


def inner_interval(poly: HPolytope) -> Interval:
    """Largest inscribed axis-aligned box by geometric mean of side lengths.

    Containment of the box [c - r, c + r] reduces to one inequality per
    halfspace, a_j^T c + |a_j|^T r <= b_j, and the barrier solve in ``lp``
    maximizes sum log r_i over that feasible region.  When presolve shows
    the set is itself a box, that box is returned directly.
    """
    lo, hi, Ag, bg = _presolve_bounds(poly)
    if Ag.shape[0] == 0:
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise UnboundedSetError("polytope is an unbounded box")
        if not (lo < hi).all():
            raise DegenerateSetError("polytope has empty interior, no inscribed box")
        return Interval(lo, hi)
    d = poly.dim
    rows = [Ag]
    offs = [bg]
    eye = np.eye(d)
    for j in range(d):
        if np.isfinite(hi[j]):
            rows.append(eye[j : j + 1])
            offs.append([hi[j]])
        if np.isfinite(lo[j]):
            rows.append(-eye[j : j + 1])
            offs.append([-lo[j]])
    reduced = HPolytope(np.vstack(rows), np.concatenate([np.asarray(o, float) for o in offs]))
    center, r0 = _strict_interior_start(lo, hi, Ag, bg)
    if center is None:
        center, rho = chebyshev_ball(reduced)
        if rho <= 1e-12:
            raise DegenerateSetError("polytope has empty interior, no inscribed box")
        # A box with half-width rho * 0.9 / sqrt(d) sits strictly inside the
        # Chebyshev ball, giving the barrier a strictly feasible start.
        r0 = np.full(d, 0.9 * rho / np.sqrt(d))
    c_opt, r_opt = lp.max_geomean_box(reduced.normals, reduced.offsets, center, r0)
    box = Interval(c_opt - r_opt, c_opt + r_opt)
    slack = poly.offsets - (poly.normals @ c_opt + np.abs(poly.normals) @ r_opt)
    if (slack < -1e-9).any():
        raise DegenerateSetError("inscribed box escaped the polytope")
    return box


def chord(poly: HPolytope, point, direction) -> tuple[float, float]:
    """Intersection {t : point + t * direction in poly} as (t_min, t_max).

    Requires point strictly inside.  Raises UnboundedSetError when the line
    never exits on one side.
    """
    p = _as_vector(point, "point")
    u = _as_vector(direction, "direction")
    s = poly.slack(p)
    if (s <= 0).any():
        raise ValueError("chord needs a strictly interior point")
    rates = poly.normals @ u
    t_max = np.inf
    t_min = -np.inf
    pos = rates > 1e-14
    neg = rates < -1e-14
    if pos.any():
        t_max = float((s[pos] / rates[pos]).min())
    if neg.any():
        t_min = float((s[neg] / rates[neg]).max())
    if not np.isfinite(t_max) or not np.isfinite(t_min):
        raise UnboundedSetError("chord does not terminate inside the polytope")
    return t_min, t_max


# ---------------------------------------------------------------------------
# JSON-friendly serialization


def set_to_json(cset: ConstraintSet) -> dict:
    if isinstance(cset, Interval):
        return {"type": "interval", "lower": cset.lower.tolist(), "upper": cset.upper.tolist()}
    if isinstance(cset, HPolytope):
        return {"type": "hpolytope", "normals": cset.normals.tolist(),
                "offsets": cset.offsets.tolist()}
    if isinstance(cset, Zonotope):
        return {"type": "zonotope", "center": cset.center.tolist(),
                "generators": cset.generators.tolist()}
    if isinstance(cset, IntervalUnion):
        return {"type": "union", "members": [set_to_json(m) for m in cset.members]}
    raise TypeError(f"unsupported set type {type(cset)!r}")


def set_from_json(data: dict) -> ConstraintSet:
    kind = data.get("type")
    if kind == "interval":
        return Interval(np.array(data["lower"], float), np.array(data["upper"], float))
    if kind == "hpolytope":
        return HPolytope(np.array(data["normals"], float), np.array(data["offsets"], float))
    if kind == "zonotope":
        return Zonotope(np.array(data["center"], float), np.array(data["generators"], float))
    if kind == "union":
        return IntervalUnion(tuple(set_from_json(m) for m in data["members"]))
    raise ValueError(f"unknown set type {kind!r}")
