"""Truncated diagonal Gaussians over polytopes and interval unions.

Polytopes do not factorize, so the distribution object carries two interval
surrogates: the largest box inside the polytope and the tightest box around
it.  Metrics (normalizing mass, entropy) are evaluated on a chosen surrogate,
or on their convex combination with weights (1 - 2^-d, 2^-d), which shifts
from the inner toward the outer estimate as dimension grows.  An Original
mode keeps the untruncated metrics as a baseline.

Interval unions admit exact treatment: the truncated density is a mixture of
per-interval truncations weighted by their relative mass, which gives closed
forms for the normalizer, the entropy, and the mode.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvariantViolationError, LowMassError
from .geometry import HPolytope, Interval, IntervalUnion, inner_interval, outer_interval, chebyshev_center
from .solvers import QpProblem, solve_mode_qp
from .truncnorm import DiagGaussian, FactorizedTrunc


class ApproxMode(enum.Enum):
    INNER = "inner"
    OUTER = "outer"
    COMBINED = "combined"
    ORIGINAL = "original"


def _fact_grad_log_z(dist: FactorizedTrunc) -> tuple[np.ndarray, np.ndarray]:
    grads = [m.grad_log_z() for m in dist.marginals]
    return np.array([g[0] for g in grads]), np.array([g[1] for g in grads])


@dataclass(frozen=True)
class PolytopeTrunc:
    """Diagonal Gaussian truncated to a polytope, metrics via box surrogates.

    ``low_mass_fallback`` is set when the inner box carries no representable
    mass; Inner and Combined metrics then silently use the outer estimate,
    which is the only one still available and errs on the wide side.
    """

    base: DiagGaussian
    set: HPolytope
    inner: Interval
    outer: Interval
    approx_mode: ApproxMode
    inner_dist: FactorizedTrunc | None = field(repr=False, default=None)
    outer_dist: FactorizedTrunc | None = field(repr=False, default=None)
    low_mass_fallback: bool = False

    @classmethod
    def make(cls, base: DiagGaussian, poly: HPolytope,
             approx_mode: ApproxMode = ApproxMode.COMBINED) -> "PolytopeTrunc":
        inner = inner_interval(poly)
        outer = outer_interval(poly)
        _check_nesting(poly, inner, outer)
        outer_dist = FactorizedTrunc.from_interval(base.mu, base.sigma, outer)
        fallback = False
        try:
            inner_dist = FactorizedTrunc.from_interval(base.mu, base.sigma, inner)
        except LowMassError:
            inner_dist = None
            fallback = True
        return cls(base, poly, inner, outer, approx_mode,
                   inner_dist=inner_dist, outer_dist=outer_dist,
                   low_mass_fallback=fallback)

    # --- surrogate bookkeeping ------------------------------------------------

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def _combine_weights(self) -> tuple[float, float]:
        w_out = 2.0 ** (-self.dim)
        return 1.0 - w_out, w_out

    def _require_truncated(self):
        if self.approx_mode is ApproxMode.ORIGINAL:
            raise ValueError("Original mode carries no truncation estimate")

    def approx_log_z(self) -> float:
        """Log of the estimated truncated mass under the chosen surrogate."""
        self._require_truncated()
        if self.approx_mode is ApproxMode.OUTER or self.low_mass_fallback:
            return self.outer_dist.log_z
        if self.approx_mode is ApproxMode.INNER:
            return self.inner_dist.log_z
        w_in, w_out = self._combine_weights
        return float(np.logaddexp(math.log(w_in) + self.inner_dist.log_z,
                                  math.log(w_out) + self.outer_dist.log_z))

    def approx_entropy(self) -> float:
        self._require_truncated()
        if self.approx_mode is ApproxMode.OUTER or self.low_mass_fallback:
            return self.outer_dist.entropy()
        if self.approx_mode is ApproxMode.INNER:
            return self.inner_dist.entropy()
        w_in, w_out = self._combine_weights
        return w_in * self.inner_dist.entropy() + w_out * self.outer_dist.entropy()

    # --- density and gradients ------------------------------------------------

    def log_prob(self, a) -> float:
        if not self.set.contains(np.asarray(a, float)):
            return -math.inf
        if self.approx_mode is ApproxMode.ORIGINAL:
            return self.base.log_pdf(a)
        return self.base.log_pdf(a) - self.approx_log_z()

    def grad_log_prob(self, a) -> tuple[np.ndarray, np.ndarray]:
        """Score of log_prob at a feasible point.

        The interval surrogates depend on the polytope alone, so they are
        constants with respect to (mu, sigma) and only the Gaussian score and
        the surrogate log-mass term carry gradient.
        """
        a = np.asarray(a, float)
        if not self.set.contains(a, tol=1e-9):
            raise ValueError("gradient requested outside the constraint set")
        d_mu, d_sigma = self.base.score(a)
        if self.approx_mode is ApproxMode.ORIGINAL:
            return d_mu, d_sigma
        if self.approx_mode is ApproxMode.OUTER or self.low_mass_fallback:
            gz_mu, gz_sigma = _fact_grad_log_z(self.outer_dist)
        elif self.approx_mode is ApproxMode.INNER:
            gz_mu, gz_sigma = _fact_grad_log_z(self.inner_dist)
        else:
            # d log(w_i Z_i + w_o Z_o) = omega_i d logZ_i + omega_o d logZ_o
            # with posterior weights omega proportional to w * Z
            w_in, w_out = self._combine_weights
            log_zc = self.approx_log_z()
            om_in = math.exp(math.log(w_in) + self.inner_dist.log_z - log_zc)
            om_out = math.exp(math.log(w_out) + self.outer_dist.log_z - log_zc)
            gi_mu, gi_sigma = _fact_grad_log_z(self.inner_dist)
            go_mu, go_sigma = _fact_grad_log_z(self.outer_dist)
            gz_mu = om_in * gi_mu + om_out * go_mu
            gz_sigma = om_in * gi_sigma + om_out * go_sigma
        return d_mu - gz_mu, d_sigma - gz_sigma

    def mode(self) -> np.ndarray:
        """Feasible maximizer of the truncated density (weighted projection)."""
        prob = QpProblem(1.0 / self.base.sigma**2, self.base.mu, self.set)
        return solve_mode_qp(prob)


def _check_nesting(poly: HPolytope, inner: Interval, outer: Interval):
    """Cheap construction-time audit that inner fits the polytope fits outer."""
    if ((inner.lower < outer.lower - 1e-9).any()
            or (inner.upper > outer.upper + 1e-9).any()):
        raise InvariantViolationError("inner box escapes the outer box")
    if not outer.contains(chebyshev_center(poly), tol=1e-9):
        raise InvariantViolationError("outer box misses the polytope center")
    rng = np.random.default_rng(0)
    pts = inner.lower + rng.random((64, inner.dim)) * (inner.upper - inner.lower)
    slack = poly.offsets - pts @ poly.normals.T
    if slack.min() < -1e-7:
        raise InvariantViolationError("inner box escapes the polytope")


@dataclass(frozen=True)
class UnionTrunc:
    """Diagonal Gaussian truncated to a union of disjoint intervals.

    Equals the mixture of the per-interval truncations with weights equal to
    each interval's share of the total truncated mass, which is what makes
    every metric exact here.
    """

    base: DiagGaussian
    set: IntervalUnion
    weights: np.ndarray
    components: tuple[FactorizedTrunc, ...]
    log_z: float

    @classmethod
    def make(cls, base: DiagGaussian, union: IntervalUnion) -> "UnionTrunc":
        comps = tuple(FactorizedTrunc.from_interval(base.mu, base.sigma, mem)
                      for mem in union.members)
        log_zs = np.array([c.log_z for c in comps])
        shift = log_zs.max()
        total = np.exp(log_zs - shift).sum()
        log_z = float(shift + np.log(total))
        weights = np.exp(log_zs - log_z)
        weights /= weights.sum()
        return cls(base, union, weights, comps, log_z)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def n_members(self) -> int:
        return len(self.components)

    def pdf(self, x) -> float:
        """Mixture form: sum of weighted per-interval truncated densities."""
        x = np.asarray(x, float)
        return float(sum(w * math.exp(c.log_prob(x))
                         for w, c in zip(self.weights, self.components)))

    def log_prob(self, x) -> float:
        x = np.asarray(x, float)
        terms = []
        for w, c in zip(self.weights, self.components):
            lp = c.log_prob(x)
            if w > 0.0 and lp > -math.inf:
                terms.append(math.log(w) + lp)
        if not terms:
            return -math.inf
        m = max(terms)
        return m + math.log(sum(math.exp(t - m) for t in terms))

    def log_prob_batch(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, float)
        stack = np.full((self.n_members, X.shape[0]), -np.inf)
        for i, (w, c) in enumerate(zip(self.weights, self.components)):
            if w > 0.0:
                stack[i] = math.log(w) + c.log_prob_batch(X)
        m = stack.max(axis=0)
        out = np.full(X.shape[0], -np.inf)
        ok = np.isfinite(m)
        out[ok] = m[ok] + np.log(np.exp(stack[:, ok] - m[ok]).sum(axis=0))
        return out

    def entropy(self) -> float:
        """Mixture entropy: member-choice entropy plus mean member entropy.

        Disjoint supports make this exact.  Both sums carry the member
        weights; vanishing-weight members contribute nothing in the limit.
        """
        w = self.weights
        pos = w > 0.0
        mix = -(w[pos] * np.log(w[pos])).sum()
        inner = sum(wi * c.entropy() for wi, c in zip(w, self.components) if wi > 0.0)
        return float(mix + inner)

    def mode(self) -> np.ndarray:
        """Argmax of the mixture density over per-member clamped candidates."""
        candidates = [np.clip(self.base.mu, c.interval.lower, c.interval.upper)
                      for c in self.components]
        dens = [self.pdf(cand) for cand in candidates]
        if max(dens) > 0.0:
            best = int(np.argmax(dens))  # first index wins ties
        else:  # all candidates underflow; compare in log space instead
            best = int(np.argmax([self.base.log_pdf(c) for c in candidates]))
        return candidates[best]

    def sample_n(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Mixture sampling: choose members by weight, invert within each."""
        picks = rng.choice(self.n_members, size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for i, c in enumerate(self.components):
            mask = picks == i
            if mask.any():
                out[mask] = c.sample_n(int(mask.sum()), rng)
        return out

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_n(1, rng)[0]
