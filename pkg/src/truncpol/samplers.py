"""Sampling strategies for Gaussians truncated to constraint sets.

All samplers work in the standardized noise frame: the constraint set is
pulled back through x -> (x - mu) / sigma, a standard normal is sampled on
the preimage, and the draw is mapped out as value = mu + sigma * noise.
Keeping the noise attached to every draw makes the map differentiable in
(mu, sigma) with the noise held fixed, and makes the reconstruction identity
bit-exact by construction.

Exhaustion of the rejection budget is an ordinary return value, not an
exception, because the hybrid sampler consumes it on its hot path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateSetError, InvariantViolationError,
                     UnboundedSetError)
from .geometry import (ConstraintSet, HPolytope, Interval, affine_preimage,
                       chebyshev_ball, contains, contains_many)
from .truncmvn import UnionTrunc
from .truncnorm import DiagGaussian, sample_std_interval


class SamplerKind(enum.Enum):
    INVERSE_TRANSFORM = "inverse_transform"
    REJECTION = "rejection"
    RDHR = "rdhr"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class SampleDraw:
    """One sample with its generating noise and cost counters.

    value = mu + sigma * noise holds exactly; attempts counts rejection
    proposals consumed, walk_steps counts random-walk steps consumed.
    """

    value: np.ndarray
    noise: np.ndarray
    method: SamplerKind
    attempts: int = 0
    walk_steps: int = 0


@dataclass(frozen=True)
class Exhausted:
    """Rejection budget ran out before a proposal landed inside the set."""

    attempts: int


@dataclass(frozen=True)
class RdhrConfig:
    """Hit-and-run walk parameters; thin=None resolves to 10 * dimension."""

    burn_in: int = 50
    thin: int | None = None
    start: np.ndarray | None = None

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.thin is not None and self.thin < 1:
            raise ValueError("thin must be at least 1")

    def resolved_thin(self, dim: int) -> int:
        return 10 * dim if self.thin is None else self.thin


def _finish(base: DiagGaussian, noise, method, attempts=0, walk_steps=0) -> SampleDraw:
    noise = np.asarray(noise, float)
    return SampleDraw(base.mu + base.sigma * noise, noise, method,
                      attempts=attempts, walk_steps=walk_steps)


def _assert_member(cset: ConstraintSet, draw: SampleDraw) -> SampleDraw:
    if not contains(cset, draw.value, tol=1e-9):
        raise InvariantViolationError("sampler produced a value outside the set")
    return draw


# ---------------------------------------------------------------------------
# rejection


def rejection_sample(base: DiagGaussian, cset: ConstraintSet, max_attempts: int,
                     rng: np.random.Generator) -> SampleDraw | Exhausted:
    """Propose from the untruncated base until a proposal lands in the set.

    Proposals are drawn in growing blocks to amortize the membership test;
    the attempt count is still exact (index of the accepted proposal).
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be at least 1")
    used = 0
    block = 16
    while used < max_attempts:
        m = min(block, max_attempts - used)
        eps = rng.standard_normal((m, base.dim))
        hits = contains_many(cset, base.mu + base.sigma * eps)
        idx = np.flatnonzero(hits)
        if idx.size:
            k = int(idx[0])
            return _finish(base, eps[k], SamplerKind.REJECTION, attempts=used + k + 1)
        used += m
        block = min(block * 2, 8192)
    return Exhausted(max_attempts)


# ---------------------------------------------------------------------------
# random-direction hit-and-run


class _RdhrWalk:
    """Hit-and-run chain over the standardized preimage polytope.

    The stationary law is the standard normal truncated to the preimage: a
    uniform direction fixes a chord, and the position along the chord is a
    1-d standard normal truncation (the squared norm splits into the along-
    chord coordinate plus a constant).

    Row slacks are carried incrementally (slack -= t * rates per step) and
    resynced from the point every few steps to cap drift, so a step costs a
    handful of length-m vector ops instead of a fresh matvec.
    """

    _SYNC_EVERY = 64

    def __init__(self, base: DiagGaussian, cset: ConstraintSet,
                 cfg: RdhrConfig, rng: np.random.Generator):
        pre = affine_preimage(cset, base.mu, base.sigma)
        if isinstance(pre, Interval):
            pre = pre.to_hpolytope()
        if not isinstance(pre, HPolytope):
            raise TypeError("hit-and-run needs an interval or polytope set")
        self.base = base
        self.poly = pre
        self.rng = rng
        if cfg.start is not None:
            point = (np.asarray(cfg.start, float) - base.mu) / base.sigma
            if self.poly.slack(point).min() <= 0:
                raise ValueError("start point must be strictly interior")
        else:
            point, radius = chebyshev_ball(self.poly)
            if radius <= 1e-12:
                raise DegenerateSetError("set has no interior to walk in")
        self.point = point
        self.slack = self.poly.slack(point)
        self._since_sync = 0

    def _move(self, u: np.ndarray, y: float, rates: np.ndarray):
        """Advance along unit direction u; rates = normals @ u precomputed."""
        with np.errstate(divide="ignore"):
            ratios = self.slack / rates
        pos = rates > 0.0
        neg = rates < 0.0
        if not (pos.any() and neg.any()):
            raise UnboundedSetError("hit-and-run chord is unbounded")
        t_max = float(ratios[pos].min())
        t_min = float(ratios[neg].max())
        # conditional along the chord: t ~ N(-p.u, 1) restricted to [t_min, t_max]
        m = -float(self.point @ u)
        z = sample_std_interval(t_min - m, t_max - m, y)
        t = m + z
        # keep strictly interior so the next chord is well defined
        margin = 1e-12 * (t_max - t_min) + 1e-300
        t = min(max(t, t_min + margin), t_max - margin)
        self.point = self.point + t * u
        self._since_sync += 1
        if self._since_sync >= self._SYNC_EVERY:
            self.slack = self.poly.slack(self.point)
            self._since_sync = 0
        else:
            self.slack = self.slack - t * rates

    def step(self):
        u = self.rng.standard_normal(self.base.dim)
        u /= np.linalg.norm(u)
        self._move(u, float(self.rng.random()), self.poly.normals @ u)

    def advance(self, n_steps: int) -> np.ndarray:
        if n_steps <= 0:
            return self.point
        dirs = self.rng.standard_normal((n_steps, self.base.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        ys = self.rng.random(n_steps)
        rates_all = dirs @ self.poly.normals.T
        for i in range(n_steps):
            self._move(dirs[i], float(ys[i]), rates_all[i])
        return self.point


class RdhrChain:
    """Persistent hit-and-run chain bound to one (base, set) pair.

    The first draw pays burn_in + thin steps, every later draw thin steps,
    so n draws cost burn_in + n * thin total instead of n fresh burn-ins.
    """

    def __init__(self, base: DiagGaussian, cset: ConstraintSet,
                 cfg: RdhrConfig, rng: np.random.Generator):
        self._walk = _RdhrWalk(base, cset, cfg, rng)
        self._base = base
        self._cset = cset
        self._burn_in = cfg.burn_in
        self._thin = cfg.resolved_thin(base.dim)
        self._burned = False

    def draw(self) -> SampleDraw:
        steps = self._thin + (0 if self._burned else self._burn_in)
        self._burned = True
        noise = self._walk.advance(steps).copy()
        return _assert_member(self._cset, _finish(self._base, noise,
                                                  SamplerKind.RDHR,
                                                  walk_steps=steps))


def rdhr_sample(base: DiagGaussian, cset: ConstraintSet, cfg: RdhrConfig,
                rng: np.random.Generator) -> SampleDraw:
    """One draw from a fresh chain after burn_in + thin steps."""
    return RdhrChain(base, cset, cfg, rng).draw()


def rdhr_chain(base: DiagGaussian, cset: ConstraintSet, n: int, cfg: RdhrConfig,
               rng: np.random.Generator) -> list[SampleDraw]:
    """n draws from a single chain: one burn-in, then one draw per thin steps."""
    chain = RdhrChain(base, cset, cfg, rng)
    return [chain.draw() for _ in range(n)]


# ---------------------------------------------------------------------------
# hybrid and reparameterized interfaces


class HybridSampler:
    """Rejection while it is cheap, hit-and-run once it stops being cheap.

    A session object: the walk is only built the first time rejection runs
    out of budget, and the chain persists across draws, so repeated low-mass
    draws pay thin steps instead of a fresh start and burn-in each time.
    """

    def __init__(self, base: DiagGaussian, cset: ConstraintSet,
                 rng: np.random.Generator, max_attempts: int = 100,
                 cfg: RdhrConfig = RdhrConfig()):
        self.base = base
        self.cset = cset
        self.rng = rng
        self.max_attempts = max_attempts
        self.cfg = cfg
        self._chain: RdhrChain | None = None

    def draw(self) -> SampleDraw:
        got = rejection_sample(self.base, self.cset, self.max_attempts, self.rng)
        if isinstance(got, SampleDraw):
            return got
        if self._chain is None:
            self._chain = RdhrChain(self.base, self.cset, self.cfg, self.rng)
        draw = self._chain.draw()
        return SampleDraw(draw.value, draw.noise, draw.method,
                          attempts=got.attempts, walk_steps=draw.walk_steps)


def hybrid_sample(base: DiagGaussian, cset: ConstraintSet, rng: np.random.Generator,
                  max_attempts: int = 100, cfg: RdhrConfig = RdhrConfig()) -> SampleDraw:
    """One hybrid draw; the method tag records which path produced the value."""
    return HybridSampler(base, cset, rng, max_attempts, cfg).draw()


def reparam_sample(base: DiagGaussian, cset: ConstraintSet, rng: np.random.Generator,
                   sampler: SamplerKind = SamplerKind.HYBRID,
                   max_attempts: int = 100, cfg: RdhrConfig = RdhrConfig()) -> SampleDraw:
    """Draw standardized noise on the preimage set, then map it out affinely.

    The returned noise is the actual random variate: holding it fixed,
    d value / d mu = 1 and d value / d sigma_i = noise_i, which is what a
    pathwise gradient estimator differentiates through.
    """
    if sampler is SamplerKind.INVERSE_TRANSFORM:
        pre = affine_preimage(cset, base.mu, base.sigma)
        if not isinstance(pre, Interval):
            raise ValueError("inverse transform requires an interval set")
        noise = np.array([sample_std_interval(float(lo), float(hi), float(rng.random()))
                          for lo, hi in zip(pre.lower, pre.upper)])
        return _assert_member(cset, _finish(base, noise, sampler))
    std = DiagGaussian(np.zeros(base.dim), np.ones(base.dim))
    pre = affine_preimage(cset, base.mu, base.sigma)
    if sampler is SamplerKind.REJECTION:
        got = rejection_sample(std, pre, max_attempts, rng)
        if isinstance(got, Exhausted):
            raise RuntimeError(f"rejection exhausted {got.attempts} proposals")
        inner = got
    elif sampler is SamplerKind.RDHR:
        inner = rdhr_sample(std, pre, cfg, rng)
    elif sampler is SamplerKind.HYBRID:
        inner = hybrid_sample(std, pre, rng, max_attempts, cfg)
    else:
        raise ValueError(f"unsupported sampler: {sampler}")
    return _assert_member(cset, _finish(base, inner.noise, inner.method,
                                        attempts=inner.attempts,
                                        walk_steps=inner.walk_steps))


# ---------------------------------------------------------------------------
# unions


def union_sample(u: UnionTrunc, rng: np.random.Generator) -> SampleDraw:
    """Pick a member by its mass share, then invert within the member."""
    y = float(rng.random())
    member = int(np.searchsorted(np.cumsum(u.weights), y, side="right"))
    member = min(member, u.n_members - 1)
    value, noise = u.components[member].sample_with_noise(rng)
    return _assert_member(u.set, SampleDraw(value, noise, SamplerKind.INVERSE_TRANSFORM))


def rejection_sample_with_fallback(base: DiagGaussian, cset: ConstraintSet,
                                   max_attempts: int, rng: np.random.Generator,
                                   fallback=None) -> tuple[SampleDraw | Exhausted, bool]:
    """Capped rejection for sets with no walkable structure (e.g. unions).

    On exhaustion the caller-supplied fallback() supplies a value (its noise
    is recovered by the inverse affine map, then the value is re-derived from
    that noise so the reconstruction identity stays exact).  Using a fixed
    fallback value biases the sampled law; the flag in the returned pair makes
    the bias observable to the caller.
    """
    got = rejection_sample(base, cset, max_attempts, rng)
    if isinstance(got, SampleDraw):
        return got, False
    if fallback is None:
        return got, True
    noise = (np.asarray(fallback(), float) - base.mu) / base.sigma
    draw = _finish(base, noise, SamplerKind.REJECTION, attempts=got.attempts)
    return draw, True
