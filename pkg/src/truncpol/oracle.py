"""Seeded Monte Carlo ground truth for truncated-Gaussian quantities.

Plain Monte Carlo on purpose: the estimates must stay independent of the
approximation machinery they are used to judge, so no stratification or
reuse of the surrogate structures.  Everything is deterministic given
(seed, n) and reports a standard error alongside the value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptySetError, UnboundedSetError
from .geometry import ConstraintSet, HPolytope, contains_many, outer_interval
from .truncnorm import DiagGaussian

_CHUNK = 1 << 20


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class MomentsEstimate:
    mean: np.ndarray
    cov: np.ndarray
    std_error: np.ndarray  # of the mean, per dimension
    n_samples: int
    seed: int


def mc_z(base: DiagGaussian, cset: ConstraintSet, n: int, seed: int,
         dtype=np.float64) -> OracleEstimate:
    """Acceptance-rate estimate of the truncated mass.

    Draws are processed in fixed-size chunks so the random stream layout (and
    hence the result) does not depend on available memory.  For polytopes a
    bounding-box prefilter skips the full halfspace test for draws that are
    obviously outside; the box is padded so the filter never overrules the
    exact test.  dtype=float32 roughly doubles throughput; the boundary
    rounding it introduces is orders of magnitude below the standard error
    at the sample counts used here.
    """
    if n < 1000:
        raise ValueError("oracle needs at least 1000 samples")
    rng = np.random.default_rng(seed)
    mu = base.mu.astype(dtype)
    sigma = base.sigma.astype(dtype)

    normals = offsets = lo = hi = None
    if isinstance(cset, HPolytope):
        try:
            box = outer_interval(cset)
            pad_lo = box.lower - 1e-5 * (1.0 + np.abs(box.lower))
            pad_hi = box.upper + 1e-5 * (1.0 + np.abs(box.upper))
            lo, hi = pad_lo.astype(dtype), pad_hi.astype(dtype)
            normals = cset.normals.astype(dtype)
            offsets = cset.offsets.astype(dtype)
        except (UnboundedSetError, EmptySetError):
            pass

    hits = 0
    left = n
    while left > 0:
        m = min(_CHUNK, left)
        X = rng.standard_normal((m, base.dim), dtype=dtype)
        X *= sigma
        X += mu
        if normals is not None:
            cand = X[((X >= lo) & (X <= hi)).all(axis=1)]
            if cand.shape[0]:
                hits += int((cand @ normals.T <= offsets).all(axis=1).sum())
        else:
            hits += int(contains_many(cset, np.asarray(X, np.float64)).sum())
        left -= m
    p = hits / n
    return OracleEstimate(p, math.sqrt(p * (1.0 - p) / n), n, seed)


def mc_entropy(dist, n: int, seed: int) -> OracleEstimate:
    """-E[log pdf] over the distribution's own samples.

    Works for any distribution exposing sample_n(n, rng) and
    log_prob_batch(X).
    """
    rng = np.random.default_rng(seed)
    total = 0.0
    total_sq = 0.0
    left = n
    while left > 0:
        m = min(_CHUNK, left)
        lp = dist.log_prob_batch(dist.sample_n(m, rng))
        total += float(lp.sum())
        total_sq += float((lp * lp).sum())
        left -= m
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return OracleEstimate(-mean, math.sqrt(var / n), n, seed)


def mc_moments(dist, n: int, seed: int) -> MomentsEstimate:
    rng = np.random.default_rng(seed)
    X = dist.sample_n(n, rng)
    mean = X.mean(axis=0)
    cov = np.cov(X, rowvar=False).reshape(X.shape[1], X.shape[1])
    se = X.std(axis=0, ddof=1) / math.sqrt(n)
    return MomentsEstimate(mean, cov, se, n, seed)


def ks_statistic(samples, cdf) -> float:
    """sup-distance between the empirical CDF and a reference CDF."""
    x = np.sort(np.asarray(samples, float))
    if x.size == 0:
        raise ValueError("need at least one sample")
    n = x.size
    try:
        f = np.asarray(cdf(x), dtype=float)
        if f.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        f = np.asarray([cdf(float(v)) for v in x], float)
    grid = np.arange(1, n + 1) / n
    return float(max((grid - f).max(), (f - (grid - 1.0 / n)).max()))


_KS_COEFF = {0.01: 1.63, 0.05: 1.36, 0.10: 1.22}


def ks_threshold(n: int, alpha: float = 0.01) -> float:
    """Asymptotic Kolmogorov-Smirnov critical value c(alpha)/sqrt(n)."""
    if alpha not in _KS_COEFF:
        raise ValueError(f"no tabulated coefficient for alpha={alpha}")
    return _KS_COEFF[alpha] / math.sqrt(n)
