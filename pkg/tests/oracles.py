"""Independent oracle routines used by the test suite.

Everything here deliberately avoids the library's own computational paths:
quadrature instead of closed forms, vertex enumeration instead of LPs,
finite differences instead of analytic gradients.  Expected values in tests
are either frozen literals derived from these oracles or recomputed inline.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def composite_simpson(f, a: float, b: float, n: int) -> float:
    """Composite Simpson rule with n panels (n even) on a vectorized f."""
    if n % 2:
        n += 1
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return float(h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum()))


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, n0: int = 64) -> float:
    """Refine composite Simpson until successive estimates agree within tol."""
    n = n0
    prev = composite_simpson(f, a, b, n)
    for _ in range(18):
        n *= 2
        cur = composite_simpson(f, a, b, n)
        if abs(cur - prev) <= tol:
            return cur
        prev = cur
    raise RuntimeError(f"Simpson refinement did not reach tol={tol}")


def normal_density(x, mu=0.0, sigma=1.0):
    z = (np.asarray(x, float) - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))


def truncated_mass_quadrature(mu, sigma, lower, upper, tol=1e-12) -> float:
    """Truncated normal mass by direct quadrature of the density."""
    return adaptive_simpson(lambda x: normal_density(x, mu, sigma), lower, upper, tol=tol)


def truncated_entropy_quadrature(mu, sigma, lower, upper, tol=1e-10) -> float:
    """Differential entropy -int p log p of the truncated density by quadrature."""
    mass = truncated_mass_quadrature(mu, sigma, lower, upper, tol=min(tol, 1e-12))

    def integrand(x):
        p = normal_density(x, mu, sigma) / mass
        with np.errstate(divide="ignore", invalid="ignore"):
            v = -p * np.log(p)
        return np.where(p > 0, v, 0.0)

    return adaptive_simpson(integrand, lower, upper, tol=tol)


def polygon_vertices_2d(normals: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Vertices of a bounded 2-d polytope by pairwise line intersection."""
    m = normals.shape[0]
    pts = []
    for i, j in itertools.combinations(range(m), 2):
        M = np.array([normals[i], normals[j]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, np.array([offsets[i], offsets[j]]))
        if (normals @ v <= offsets + 1e-9).all():
            pts.append(v)
    if not pts:
        return np.empty((0, 2))
    pts = np.array(pts)
    # deduplicate
    keep = []
    for p in pts:
        if not any(np.allclose(p, q, atol=1e-9) for q in keep):
            keep.append(p)
    return np.array(keep)


def support_by_vertices(vertices: np.ndarray, direction) -> float:
    return float((vertices @ np.asarray(direction, float)).max())


def zonotope_support_bruteforce(center, generators, direction) -> float:
    """Support by enumerating all 2^k sign assignments of the generators."""
    center = np.asarray(center, float)
    G = np.asarray(generators, float)
    ell = np.asarray(direction, float)
    best = -np.inf
    for signs in itertools.product((-1.0, 1.0), repeat=G.shape[1]):
        best = max(best, float(ell @ (center + G @ np.array(signs))))
    return best


def zonotope_vertices_bruteforce(center, generators) -> np.ndarray:
    center = np.asarray(center, float)
    G = np.asarray(generators, float)
    pts = [center + G @ np.array(s) for s in itertools.product((-1.0, 1.0), repeat=G.shape[1])]
    return np.array(pts)


def central_difference(f, x: float, h: float = 1e-5) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def ks_distance(samples: np.ndarray, cdf) -> float:
    """Kolmogorov-Smirnov sup distance between the empirical CDF and cdf."""
    xs = np.sort(np.asarray(samples, float))
    n = xs.shape[0]
    F = np.array([cdf(x) for x in xs])
    up = np.abs(np.arange(1, n + 1) / n - F).max()
    dn = np.abs(F - np.arange(0, n) / n).max()
    return float(max(up, dn))
