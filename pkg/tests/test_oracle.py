"""Monte Carlo oracle: analytic cross-checks and reproducibility."""

import math

import numpy as np
import pytest

import truncpol.geometry as geo
import truncpol.truncnorm as tn
from truncpol.oracle import (ks_statistic, ks_threshold, mc_entropy, mc_moments,
                             mc_z)
from truncpol.truncmvn import UnionTrunc
from test_geometry import random_polytope

LOG_2PI_E = math.log(2.0 * math.pi * math.e)


def test_mc_z_whole_space():
    base = tn.DiagGaussian(np.zeros(2), np.ones(2))
    box = geo.Interval(np.full(2, -60.0), np.full(2, 60.0))
    est = mc_z(base, box, 10_000, seed=0)
    assert est.value == 1.0
    assert est.std_error == 0.0


def test_mc_z_empty_intersection():
    base = tn.DiagGaussian(np.zeros(2), np.ones(2))
    far = geo.Interval(np.full(2, 40.0), np.full(2, 41.0))
    est = mc_z(base, far, 10_000, seed=1)
    assert est.value == 0.0


def test_mc_z_matches_analytic_interval_mass():
    base = tn.DiagGaussian(np.zeros(1), np.ones(1))
    seg = geo.Interval(np.array([-1.0]), np.array([1.5]))
    est = mc_z(base, seg, 1_000_000, seed=7)
    exact = tn.phi_cdf(1.5) - tn.phi_cdf(-1.0)
    assert abs(est.value - exact) <= 3.0 * est.std_error
    assert est.std_error < 5e-4


def test_mc_z_boxes_match_phi_products():
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(100):
        d = int(rng.integers(1, 5))
        mu = rng.uniform(-1.0, 1.0, d)
        sigma = rng.uniform(0.3, 1.2, d)
        lo = rng.uniform(-2.0, 0.0, d)
        hi = lo + rng.uniform(0.5, 3.0, d)
        exact = math.exp(sum(
            tn.log_mass_interval(mu[i], sigma[i], lo[i], hi[i]) for i in range(d)))
        n = 100_000
        est = mc_z(tn.DiagGaussian(mu, sigma), geo.Interval(lo, hi),
                   n, seed=int(rng.integers(2**31)))
        # standard error under the true p, so near-zero masses are judged fairly
        se = math.sqrt(max(exact * (1.0 - exact), 1e-12) / n)
        worst = max(worst, abs(est.value - exact) / se)
    assert worst <= 4.0


def test_mc_z_polytope_prefilter_agrees_with_direct_route():
    # same draws, two code paths: bounding-box prefilter vs plain interval test
    base = tn.DiagGaussian(np.array([0.1, -0.2]), np.array([0.8, 1.1]))
    box = geo.Interval(np.array([-1.0, -0.7]), np.array([0.9, 1.3]))
    a = mc_z(base, box, 200_000, seed=5)
    b = mc_z(base, box.to_hpolytope(), 200_000, seed=5)
    assert a.value == b.value


def test_mc_z_reproducible_and_dtype_consistent():
    rng = np.random.default_rng(3)
    poly = random_polytope(rng, 3)
    base = tn.DiagGaussian(np.full(3, 0.2), np.full(3, 0.7))
    a = mc_z(base, poly, 500_000, seed=11)
    b = mc_z(base, poly, 500_000, seed=11)
    assert a == b
    c = mc_z(base, poly, 500_000, seed=11, dtype=np.float32)
    d = mc_z(base, poly, 500_000, seed=11, dtype=np.float32)
    assert c == d
    assert abs(a.value - c.value) <= 5.0 * a.std_error


def test_mc_z_rejects_tiny_n():
    base = tn.DiagGaussian(np.zeros(1), np.ones(1))
    with pytest.raises(ValueError):
        mc_z(base, geo.Interval(np.array([-1.0]), np.array([1.0])), 10, seed=0)


# ---------------------------------------------------------------------------
# entropy and moments


def test_mc_entropy_wide_bounds_is_gaussian_entropy():
    box = geo.Interval(np.full(2, -40.0), np.full(2, 40.0))
    dist = tn.FactorizedTrunc.from_interval(np.zeros(2), np.ones(2), box)
    est = mc_entropy(dist, 200_000, seed=2)
    assert abs(est.value - LOG_2PI_E) <= 3.0 * est.std_error + 1e-9


def test_mc_entropy_matches_closed_form_1d():
    box = geo.Interval(np.array([-1.0]), np.array([1.5]))
    dist = tn.FactorizedTrunc.from_interval(np.array([0.2]), np.array([0.9]), box)
    est = mc_entropy(dist, 400_000, seed=13)
    assert abs(est.value - dist.entropy()) <= 3.0 * est.std_error


def test_mc_entropy_union_matches_mixture_formula():
    base = tn.DiagGaussian(np.array([0.1]), np.array([0.8]))
    members = (geo.Interval(np.array([-2.0]), np.array([-0.2])),
               geo.Interval(np.array([0.3]), np.array([1.7])))
    u = UnionTrunc.make(base, geo.IntervalUnion(members))
    est = mc_entropy(u, 400_000, seed=21)
    assert abs(est.value - u.entropy()) <= 3.0 * est.std_error


def test_mc_moments_symmetric_interval():
    box = geo.Interval(np.array([-1.0, -2.0]), np.array([1.0, 2.0]))
    dist = tn.FactorizedTrunc.from_interval(np.zeros(2), np.array([0.8, 1.1]), box)
    est = mc_moments(dist, 200_000, seed=4)
    np.testing.assert_array_less(np.abs(est.mean), 3.0 * est.std_error)
    assert abs(est.cov[0, 1]) < 0.01


def test_mc_moments_matches_analytic_mean():
    d = tn.TruncNormal1d.make(0.4, 1.2, -0.5, 2.0)
    fact = tn.FactorizedTrunc((d,))
    est = mc_moments(fact, 300_000, seed=6)
    assert abs(est.mean[0] - d.mean()) <= 3.0 * est.std_error[0]
    assert est.cov.shape == (1, 1)
    assert abs(est.cov[0, 0] - d.var()) < 0.005


def test_mc_moments_reproducible():
    box = geo.Interval(np.array([-1.0]), np.array([1.0]))
    dist = tn.FactorizedTrunc.from_interval(np.zeros(1), np.ones(1), box)
    a = mc_moments(dist, 10_000, seed=9)
    b = mc_moments(dist, 10_000, seed=9)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov helper


def test_ks_statistic_on_true_distribution():
    rng = np.random.default_rng(77)  # fixed seed known to pass at alpha=0.01
    x = rng.standard_normal(100_000)
    stat = ks_statistic(x, tn.phi_cdf)
    assert stat < ks_threshold(100_000, alpha=0.01)


def test_ks_statistic_constant_samples():
    c = 0.3
    stat = ks_statistic(np.full(1000, c), tn.phi_cdf)
    expected = max(tn.phi_cdf(c), 1.0 - tn.phi_cdf(c))
    assert stat == pytest.approx(expected, abs=1e-3)


def test_ks_statistic_permutation_invariant():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(500)
    stat = ks_statistic(x, tn.phi_cdf)
    assert ks_statistic(rng.permutation(x), tn.phi_cdf) == stat


def test_ks_statistic_scalar_only_cdf():
    rng = np.random.default_rng(15)
    x = rng.standard_normal(200)

    def scalar_cdf(v):
        if isinstance(v, np.ndarray):
            raise TypeError("scalar only")
        return tn.phi_cdf(v)

    assert ks_statistic(x, scalar_cdf) == ks_statistic(x, tn.phi_cdf)


def test_ks_threshold_values():
    assert ks_threshold(10_000, 0.01) == pytest.approx(0.0163)
    assert ks_threshold(10_000, 0.05) == pytest.approx(0.0136)
    with pytest.raises(ValueError):
        ks_threshold(100, alpha=0.2)
