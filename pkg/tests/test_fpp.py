import math
import time

import numpy as np
import pytest
from scipy import stats

from treedom.errors import ContractError, SizeError
from treedom.fpp import (ExplosionBudget, MaterializedTree, SimConfig, Trajectory, TransitDist,
                         beam_front, branch_and_bound_min, exact_front, explosion_test,
                         first_moment_bound, greedy_descent, ratio_statistics, run_replicas,
                         sample_k_order_stats, sample_min_transit, scaled_order_stats,
                         weighted_chernoff_threshold)
from treedom.growth import GrowthFunction, parse_growth
from treedom.rng import replica_generator
from treedom.transform import tilde_f_hull

DISTS = [TransitDist.exponential(), TransitDist.power_law(2.0, 1.0)]


@pytest.mark.parametrize("dist", DISTS, ids=["exp", "power"])
def test_order_stats_match_naive_sampling(dist):
    m, k, reps = 100, 5, 10_000
    rng = replica_generator(11, 0)
    fast = np.array([sample_k_order_stats(m, k, dist, rng) for _ in range(reps)])
    naive = np.sort(dist.sample(replica_generator(11, 1), (reps, m)), axis=1)[:, :k]
    for i in range(k):
        assert stats.ks_2samp(fast[:, i], naive[:, i]).pvalue > 0.01


def test_order_stats_sorted_and_bounded():
    z = scaled_order_stats(10, 10, replica_generator(0), rows=50)
    assert np.all(np.diff(z, axis=1) >= 0)
    with pytest.raises(ContractError):
        scaled_order_stats(3, 4, replica_generator(0))


def test_min_transit_mean():
    rng = replica_generator(5)
    draws = [sample_min_transit(10**9, TransitDist.exponential(), rng) for _ in range(4000)]
    assert np.mean(draws) * 1e9 == pytest.approx(1.0, rel=0.06)


def test_cost_independent_of_m():
    rng = replica_generator(1)
    dist = TransitDist.exponential()

    def timed(m):
        t = time.perf_counter()
        for _ in range(3000):
            sample_k_order_stats(m, 5, dist, rng)
        return time.perf_counter() - t

    timed(100)
    small, large = min(timed(10**2) for _ in range(3)), min(timed(10**6) for _ in range(3))
    assert large < 2.5 * small


def test_power_law_cdf_roundtrip():
    d = TransitDist.power_law(2.0, 3.0)
    u = np.linspace(0, 1, 11)
    assert np.allclose(d.cdf(d.inverse_cdf(u)), u)


def test_unbounded_beam_equals_exact_front():
    f = GrowthFunction.table([2, 3, 2, 3, 2])
    for dist in DISTS:
        cfg = SimConfig(seed=3, replicas=1, beam=None, prune_k=10, depth=5, dist=dist)
        beam = beam_front(cfg, f, replica=0)
        exact = exact_front(f, 5, dist, replica_generator(3, 0))
        assert np.allclose(beam.m_hat, exact.m_hat, rtol=1e-13)


def test_branch_and_bound_matches_level_sums():
    for seed in range(20):
        tree = MaterializedTree.sample(GrowthFunction.table([3, 2, 3, 2, 3]), 5,
                                       TransitDist.exponential(), replica_generator(seed))
        assert branch_and_bound_min(tree) == pytest.approx(tree.level_sums(5).min(), rel=1e-14)


def test_beam_is_an_upper_estimate():
    f = GrowthFunction.table([3, 3, 3, 3, 3, 3])
    for seed in range(10):
        tree = MaterializedTree.sample(f, 6, TransitDist.exponential(), replica_generator(seed))
        exact = [tree.level_sums(n).min() for n in range(1, 7)]
        cfg = SimConfig(seed=seed, beam=4, prune_k=2, depth=6)
        beam = beam_front(cfg, f, source=tree)
        assert np.all(beam.m_hat >= np.array(exact) - 1e-12)
        assert beam.m_hat[0] == pytest.approx(exact[0])


def test_materialized_cap():
    with pytest.raises(SizeError):
        MaterializedTree.sample(GrowthFunction.constant(10), 7, TransitDist.exponential(),
                                replica_generator(0), cap=10**5)


def test_frontier_budget():
    cfg = SimConfig(seed=0, beam=None, prune_k=3, depth=20, max_frontier=1000)
    with pytest.raises(SizeError):
        beam_front(cfg, GrowthFunction.constant(3))


def test_replicas_are_reproducible_and_independent_of_count():
    f = parse_growth("poly:1")
    a = run_replicas(SimConfig(seed=9, replicas=3, depth=50), f)
    b = run_replicas(SimConfig(seed=9, replicas=5, depth=50), f)
    for x, y in zip(a, b):
        assert np.array_equal(x.m_hat, y.m_hat)
    assert not np.array_equal(a[0].m_hat, a[1].m_hat)


def test_greedy_trajectory_increases():
    f = GrowthFunction.table([2, 2, 2, 2])
    g = greedy_descent(f, 4, TransitDist.exponential(), replica_generator(0))
    assert g.mode == "greedy" and np.all(np.diff(g.m_hat) > 0)


def test_first_moment_bound_single_level():
    f = GrowthFunction.table([5])
    for x in (0.01, 0.1, 0.5):
        b = first_moment_bound(f, 1, x)
        assert b.bound == pytest.approx(min(1, 5 * -math.expm1(-x)), rel=1e-12)
        assert b.bound >= -math.expm1(-5 * x)
        assert b.crude >= b.bound
    assert first_moment_bound(f, 1, 0).bound == 0


def test_chernoff_threshold():
    assert weighted_chernoff_threshold(None, 10, 0.1) == pytest.approx(
        10 / math.e * (1 + math.log(0.9)))
    with pytest.raises(ContractError):
        weighted_chernoff_threshold(None, 10, 1.5)


def test_ratio_statistics_band():
    f = parse_growth("poly:1")
    trajs = run_replicas(SimConfig(seed=7, replicas=20, depth=2000), f)
    summary = ratio_statistics(trajs, tilde_f_hull(f, 2000), 1.0, 1.0, 0.2)
    assert summary.constant == pytest.approx(math.exp(-1))
    assert summary.band_contains()
    assert all(np.isfinite(t.ratio).all() for t in trajs)


def test_ratio_statistics_rejects_explosion_regime():
    f = parse_growth("poly:2")
    trajs = run_replicas(SimConfig(seed=0, replicas=2, depth=20), f)
    with pytest.raises(ContractError):
        ratio_statistics(trajs, tilde_f_hull(f, 20))


def test_trajectory_rows():
    t = Trajectory(np.array([1.0, 2.0]), seed=1, replica=0).with_normalizer(np.array([1.0, 4.0]))
    rows = list(t.rows())
    assert rows[1] == {"level": 2, "m_hat": 2.0, "normalizer": 4.0, "ratio": 0.5,
                       "mode": "plain", "seed": 1, "replica": 0}


def test_explosion_reports():
    budget = ExplosionBudget(levels=1024, replicas=4, chernoff_depth=64)
    rep = explosion_test(parse_growth("poly:2"), TransitDist.exponential(), budget)
    assert rep.verdict == "explosion" and rep.explosion_evidence and not rep.defects
    rep = explosion_test(parse_growth("poly:1"), TransitDist.exponential(), budget)
    assert rep.verdict == "no-explosion" and not rep.explosion_evidence and not rep.defects
    assert rep.chernoff_min >= rep.chernoff_threshold
