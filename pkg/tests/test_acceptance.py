"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``criterion k: PASS|FAIL`` line; the lines are
repeated in an "acceptance criteria" section at the end of the pytest run.
"""

import math
import time
from fractions import Fraction as F

import numpy as np
import pytest
from scipy import stats

from treedom.boxes import BoxUnion, counterexample_D
from treedom.domination import (dominates_height2, height2_witness, is_spherical_vector,
                                log_psi_real, phi_tree_exact, psi_exact, psi_real,
                                some_path_prob)
from treedom.fpp import (SimConfig, TransitDist, exact_front, first_moment_bound,
                         run_replicas, sample_k_order_stats)
from treedom.growth import GrowthFunction, parse_growth
from treedom.rng import replica_generator
from treedom.scan import first_violation, run_scan
from treedom.transform import classify, limit_constant, tilde_f_hull, tilde_f_recursive
from treedom.trees import build_paths_tree, figure1_trees, tree_from_partition

from conftest import random_tree, random_union


def test_c01_figure1_exact(criterion):
    g, gp = figure1_trees()
    d = counterexample_D()
    t = time.perf_counter()
    a, b = phi_tree_exact(g, d), phi_tree_exact(gp, d)
    dt = time.perf_counter() - t
    ok = a == F(1075, 7776) and b == F(998, 7776) and dt < 1.0
    criterion(1, ok, f"Gamma {a}, Gamma' {b} (= {b.numerator * 2}/7776), {dt * 1e3:.1f} ms")


def test_c02_stringy_closed_form(criterion):
    rng = replica_generator(2)
    bad = 0
    for _ in range(100):
        n, k = int(rng.integers(1, 5)), int(rng.integers(1, 7))
        b = random_union(rng, n)
        if some_path_prob(build_paths_tree(n, k), b) != 1 - (1 - b.measure) ** k:
            bad += 1
    criterion(2, bad == 0, f"{100 - bad}/100 instances exact")


def _spherical(ratios):
    return [int(x) for x in np.cumprod(ratios)]


def test_c03_psi_properties(criterion):
    rng = replica_generator(3)
    mono = convex = homog = agree = 0
    worst_convex = worst_homog = worst_agree = 0.0
    count = 120
    for _ in range(count):
        n = int(rng.integers(1, 5))
        d = random_union(rng, n)
        # monotone: raise one growth ratio, entries <= 32
        r = rng.integers(1, 3, size=n)
        big = r.copy()
        big[int(rng.integers(n))] += 1
        mono += psi_exact(_spherical(big), d) <= psi_exact(_spherical(r), d)
        # midpoint log-convexity
        x, y = rng.uniform(.2, 6, size=n), rng.uniform(.2, 6, size=n)
        gap = psi_real(list((x + y) / 2), d) ** 2 - psi_real(list(x), d) * psi_real(list(y), d)
        worst_convex = max(worst_convex, gap)
        convex += gap <= 1e-9
        # homogeneity, skipped where Psi = 0
        base = log_psi_real(list(x), d)
        ok = True
        if math.isfinite(base):
            for lam in (0.5, 2.0, 3.7):
                err = abs(log_psi_real(list(lam * x), d) - lam * base) / max(1.0, abs(lam * base))
                worst_homog = max(worst_homog, err)
                ok &= err <= 1e-9
        homog += ok
        # real vs exact on spherical integer vectors
        s = _spherical(rng.integers(1, 4, size=n))
        e = float(psi_exact(s, d))
        rel = abs(psi_real([float(v) for v in s], d) - e) / e if e else 0.0
        worst_agree = max(worst_agree, rel)
        agree += rel <= 1e-12
    ok = mono == convex == homog == agree == count
    criterion(3, ok, f"{count} instances: monotone {mono}, log-convex {convex} "
                     f"(max gap {worst_convex:.1e}), homogeneous {homog} "
                     f"(max rel {worst_homog:.1e}), real=exact {agree} (max rel {worst_agree:.1e})")


def test_c04_tree_lower_bound(criterion):
    rng = replica_generator(4)
    checks = bad = exact = 0
    trees = 0
    while trees < 100:
        h = int(rng.integers(1, 5))
        t = random_tree(rng, h, max_children=3)
        if len(t) > 200:
            continue
        trees += 1
        b = t.generation_sizes()
        spherical = is_spherical_vector(b)
        for _ in range(20):
            d = random_union(rng, h)
            phi = phi_tree_exact(t, d)
            if spherical:
                exact += 1
                bad += phi < psi_exact(b, d)
            else:
                bad += float(phi) < psi_real([float(v) for v in b], d) - 1e-9
            checks += 1
    criterion(4, bad == 0, f"{checks - bad}/{checks} pairs satisfy phi >= Psi "
                           f"({exact} compared exactly)")


def test_c05_height2_equivalence(criterion):
    rng = replica_generator(5)
    true_pairs = false_pairs = bad = 0
    for _ in range(50):
        while True:
            p = rng.integers(0, 5, size=int(rng.integers(1, 5)))
            q = rng.integers(0, 5, size=int(rng.integers(1, 5)))
            if p.sum() and q.sum():
                break
        if dominates_height2(p, q):
            true_pairs += 1
            tp, tq = tree_from_partition(p), tree_from_partition(q)
            for _ in range(50):
                b = random_union(rng, 2)
                bad += some_path_prob(tp, b) < some_path_prob(tq, b)
        else:
            false_pairs += 1
            bad += height2_witness(p, q, range(1, 11)) is None
    criterion(5, bad == 0, f"{true_pairs} dominating pairs x 50 sets ordered, "
                           f"{false_pairs} non-dominating pairs reversed by a witness; "
                           f"{bad} failures")


def test_c06_regularization(criterion):
    rng = replica_generator(6)
    worst = 0.0
    for _ in range(1000):
        size = int(rng.integers(2, 40))
        f = GrowthFunction.table(rng.integers(1, 100, size=size))
        n = int(rng.integers(1, size))
        a, b = tilde_f_recursive(f, n, size - n), tilde_f_hull(f, n, size - n)
        worst = max(worst, float(np.max(np.abs(a.log_values - b.log_values))))
    fixed = all(np.array_equal(tilde_f_hull(parse_growth(s), 200).values,
                               np.array(parse_growth(s).values(200), dtype=float))
                for s in ("poly:1", "poly:2", "exp:2", "const:3", "poly:1,1,2"))
    alt = tilde_f_hull(parse_growth("alt:1,2^n"), 40).values
    vals = parse_growth("alt:1,2^n").values(41)
    paired = alt[0] == 1 and all(
        math.isclose(alt[2 * m - 1], math.sqrt(vals[2 * m - 1] * vals[2 * m]), rel_tol=1e-12)
        and math.isclose(alt[2 * m], alt[2 * m - 1], rel_tol=1e-12) for m in range(1, 20))
    power = 0.0
    for _ in range(100):
        base = rng.integers(1, 10, size=30)
        k = int(rng.integers(2, 5))
        x = tilde_f_hull(GrowthFunction.table(base), 25, 5).log_values
        y = tilde_f_hull(GrowthFunction.table(base ** k), 25, 5).log_values
        power = max(power, float(np.max(np.abs(k * x - y))))
    ok = worst <= 1e-12 and fixed and paired and power <= 1e-9
    criterion(6, ok, f"recursive vs hull max {worst:.1e} on 1000 tables; monotone fixed {fixed}; "
                     f"alternating paired means {paired}; power commutation max {power:.1e}")


def test_c07_classification(criterion):
    cases = [("poly:1", "no-explosion"), ("poly:2", "explosion"), ("alt:1,2^n", "explosion")]
    parts, ok = [], True
    for spec, want in cases:
        t = time.perf_counter()
        v = classify(parse_growth(spec), 1.0)
        dt = time.perf_counter() - t
        ok &= v.regime == want and v.definitive and dt < 1.0
        parts.append(f"{spec} {v.regime} ({dt * 1e3:.0f} ms)")
    harmonic = sum(1.0 / x if x < 2**1000 else 0.0
                   for x in parse_growth("alt:1,2^n").values(10_000))
    ok &= harmonic > 4000
    criterion(7, ok, "; ".join(parts) + f"; alt sum 1/f to 10^4 = {harmonic:.0f}")


def _final_ratios(dist, alpha, seeds=20, n=2000):
    f = parse_growth("poly:1")
    norm = tilde_f_hull(f, n).normalizer(alpha)[-1]
    cfg = SimConfig(seed=0, replicas=seeds, beam=200, prune_k=3, depth=n, dist=dist)
    return np.array([t.m_hat[-1] / norm for t in run_replicas(cfg, f)])


def test_c08_inverse_e_band(criterion):
    t = time.perf_counter()
    r = _final_ratios(TransitDist.exponential(), 1.0)
    dt = time.perf_counter() - t
    inside = int(np.sum((r >= 0.30) & (r <= 0.45)))
    criterion(8, inside >= 18 and dt < 300,
              f"{inside}/20 seeds in [0.30, 0.45]; ratios {r.min():.3f}..{r.max():.3f}, "
              f"median {np.median(r):.3f}; target e^-1 = {math.exp(-1):.4f}; {dt:.1f} s")


def test_c09_first_moment_bound(criterion):
    f = GrowthFunction.table([3] * 8)
    reps = 10_000
    dist = TransitDist.exponential()
    fronts = np.array([exact_front(f, 8, dist, replica_generator(9, r)).m_hat
                       for r in range(reps)])
    worst, checks = -math.inf, 0
    for n in range(1, 9):
        for x in np.quantile(fronts[:, n - 1], np.linspace(0.01, 0.99, 25)):
            emp = float(np.mean(fronts[:, n - 1] <= x))
            b = first_moment_bound(f, n, float(x)).bound
            sigma = math.sqrt(b * (1 - b) / reps)
            worst = max(worst, emp - (b + 3 * sigma))
            checks += 1
    criterion(9, worst <= 0, f"{checks} (level, x) points; max excess over bound + 3 sigma "
                             f"{worst:.3g}")


def test_c10_power_law_constant(criterion):
    const = limit_constant(2.0, 1.0)
    r = _final_ratios(TransitDist.power_law(2.0, 1.0), 2.0)
    inside = int(np.sum(np.abs(r / const - 1) <= 0.25))
    criterion(10, inside >= 18, f"{inside}/20 seeds within 25% of {const:.4f}; "
                                f"ratios {r.min():.3f}..{r.max():.3f}")


def test_c11_order_statistics(criterion):
    m, k, reps = 100, 5, 10_000
    pmin = 1.0
    for i, dist in enumerate((TransitDist.exponential(), TransitDist.power_law(2.0, 1.0))):
        rng = replica_generator(11, 2 * i)
        fast = np.array([sample_k_order_stats(m, k, dist, rng) for _ in range(reps)])
        naive = np.sort(dist.sample(replica_generator(11, 2 * i + 1), (reps, m)), axis=1)[:, :k]
        pmin = min(pmin, min(stats.ks_2samp(fast[:, j], naive[:, j]).pvalue for j in range(k)))

    def timed(mm):
        rng = replica_generator(0)
        t = time.perf_counter()
        for _ in range(5000):
            sample_k_order_stats(mm, k, TransitDist.exponential(), rng)
        return time.perf_counter() - t

    timed(100)
    small = min(timed(10**2) for _ in range(3))
    large = min(timed(10**6) for _ in range(3))
    ok = pmin > 0.01 and large < 2.5 * small
    criterion(11, ok, f"min KS p-value {pmin:.3f} (> 0.01 passes); time m=1e6 / m=1e2 = "
                      f"{large / small:.2f}")


def test_c12_conjecture_scan(criterion):
    inst = run_scan(500, seed=12, max_levels=3, max_vertices=8)
    bad = first_violation(inst)
    detail = f"{len(inst)} instances, heights {sorted({x.graph.height for x in inst})}"
    if bad is not None:
        detail += f"; violation: {bad.to_json()}"
    criterion(12, bad is None, detail)
