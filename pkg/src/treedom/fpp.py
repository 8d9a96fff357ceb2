"""First-passage percolation on spherically symmetric trees.

The tree is never built in greedy or beam mode: the children of a vertex at
level n - 1 are represented only by the smallest few of their f(n) transit
times, drawn in O(k) from exponential spacings. Transit times are carried
as logarithms so that f(n) may be far beyond float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from .errors import ContractError, SizeError
from .growth import GrowthFunction
from .rng import replica_generator
from .transform import (RegularizedGrowth, classify, equal_product_indices, limit_constant,
                        tilde_f_hull)
from .trees import DEFAULT_VERTEX_CAP


@dataclass(frozen=True)
class TransitDist:
    """Transit-time law: ``exponential``, ``power-law`` or ``custom``.

    The power law has CDF ``c t^alpha`` on ``[0, c^(-1/alpha)]``.
    """

    kind: str = "exponential"
    alpha: float = 1.0
    c: float = 1.0
    inv_cdf: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    name: str = ""

    def __post_init__(self):
        if self.kind not in ("exponential", "power-law", "custom"):
            raise ContractError(f"unknown transit distribution {self.kind!r}")
        if self.kind == "power-law" and not (self.alpha > 0 and self.c > 0):
            raise ContractError("power law needs alpha > 0 and c > 0")
        if self.kind == "custom" and self.inv_cdf is None:
            raise ContractError("custom distribution needs an inverse CDF")

    @classmethod
    def exponential(cls) -> "TransitDist":
        return cls("exponential")

    @classmethod
    def power_law(cls, alpha: float, c: float = 1.0) -> "TransitDist":
        return cls("power-law", float(alpha), float(c))

    @classmethod
    def custom(cls, inv_cdf, name: str = "custom", alpha: float = 1.0) -> "TransitDist":
        return cls("custom", alpha=alpha, inv_cdf=inv_cdf, name=name)

    @property
    def exponent(self) -> float:
        """alpha of the power law near zero (1 for the exponential)."""
        return self.alpha if self.kind != "exponential" else 1.0

    @property
    def small_time_constant(self) -> float:
        return self.c if self.kind == "power-law" else 1.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exponential":
            return -np.expm1(-np.maximum(t, 0))
        if self.kind == "power-law":
            return np.clip(self.c * np.maximum(t, 0) ** self.alpha, 0, 1)
        raise ContractError("custom distributions expose only the inverse CDF")

    def inverse_cdf(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "exponential":
            return -np.log1p(-u)
        if self.kind == "power-law":
            return (u / self.c) ** (1 / self.alpha)
        return np.asarray(self.inv_cdf(u), dtype=float)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Plain i.i.d. draws (the naive reference sampler)."""
        if self.kind == "exponential":
            return rng.standard_exponential(size)
        return self.inverse_cdf(rng.random(size))

    def log_quantile(self, z: np.ndarray, log_m: float) -> np.ndarray:
        """ln G^-1(1 - exp(-z / m)) for z = m times an exponential order statistic."""
        with np.errstate(divide="ignore"):
            log_x = np.log(z) - log_m
        if self.kind == "exponential":
            return log_x
        x = np.exp(log_x)
        with np.errstate(divide="ignore"):
            log_u = np.where(x > 1e-300, np.log(-np.expm1(-np.maximum(x, 1e-300))), log_x)
        if self.kind == "power-law":
            return (log_u - math.log(self.c)) / self.alpha
        with np.errstate(divide="ignore"):
            return np.log(self.inverse_cdf(np.exp(log_u)))

    def to_json(self) -> dict:
        if self.kind == "exponential":
            return {"kind": "exponential"}
        if self.kind == "power-law":
            return {"kind": "power-law", "alpha": self.alpha, "c": self.c}
        return {"kind": "custom", "name": self.name}


def _log(m: int) -> float:
    return math.log(m)


def scaled_order_stats(m: int, k: int, rng: np.random.Generator, rows: int = 1) -> np.ndarray:
    """m times the k smallest of m unit exponentials, shape (rows, k).

    Uses the spacing identity X_(i) = sum_{j<=i} E_j / (m - j + 1); the
    factor m keeps the values O(1) however large m is.
    """
    if not 1 <= k <= m:
        raise ContractError(f"need 1 <= k <= m, got k={k}, m={m}")
    e = rng.standard_exponential((rows, k))
    coef = np.array([1.0 / (1.0 - j / m) for j in range(k)])
    return np.cumsum(e * coef, axis=1)


def sample_k_order_stats(m: int, k: int, dist: TransitDist, rng: np.random.Generator) -> np.ndarray:
    """The k smallest of m i.i.d. transit times, nondecreasing, in O(k)."""
    z = scaled_order_stats(m, k, rng)[0]
    return np.exp(dist.log_quantile(z, _log(m)))


def sample_min_transit(m: int, dist: TransitDist, rng: np.random.Generator) -> float:
    """Minimum of m i.i.d. transit times without drawing m variates."""
    if m < 1:
        raise ContractError("m must be >= 1")
    return float(sample_k_order_stats(m, 1, dist, rng)[0])


@dataclass
class Trajectory:
    """Per-level first-passage record for one replica (levels 1..N)."""

    m_hat: np.ndarray
    mode: str = "plain"
    exact: bool = False
    seed: Optional[int] = None
    replica: Optional[int] = None
    normalizer: Optional[np.ndarray] = None

    @property
    def depth(self) -> int:
        return len(self.m_hat)

    @property
    def ratio(self) -> np.ndarray:
        if self.normalizer is None:
            raise ContractError("trajectory has no normalizer attached")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.normalizer > 0, self.m_hat / self.normalizer, np.nan)

    def with_normalizer(self, normalizer: np.ndarray) -> "Trajectory":
        if len(normalizer) < self.depth:
            raise ContractError("normalizer shorter than the trajectory")
        self.normalizer = np.asarray(normalizer[:self.depth], dtype=float)
        return self

    def rows(self):
        ratio = self.ratio if self.normalizer is not None else [None] * self.depth
        norm = self.normalizer if self.normalizer is not None else [None] * self.depth
        for n in range(self.depth):
            yield {"level": n + 1, "m_hat": float(self.m_hat[n]),
                   "normalizer": None if norm[n] is None else float(norm[n]),
                   "ratio": None if ratio[n] is None else float(ratio[n]),
                   "mode": self.mode, "seed": self.seed, "replica": self.replica}


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    replicas: int = 1
    beam: Optional[int] = 200  # None keeps every vertex
    prune_k: int = 3
    depth: int = 100
    dist: TransitDist = field(default_factory=TransitDist.exponential)
    weighted: bool = False
    max_frontier: int = 10**7

    def __post_init__(self):
        if self.replicas < 1 or self.prune_k < 1 or self.depth < 1:
            raise ContractError("replicas, prune_k and depth must be >= 1")
        if self.beam is not None and self.beam < 1:
            raise ContractError("beam width must be >= 1 (or None for unbounded)")

    def to_json(self) -> dict:
        return {"seed": self.seed, "replicas": self.replicas, "beam": self.beam,
                "prune_k": self.prune_k, "depth": self.depth, "dist": self.dist.to_json(),
                "weighted": self.weighted}


class LazySource:
    """Children drawn on demand: the k smallest transit times per parent."""

    def __init__(self, f: GrowthFunction, dist: TransitDist, rng: np.random.Generator):
        self.f, self.dist, self.rng = f, dist, rng

    def children(self, n: int, parents: np.ndarray, k: int):
        m = self.f(n)
        z = scaled_order_stats(m, k, self.rng, rows=len(parents))
        return self.dist.log_quantile(z, _log(m)), None


class MaterializedTree:
    """Fully labeled first ``depth`` levels of a spherical tree.

    Level n is stored as a flat array of log transit times in which the
    children of vertex p (at level n - 1) occupy ``p*f(n) : (p+1)*f(n)`` and
    are sorted increasingly. Labels are drawn with the same calls, in the
    same order, as an unbounded beam with ``k = f(n)`` makes on a lazy source.
    """

    def __init__(self, f: GrowthFunction, log_labels: list[np.ndarray]):
        self.f = f
        self.log_labels = log_labels

    @property
    def depth(self) -> int:
        return len(self.log_labels)

    @classmethod
    def sample(cls, f: GrowthFunction, depth: int, dist: TransitDist, rng: np.random.Generator,
               cap: int = DEFAULT_VERTEX_CAP) -> "MaterializedTree":
        total, width = 1, 1
        for n in range(1, depth + 1):
            width *= f(n)
            total += width
            if total > cap:
                raise SizeError(f"tree exceeds the {cap}-vertex cap at level {n}")
        levels, rows = [], 1
        for n in range(1, depth + 1):
            m = f(n)
            z = scaled_order_stats(m, m, rng, rows=rows)
            levels.append(dist.log_quantile(z, _log(m)).ravel())
            rows *= m
        return cls(f, levels)

    def children(self, n: int, parents: np.ndarray, k: int):
        m = self.f(n)
        idx = parents[:, None] * m + np.arange(k)[None, :]
        return self.log_labels[n - 1][idx], idx

    def level_sums(self, n: int, weights: Optional[Sequence[float]] = None) -> np.ndarray:
        """S(v) for every vertex at level n (optionally with per-level log weights)."""
        sums = np.zeros(1)
        for lv in range(1, n + 1):
            m = self.f(lv)
            lab = self.log_labels[lv - 1] + (weights[lv - 1] if weights is not None else 0.0)
            sums = np.repeat(sums, m) + np.exp(lab)
        return sums


def branch_and_bound_min(tree: MaterializedTree, weights: Optional[Sequence[float]] = None) -> float:
    """min over bottom-level vertices of S(v), by depth-first search.

    A vertex is cut once its partial sum reaches the best complete sum;
    children are sorted, so the remaining siblings are cut with it.
    """
    n_max = tree.depth
    vals = [np.exp(lab + (weights[i] if weights is not None else 0.0))
            for i, lab in enumerate(tree.log_labels)]
    fs = [tree.f(n) for n in range(1, n_max + 1)]
    best = math.inf
    stack = [(0, 0, 0.0)]  # (level of vertex, index within level, partial sum)
    while stack:
        level, idx, s = stack.pop()
        if level == n_max:
            best = min(best, s)
            continue
        m = fs[level]
        base = idx * m
        kids = vals[level][base:base + m]
        pushed = []
        for j in range(m):
            t = s + kids[j]
            if t >= best:
                break
            pushed.append((level + 1, base + j, t))
        stack.extend(reversed(pushed))
    return best


def _log_weights(f: GrowthFunction, depth: int, alpha: float,
                 log_weights: Optional[Sequence[float]]) -> np.ndarray:
    if log_weights is not None:
        return np.asarray(log_weights[:depth], dtype=float)
    return np.array([_log(f(n)) / alpha for n in range(1, depth + 1)])


def beam_front(cfg: SimConfig, f: GrowthFunction, replica: int = 0, source=None,
               log_weights: Optional[Sequence[float]] = None) -> Trajectory:
    """Beam search over the k-pruned tree; M^_n is the best retained sum.

    Every retained sum belongs to an actual root path, so M^_n is an upper
    estimate of M_n. In weighted mode the transit time of a level-n vertex is
    multiplied by exp(log_weights[n-1]) (default f(n)^(1/alpha)).
    """
    rng = replica_generator(cfg.seed, replica)
    source = source or LazySource(f, cfg.dist, rng)
    weights = (_log_weights(f, cfg.depth, cfg.dist.exponent, log_weights)
               if cfg.weighted else None)
    sums = np.zeros(1)
    ids = np.zeros(1, dtype=np.int64)
    m_hat = np.empty(cfg.depth)
    for n in range(1, cfg.depth + 1):
        k = min(cfg.prune_k, f(n))
        if len(sums) * k > cfg.max_frontier:
            raise SizeError(f"beam frontier of {len(sums) * k} candidates at level {n} "
                            f"exceeds the budget of {cfg.max_frontier}")
        log_x, child_ids = source.children(n, ids, k)
        if weights is not None:
            log_x = log_x + weights[n - 1]
        cand = (sums[:, None] + np.exp(log_x)).ravel()
        cid = child_ids.ravel() if child_ids is not None else np.zeros(len(cand), dtype=np.int64)
        if cfg.beam is not None and len(cand) > cfg.beam:
            keep = np.sort(np.argpartition(cand, cfg.beam - 1)[:cfg.beam])
            cand, cid = cand[keep], cid[keep]
        sums, ids = cand, cid
        m_hat[n - 1] = sums.min()
    return Trajectory(m_hat, "weighted" if cfg.weighted else "plain",
                      exact=False, seed=cfg.seed, replica=replica)


def exact_front(f: GrowthFunction, N: int, dist: TransitDist, rng: np.random.Generator,
                cap: int = DEFAULT_VERTEX_CAP, weighted: bool = False,
                log_weights: Optional[Sequence[float]] = None) -> Trajectory:
    """Exact M_1..M_N on a freshly labeled, fully materialized tree."""
    tree = MaterializedTree.sample(f, N, dist, rng, cap)
    return exact_front_on(tree, weighted=weighted, alpha=dist.exponent, log_weights=log_weights)


def exact_front_on(tree: MaterializedTree, weighted: bool = False, alpha: float = 1.0,
                   log_weights: Optional[Sequence[float]] = None) -> Trajectory:
    n_max = tree.depth
    weights = _log_weights(tree.f, n_max, alpha, log_weights) if weighted else None
    m = np.empty(n_max)
    sums = np.zeros(1)
    for lv in range(1, n_max + 1):
        lab = tree.log_labels[lv - 1] + (weights[lv - 1] if weights is not None else 0.0)
        sums = np.repeat(sums, tree.f(lv)) + np.exp(lab)
        m[lv - 1] = sums.min()
    # the bottom level is recomputed by branch and bound; both are exact
    m[-1] = branch_and_bound_min(tree, weights)
    return Trajectory(m, "weighted" if weighted else "plain", exact=True)


def greedy_descent(f: GrowthFunction, N: int, dist: TransitDist,
                   rng: np.random.Generator) -> Trajectory:
    """Follow the smallest child transit time at every level.

    The path's partial sums bound M_n from above (exact only at n = 1).
    """
    e = rng.standard_exponential(N)
    logs = np.array([dist.log_quantile(np.array([e[n - 1]]), _log(f(n)))[0]
                     for n in range(1, N + 1)])
    return Trajectory(np.cumsum(np.exp(logs)), "greedy")


@dataclass(frozen=True)
class FirstMomentBound:
    bound: float
    crude: float


def first_moment_bound(f: GrowthFunction, n: int, x: float) -> FirstMomentBound:
    """Union bound P(M_n <= x) <= prod_{i<=n} f(i) P(Gamma(n, 1) <= x).

    Also returns the cruder x^n / n! prod f(i). Both are capped at 1 and
    evaluated in log space.
    """
    if n < 1 or x < 0:
        raise ContractError("need n >= 1 and x >= 0")
    log_prod = sum(_log(v) for v in f.values(n))
    if x == 0:
        return FirstMomentBound(0.0, 0.0)
    log_bound = log_prod + float(stats.gamma.logcdf(x, n))
    log_crude = log_prod + n * math.log(x) - math.lgamma(n + 1)
    return FirstMomentBound(math.exp(min(0.0, log_bound)), math.exp(min(0.0, log_crude)))


def weighted_chernoff_threshold(reg: Optional[RegularizedGrowth], n: int, eps: float) -> float:
    """(n/e) ln((1 - eps) e): with probability above 1 - (1-eps)^n no level-n
    weighted sum (weights f~) falls below this value."""
    if not 0 < eps < 1:
        raise ContractError("eps must lie in (0, 1)")
    if n < 1:
        raise ContractError("n must be >= 1")
    if reg is not None and n > reg.window:
        raise ContractError(f"level {n} is outside the regularized window 1..{reg.window}")
    return n / math.e * (1.0 + math.log1p(-eps))


@dataclass
class RatioSummary:
    levels: np.ndarray
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray
    constant: float
    tolerance: float
    flagged: list[int]

    def band_contains(self, level: Optional[int] = None, rel_tol: Optional[float] = None) -> bool:
        """Does [low, high] at ``level`` meet constant * [1 - tol, 1 + tol]?"""
        i = (level or int(self.levels[-1])) - 1
        tol = self.tolerance if rel_tol is None else rel_tol
        return bool(self.low[i] <= self.constant * (1 + tol)
                    and self.high[i] >= self.constant * (1 - tol))

    def to_json(self, every: int = 1) -> dict:
        idx = list(range(every - 1, len(self.levels), every))
        if idx[-1] != len(self.levels) - 1:
            idx.append(len(self.levels) - 1)
        return {"constant": self.constant, "tolerance": self.tolerance,
                "flagged_levels": self.flagged,
                "bands": [{"level": int(self.levels[i]), "mean": float(self.mean[i]),
                           "min": float(self.low[i]), "max": float(self.high[i])} for i in idx]}


def ratio_statistics(trajectories: Sequence[Trajectory], reg: RegularizedGrowth,
                     alpha: float = 1.0, c: float = 1.0,
                     tolerance: float = 0.2) -> RatioSummary:
    """Per-level band of M^_n / sum_{j<=n} f~(j)^(-1/alpha) across replicas."""
    if not trajectories:
        raise ContractError("no trajectories")
    verdict = classify(reg.growth, alpha, reg.window)
    if verdict.definitive and verdict.regime == "explosion":
        raise ContractError("the normalizer converges (explosion regime); ratios are meaningless")
    depth = min(t.depth for t in trajectories)
    if depth > reg.window:
        raise ContractError("trajectories are deeper than the regularized window")
    norm = reg.normalizer(alpha)[:depth]
    ratios = np.array([t.m_hat[:depth] / norm for t in trajectories])
    for t in trajectories:
        t.with_normalizer(norm)
    const = limit_constant(alpha, c)
    low, high = ratios.min(axis=0), ratios.max(axis=0)
    flagged = [int(i) + 1 for i in np.flatnonzero(
        (low > const * (1 + tolerance)) | (high < const * (1 - tolerance)))]
    return RatioSummary(np.arange(1, depth + 1), ratios.mean(axis=0), low, high,
                        const, tolerance, flagged)


def run_replicas(cfg: SimConfig, f: GrowthFunction,
                 log_weights: Optional[Sequence[float]] = None) -> list[Trajectory]:
    return [beam_front(cfg, f, replica=r, log_weights=log_weights) for r in range(cfg.replicas)]


@dataclass(frozen=True)
class ExplosionBudget:
    levels: int = 4096
    replicas: int = 8
    seed: int = 0
    beam: int = 64
    prune_k: int = 3
    chernoff_depth: int = 256
    eps: float = 0.1


@dataclass
class ExplosionReport:
    verdict: str
    analytic: Optional[str]
    front_tail: float
    explosion_evidence: bool
    chernoff_level: Optional[int]
    chernoff_threshold: Optional[float]
    chernoff_min: Optional[float]
    defects: list[str]

    def to_json(self) -> dict:
        return dict(self.__dict__)


def explosion_test(f: GrowthFunction, dist: TransitDist,
                   budget: ExplosionBudget = ExplosionBudget()) -> ExplosionReport:
    """Analytic verdict (when the tail rule allows one) plus simulation evidence.

    Explosion evidence: the median beam-front increment over the last
    doubling window of levels is below 1e-3. Beam fronts bound M_n from
    above, so evidence is sound but can be missing: a fixed beam cannot follow
    trees whose explosion needs unboundedly many candidate paths.

    Sanity check: weighted beam fronts at the last contact level stay above
    the Chernoff threshold.
    """
    alpha = dist.exponent
    analytic = None
    if dist.kind != "custom" and not f.table_only:
        analytic = classify(f, alpha, min(budget.levels, 1000)).regime
    levels = budget.levels if f.known_length is None else min(budget.levels, f.known_length)
    cfg = SimConfig(seed=budget.seed, replicas=budget.replicas, beam=budget.beam,
                    prune_k=budget.prune_k, depth=levels, dist=dist)
    tails = [t.m_hat[-1] - t.m_hat[levels // 2 - 1] for t in run_replicas(cfg, f)]
    tail = float(np.median(tails))
    evidence = tail < 1e-3

    defects = []
    if analytic == "no-explosion" and evidence:
        defects.append("beam fronts converge although the analytic verdict is no-explosion")

    level = thr = low = None
    if dist.kind == "exponential":
        depth = min(budget.chernoff_depth, levels)
        horizon = 0 if f.table_only else depth
        if f.table_only:
            depth = min(depth, len(f.prefix))
        reg = tilde_f_hull(f, depth, horizon if not f.table_only else len(f.prefix) - depth)
        contacts = equal_product_indices(f, depth, reg.horizon)
        level = contacts[-1]
        thr = weighted_chernoff_threshold(reg, level, budget.eps)
        cfg = SimConfig(seed=budget.seed, replicas=budget.replicas, beam=budget.beam,
                        prune_k=budget.prune_k, depth=level, dist=dist, weighted=True)
        fronts = run_replicas(cfg, f, log_weights=reg.log_values)
        low = float(min(t.m_hat[-1] for t in fronts))
        allowed = (1 - budget.eps) ** level
        frac = float(np.mean([t.m_hat[-1] < thr for t in fronts]))
        if frac > allowed + 3 * math.sqrt(max(allowed * (1 - allowed), 1e-12) / len(fronts)):
            defects.append(f"weighted fronts fall below the Chernoff threshold in {frac:.2f} of replicas")

    verdict = analytic or ("explosion" if evidence else "no-explosion")
    return ExplosionReport(verdict, analytic, tail, evidence, level, thr, low, defects)
