"""Exact and floating-point path probabilities and domination criteria.

Labels are i.i.d. uniform on [0, 1]. Every probability here is a finite sum
over grid cells (see :mod:`treedom.boxes`), so the exact routines return
``Fraction`` values.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .boxes import DEFAULT_CELL_CAP, BoxUnion, Grid, witness_set_height2
from .errors import ContractError, SizeError
from .growth import GrowthFunction
from .trees import GradedGraph, RootedTree, count_full_paths, partition, tree_from_partition

DEFAULT_ASSIGNMENT_CAP = 2 * 10**6


def _spherical_exponents(b: Sequence[int]) -> tuple[int, ...]:
    """Growth ratios b_1, b_2/b_1, ...; raises unless all are integers."""
    out, prev = [], 1
    for x in b:
        if int(x) != x or x < 1:
            raise ContractError(f"generation sizes must be positive integers, got {list(b)}")
        if x % prev:
            raise ContractError(
                f"{list(b)} is not a spherical generation-size vector "
                "(ratio not integral); use psi_real")
        out.append(int(x) // prev)
        prev = int(x)
    return tuple(out)


def is_spherical_vector(b: Sequence) -> bool:
    try:
        _spherical_exponents(b)
    except ContractError:
        return False
    return True


def psi_exact(b: Sequence[int], d: BoxUnion, cap: int = DEFAULT_CELL_CAP) -> Fraction:
    """Probability that every root-to-leaf label vector of the spherical tree
    with generation sizes ``b`` lies in ``d``."""
    if len(b) != d.dim:
        raise ContractError(f"len(b) = {len(b)} but the set has dimension {d.dim}")
    ratios = _spherical_exponents(b)
    grid = d.grid(cap)
    ind = grid.indicator(d)
    memo: dict = {}

    def rec(level: int, sub: np.ndarray) -> Fraction:
        key = (level, sub.tobytes())
        hit = memo.get(key)
        if hit is not None:
            return hit
        widths = grid.widths[level]
        if level == d.dim - 1:
            inner = sum((w for w, on in zip(widths, sub) if on), Fraction(0))
        else:
            inner = sum((w * rec(level + 1, sub[j]) for j, w in enumerate(widths)), Fraction(0))
        val = inner ** ratios[level]
        memo[key] = val
        return val

    return rec(0, ind)


def log_psi_real(b: Sequence[float], d: BoxUnion, cap: int = DEFAULT_CELL_CAP) -> float:
    """ln of the real-argument extension of the all-paths probability.

    Returns ``-inf`` when the probability is zero.
    """
    if len(b) != d.dim:
        raise ContractError(f"len(b) = {len(b)} but the set has dimension {d.dim}")
    b = [float(x) for x in b]
    if any(not x > 0 for x in b):
        raise ContractError("all arguments must be positive")
    grid = d.grid(cap)
    ind = grid.indicator(d)
    fwidths = [np.array([float(w) for w in ws]) for ws in grid.widths]
    memo: dict = {}

    def rec(args: tuple[float, ...], level: int, sub: np.ndarray) -> float:
        key = (args, level, sub.tobytes())
        if key in memo:
            return memo[key]
        w = fwidths[level]
        if level == d.dim - 1:
            m = float(np.dot(w, sub))
            inner = math.log(m) if m > 0 else -math.inf
        else:
            rest = tuple(x / args[0] for x in args[1:])
            logs = np.array([rec(rest, level + 1, sub[j]) for j in range(len(w))])
            inner = float(logsumexp(logs, b=w)) if np.isfinite(logs).any() else -math.inf
        val = args[0] * inner
        memo[key] = val
        return val

    return rec(tuple(b), 0, ind)


def psi_real(b: Sequence[float], d: BoxUnion, cap: int = DEFAULT_CELL_CAP) -> float:
    return math.exp(log_psi_real(b, d, cap))


def psi(b: Sequence, d: BoxUnion):
    """Exact value for spherical integer vectors, float otherwise."""
    if is_spherical_vector(b):
        return psi_exact(b, d)
    return psi_real(b, d)


def _check_tree_for_set(tree: RootedTree, d: BoxUnion) -> None:
    if tree.height != d.dim:
        raise ContractError(f"tree height {tree.height} differs from set dimension {d.dim}")
    if tree.is_ragged():
        raise ContractError("tree has leaves above the bottom level; extend it explicitly")


def phi_tree_exact(tree: RootedTree, d: BoxUnion, cap: int = DEFAULT_CELL_CAP) -> Fraction:
    """Exact probability that every path root, w_1, ..., w_n of ``tree`` has
    its label vector in ``d``."""
    _check_tree_for_set(tree, d)
    grid = d.grid(cap)
    return _phi_on_grid(tree, grid, grid.indicator(d))


def _phi_on_grid(tree: RootedTree, grid: Grid, ind: np.ndarray) -> Fraction:
    shapes = tree.shape_ids
    kids: dict[int, Counter] = {}
    for v in range(len(tree)):
        s = int(shapes[v])
        if s not in kids:
            kids[s] = Counter(int(shapes[c]) for c in tree.children(v))
    n = grid.dim
    memo: dict = {}

    def rec(shape: int, level: int, sub: np.ndarray) -> Fraction:
        # ``sub`` constrains the labels on levels level+1..n below this vertex
        if level == n:
            return Fraction(1) if bool(sub) else Fraction(0)
        key = (shape, level, sub.tobytes())
        hit = memo.get(key)
        if hit is not None:
            return hit
        widths = grid.widths[level]
        val = Fraction(1)
        for child, mult in kids[shape].items():
            inner = sum((w * rec(child, level + 1, sub[j]) for j, w in enumerate(widths)
                         if sub[j].any()), Fraction(0))
            val *= inner**mult
            if not val:
                break
        memo[key] = val
        return val

    return rec(int(shapes[0]), 0, ind)


def some_path_prob(tree: RootedTree, b_set: BoxUnion, cap: int = DEFAULT_CELL_CAP) -> Fraction:
    """P(B; T): probability that some root path has its label vector in B."""
    _check_tree_for_set(tree, b_set)
    grid = b_set.grid(cap)
    return 1 - _phi_on_grid(tree, grid, ~grid.indicator(b_set))


def dominates_spherical(f: GrowthFunction, g: GrowthFunction, horizon: int) -> bool:
    """Generation sizes of f are at least those of g up to ``horizon``."""
    bf, bg = 1, 1
    for n in range(1, horizon + 1):
        bf *= f(n)
        bg *= g(n)
        if bf < bg:
            return False
    return True


def dominates_by_sizes(spherical: RootedTree | GrowthFunction, other: RootedTree) -> bool:
    """Domination of an arbitrary finite tree by a spherical one, by sizes."""
    other_sizes = other.generation_sizes()
    if isinstance(spherical, GrowthFunction):
        sizes = spherical.generation_sizes(len(other_sizes))
    else:
        sizes = spherical.generation_sizes()
    sizes = list(sizes) + [0] * max(0, len(other_sizes) - len(sizes))
    return all(a >= b for a, b in zip(sizes, other_sizes))


def _padded(p: Iterable[int], q: Iterable[int]) -> tuple[list[int], list[int]]:
    p, q = list(partition(p)), list(partition(q))
    size = max(len(p), len(q))
    return p + [0] * (size - len(p)), q + [0] * (size - len(q))


def height2_violation(p: Iterable[int], q: Iterable[int]) -> Optional[int]:
    """Smallest k with sum_{i>k} p_i < sum_{i>k} q_i, or None."""
    p, q = _padded(p, q)
    tp, tq = sum(p), sum(q)
    for k in range(len(p) + 1):
        if tp < tq:
            return k
        if k < len(p):
            tp -= p[k]
            tq -= q[k]
    return None


def dominates_height2(p: Iterable[int], q: Iterable[int]) -> bool:
    """Tail-sum (Young/majorization) condition for height-2 trees."""
    return height2_violation(p, q) is None


@dataclass(frozen=True)
class Height2Witness:
    r: int
    eps: Fraction
    phi_p: Fraction
    phi_q: Fraction


def height2_witness(p: Iterable[int], q: Iterable[int],
                    exponents: Iterable[int] = range(1, 11)) -> Optional[Height2Witness]:
    """Search eps = 2^-j for a set on which the p-tree has the strictly larger
    all-paths probability, i.e. the p-tree fails to dominate the q-tree."""
    p, q = _padded(p, q)
    k = height2_violation(p, q)
    if k is None:
        return None
    r = q[max(k, 1) - 1]
    tp, tq = tree_from_partition(p), tree_from_partition(q)
    for j in exponents:
        eps = Fraction(1, 2**j)
        d = witness_set_height2(r, eps)
        a, b = phi_tree_exact(tp, d), phi_tree_exact(tq, d)
        if a > b:
            return Height2Witness(r, eps, a, b)
    return None


def all_paths_prob_graded(g: GradedGraph, d: BoxUnion,
                          cap: int = DEFAULT_ASSIGNMENT_CAP) -> Fraction:
    """Probability that every full oriented path of ``g`` has its label
    vector in ``d``; shared vertices carry one shared label."""
    n = g.height
    if n != d.dim:
        raise ContractError(f"graph height {n} differs from set dimension {d.dim}")
    paths = [p for p in g.full_paths()]
    if not paths:
        return Fraction(1)
    grid = d.grid()
    ind = grid.indicator(d)
    denoms = [math.lcm(*(w.denominator for w in ws)) for ws in grid.widths]
    iw = [np.array([int(w * q) for w in ws], dtype=np.int64) for ws, q in zip(grid.widths, denoms)]

    used = sorted({v for p in paths for v in p})
    inner = [v for v in used if g.levels[v] < n]
    last = [v for v in used if g.levels[v] == n]
    col = {v: i for i, v in enumerate(inner)}
    sizes = [grid.shape[g.levels[v] - 1] for v in inner]
    count = math.prod(sizes)
    if count > cap:
        raise SizeError(f"{count} label-cell assignments exceed the cap of {cap}")
    if inner:
        assign = np.stack(np.meshgrid(*(np.arange(s) for s in sizes), indexing="ij"),
                          axis=-1).reshape(-1, len(inner))
    else:
        assign = np.zeros((1, 0), dtype=np.int64)

    # bit-length bound decides between int64 and exact Python ints
    bits = sum(math.log2(q) for v in used for q in [denoms[g.levels[v] - 1]]) + math.log2(len(assign) + 1)
    dtype = np.int64 if bits < 62 else object

    weight = np.ones(len(assign), dtype=dtype)
    for v in inner:
        weight = weight * iw[g.levels[v] - 1][assign[:, col[v]]].astype(dtype)
    by_end: dict[int, list[tuple[int, ...]]] = {}
    for p in paths:
        by_end.setdefault(p[-1], []).append(p)
    last_w = iw[n - 1]
    for v in last:
        allowed_mass = np.zeros(len(assign), dtype=dtype)
        for c in range(grid.shape[n - 1]):
            ok = np.ones(len(assign), dtype=bool)
            for p in by_end[v]:
                idx = tuple(assign[:, col[u]] for u in p[:-1]) + (np.full(len(assign), c),)
                ok &= ind[idx]
            allowed_mass = allowed_mass + ok.astype(dtype) * int(last_w[c])
        weight = weight * allowed_mass
    total = int(weight.sum())
    denom = math.prod(denoms[g.levels[v] - 1] for v in used)
    return Fraction(total, denom)


def some_path_prob_graded(g: GradedGraph, b_set: BoxUnion) -> Fraction:
    grid = b_set.grid()
    complement = grid.to_union(~grid.indicator(b_set))
    return 1 - all_paths_prob_graded(g, complement)


@dataclass(frozen=True)
class ConjectureReport:
    lhs: Fraction
    rhs: Fraction
    holds: bool
    full_paths: int


def conjecture_scan(g: GradedGraph, b_set: BoxUnion) -> ConjectureReport:
    """Compare 1 - P(B; G) with (1 - mu^n(B))^K(G), both exactly."""
    k = count_full_paths(g)
    lhs = 1 - some_path_prob_graded(g, b_set) if k else Fraction(1)
    rhs = (1 - b_set.measure) ** k
    return ConjectureReport(lhs, rhs, lhs >= rhs, k)


def format_prob(x) -> str:
    if isinstance(x, Fraction):
        return f"{x} ({float(x):.12g})"
    return f"{x:.12g}"
