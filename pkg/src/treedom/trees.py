"""Finite rooted trees, spherically symmetric constructions and graded graphs."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ContractError, SizeError
from .growth import GrowthFunction

DEFAULT_VERTEX_CAP = 10**7


class RootedTree:
    """Immutable rooted tree with vertex 0 as the root.

    Vertices are numbered in insertion order and every parent precedes its
    children, so the children of a vertex are listed in increasing id order.
    """

    __slots__ = ("_parent", "_depth", "__dict__")

    def __init__(self, parent: Sequence[int]):
        parent = np.asarray(parent, dtype=np.int64)
        if parent.ndim != 1 or len(parent) == 0:
            raise ContractError("a tree needs at least the root")
        if parent[0] != -1:
            raise ContractError("vertex 0 must be the root (parent -1)")
        ids = np.arange(len(parent))
        if len(parent) > 1 and not np.all((parent[1:] >= 0) & (parent[1:] < ids[1:])):
            raise ContractError("every non-root vertex needs a parent with a smaller id")
        depth = np.zeros(len(parent), dtype=np.int64)
        safe_parent = np.maximum(parent, 0)
        # fixed point of depth = depth[parent] + 1; converges in height sweeps
        while True:
            nxt = depth[safe_parent] + 1
            nxt[0] = 0
            if np.array_equal(nxt, depth):
                break
            depth = nxt
        parent.setflags(write=False)
        depth.setflags(write=False)
        self._parent = parent
        self._depth = depth

    @property
    def parent(self) -> np.ndarray:
        return self._parent

    @property
    def depth(self) -> np.ndarray:
        return self._depth

    def __len__(self) -> int:
        return len(self._parent)

    @property
    def root(self) -> int:
        return 0

    @cached_property
    def height(self) -> int:
        return int(self._depth.max())

    @cached_property
    def _child_csr(self) -> tuple[np.ndarray, np.ndarray]:
        par = self._parent[1:]
        order = np.argsort(par, kind="stable") + 1
        counts = np.bincount(par, minlength=len(self))
        offsets = np.concatenate(([0], np.cumsum(counts)))
        return offsets, order

    def children(self, v: int) -> tuple[int, ...]:
        offsets, order = self._child_csr
        return tuple(int(c) for c in order[offsets[v]:offsets[v + 1]])

    def num_children(self, v: int) -> int:
        offsets, _ = self._child_csr
        return int(offsets[v + 1] - offsets[v])

    def generation_sizes(self) -> list[int]:
        """Sizes |Gamma_1|, ..., |Gamma_height|."""
        counts = np.bincount(self._depth, minlength=self.height + 1)
        return [int(c) for c in counts[1:]]

    def level(self, n: int) -> list[int]:
        return [int(v) for v in np.flatnonzero(self._depth == n)]

    def leaves(self) -> list[int]:
        offsets, _ = self._child_csr
        return [int(v) for v in np.flatnonzero(np.diff(offsets) == 0)]

    def is_ragged(self) -> bool:
        """True if some leaf sits above the bottom level."""
        return any(self._depth[v] != self.height for v in self.leaves())

    def truncate(self, n: int) -> "RootedTree":
        keep = np.flatnonzero(self._depth <= n)
        remap = -np.ones(len(self), dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        par = self._parent[keep]
        return RootedTree(np.where(par >= 0, remap[np.maximum(par, 0)], -1))

    def subtree_nested(self, v: int = 0) -> list:
        """Children structure below ``v`` as nested lists."""
        out: list = []
        stack = [(v, out)]
        while stack:
            u, slot = stack.pop()
            for c in self.children(u):
                sub: list = []
                slot.append(sub)
                stack.append((c, sub))
        return out

    @cached_property
    def shape_ids(self) -> np.ndarray:
        """Isomorphism-class id of the subtree below each vertex.

        Two vertices share an id iff their subtrees are isomorphic as
        unordered rooted trees.
        """
        ids = np.zeros(len(self), dtype=np.int64)
        table: dict[tuple[int, ...], int] = {}
        for v in range(len(self) - 1, -1, -1):
            key = tuple(sorted(int(ids[c]) for c in self.children(v)))
            ids[v] = table.setdefault(key, len(table))
        return ids

    @classmethod
    def from_nested(cls, children: Iterable) -> "RootedTree":
        """Build from nested child lists: ``[[], [[]]]`` is a root with two
        children, the second of which has one child."""
        parent = [-1]
        # breadth-first keeps ids level-ordered and children contiguous
        queue = [(0, list(children))]
        head = 0
        while head < len(queue):
            p, kids = queue[head]
            head += 1
            for k in kids:
                parent.append(p)
                queue.append((len(parent) - 1, list(k)))
        return cls(parent)

    def to_json_obj(self) -> dict[str, Any]:
        def node(v):
            return {"children": [node(c) for c in self.children(v)]}

        return node(0)

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "RootedTree":
        def strip(node):
            return [strip(c) for c in node.get("children", [])]

        return cls.from_nested(strip(obj))

    @classmethod
    def from_json(cls, text: str) -> "RootedTree":
        return cls.from_json_obj(json.loads(text))

    def __eq__(self, other) -> bool:
        return isinstance(other, RootedTree) and np.array_equal(self._parent, other._parent)

    def __hash__(self) -> int:
        return hash(self._parent.tobytes())

    def __repr__(self) -> str:
        return f"RootedTree(n={len(self)}, sizes={self.generation_sizes()})"


def build_spherical(f: GrowthFunction, depth: int, cap: int = DEFAULT_VERTEX_CAP) -> RootedTree:
    """Materialize the first ``depth`` levels of the spherically symmetric tree."""
    if depth < 1:
        raise ContractError("depth must be a positive integer")
    total, width = 1, 1
    for n in range(1, depth + 1):
        width *= f(n)
        total += width
        if total > cap:
            raise SizeError(f"spherical tree exceeds the {cap}-vertex cap at level {n} "
                            f"(|Gamma_{n}| = {width})")
    parts = [np.array([-1], dtype=np.int64)]
    start, width = 0, 1
    for n in range(1, depth + 1):
        parts.append(np.repeat(np.arange(start, start + width, dtype=np.int64), f(n)))
        start += width
        width *= f(n)
    return RootedTree(np.concatenate(parts))


def build_paths_tree(n: int, k: int) -> RootedTree:
    """T(n, k): k disjoint paths of length n glued at the root."""
    if n < 1 or k < 1:
        raise ContractError("n and k must be positive")
    return RootedTree.from_nested([_path(n - 1) for _ in range(k)])


def _path(length: int) -> list:
    node: list = []
    for _ in range(length):
        node = [node]
    return node


def figure1_trees() -> tuple[RootedTree, RootedTree]:
    """The height-3 pair where gluing the first generation lowers the
    all-paths probability for some sets."""
    gamma = RootedTree.from_nested([
        [[[], [], []]],
        [[[]], [[]]],
    ])
    gamma_prime = RootedTree.from_nested([
        [[[], [], []], [[]], [[]]],
    ])
    return gamma, gamma_prime


def partition(values: Iterable[int]) -> tuple[int, ...]:
    """Nonincreasing tuple of nonnegative integers."""
    vals = tuple(int(v) for v in values)
    if any(v < 0 for v in vals):
        raise ContractError("partition entries must be nonnegative")
    return tuple(sorted(vals, reverse=True))


def children_partition(tree: RootedTree) -> tuple[int, ...]:
    """Sorted children counts of the first-generation vertices.

    Height-1 trees (a star with an empty second generation) give all zeros.
    """
    if tree.height not in (1, 2):
        raise ContractError(f"children_partition needs height 2, got {tree.height}")
    return partition(tree.num_children(v) for v in tree.children(0))


def tree_from_partition(parts: Iterable[int]) -> RootedTree:
    """Height-2 tree whose first-generation vertices have the given numbers
    of children. Zero entries contribute no length-2 path and are dropped."""
    parts = [p for p in partition(parts) if p > 0]
    if not parts:
        raise ContractError("partition has no positive part")
    return RootedTree.from_nested([[[] for _ in range(p)] for p in parts])


@dataclass(frozen=True)
class GradedGraph:
    """Vertices on levels 1..n with oriented edges from level i to i + 1."""

    levels: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        levels = tuple(int(x) for x in self.levels)
        if any(x < 1 for x in levels):
            raise ContractError("levels are numbered from 1")
        edges = tuple(sorted({(int(u), int(v)) for u, v in self.edges}))
        for u, v in edges:
            if not (0 <= u < len(levels) and 0 <= v < len(levels)):
                raise ContractError(f"edge {(u, v)} references an unknown vertex")
            if levels[v] != levels[u] + 1:
                raise ContractError(f"edge {(u, v)} does not span consecutive levels")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "edges", edges)

    @property
    def height(self) -> int:
        return max(self.levels, default=0)

    def level(self, i: int) -> list[int]:
        return [v for v, lv in enumerate(self.levels) if lv == i]

    def successors(self, u: int) -> list[int]:
        return [v for a, v in self.edges if a == u]

    def predecessors(self, v: int) -> list[int]:
        return [u for u, b in self.edges if b == v]

    def full_paths(self) -> list[tuple[int, ...]]:
        paths = [(v,) for v in self.level(1)]
        for _ in range(2, self.height + 1):
            paths = [p + (w,) for p in paths for w in self.successors(p[-1])]
        return paths

    @classmethod
    def from_tree(cls, tree: RootedTree) -> "GradedGraph":
        """Drop the root; level i holds the depth-i vertices."""
        levels = tuple(int(d) for d in tree.depth[1:])
        edges = tuple((int(tree.parent[v]) - 1, v - 1)
                      for v in range(1, len(tree)) if tree.parent[v] != 0)
        return cls(levels, edges)


def count_full_paths(g: GradedGraph) -> int:
    """Number of oriented paths visiting every level 1..n."""
    if g.height == 0:
        return 0
    ways = Counter({v: 1 for v in g.level(1)})
    for i in range(2, g.height + 1):
        nxt: Counter = Counter()
        for u, v in g.edges:
            if g.levels[u] == i - 1:
                nxt[v] += ways[u]
        ways = nxt
    return sum(ways[v] for v in g.level(g.height))
