"""Shared oracles and random-instance helpers for the test suite."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
import pytest

from treedom.boxes import Box, BoxUnion
from treedom.trees import GradedGraph, RootedTree

ENDPOINTS = tuple(Fraction(x) for x in ("0", "1/4", "1/3", "1/2", "2/3", "3/4", "1"))


def random_union(rng: np.random.Generator, dim: int, max_boxes: int = 3) -> BoxUnion:
    boxes = []
    for _ in range(int(rng.integers(1, max_boxes + 1))):
        lo, hi = [], []
        for _ in range(dim):
            a, b = sorted(rng.choice(len(ENDPOINTS), size=2, replace=False))
            lo.append(ENDPOINTS[a])
            hi.append(ENDPOINTS[b])
        boxes.append(Box(tuple(lo), tuple(hi)))
    return BoxUnion(dim, boxes)


def random_tree(rng: np.random.Generator, height: int, max_children: int = 3,
                ragged: bool = False) -> RootedTree:
    """Random tree of exactly the given height (all leaves at the bottom
    unless ``ragged``)."""

    def grow(level):
        if level == height:
            return []
        lo = 0 if ragged and level > 0 else 1
        k = int(rng.integers(lo, max_children + 1))
        return [grow(level + 1) for _ in range(k)]

    while True:
        t = RootedTree.from_nested(grow(0))
        if t.height == height:
            return t


def brute_all_paths(levels, paths, d: BoxUnion) -> Fraction:
    """P(every listed path has its label vector in D), by enumerating one
    grid cell per vertex. Vertex v carries a label on axis levels[v] - 1."""
    axes = [d.breakpoints(a) for a in range(d.dim)]
    widths = [[b - a for a, b in zip(ax, ax[1:])] for ax in axes]

    def member(cells):
        mid = [(axes[a][i] + axes[a][i + 1]) / 2 for a, i in enumerate(cells)]
        return d.contains(mid)

    verts = sorted({v for p in paths for v in p})
    total = Fraction(0)
    for choice in itertools.product(*(range(len(widths[levels[v] - 1])) for v in verts)):
        cell = dict(zip(verts, choice))
        if all(member([cell[v] for v in p]) for p in paths):
            w = Fraction(1)
            for v in verts:
                w *= widths[levels[v] - 1][cell[v]]
            total += w
    return total


def brute_tree_all_paths(tree: RootedTree, d: BoxUnion) -> Fraction:
    n = d.dim
    depth = tree.depth
    paths = []
    for leaf in tree.level(n):
        p, v = [], leaf
        while v != 0:
            p.append(int(v))
            v = int(tree.parent[v])
        paths.append(tuple(reversed(p)))
    return brute_all_paths({v: int(depth[v]) for v in range(len(tree))}, paths, d)


def brute_graded_all_paths(g: GradedGraph, d: BoxUnion) -> Fraction:
    return brute_all_paths(dict(enumerate(g.levels)), g.full_paths(), d)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(12345))


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(k, ok, detail)`` records and prints the verdict line for
    acceptance criterion k, then asserts it."""

    def record(k: int, ok: bool, detail: str) -> None:
        line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE[k] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
