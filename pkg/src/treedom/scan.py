"""Random small instances for the graded-graph inequality scan."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .boxes import Box, BoxUnion
from .domination import ConjectureReport, conjecture_scan
from .rng import replica_generator
from .trees import GradedGraph

ENDPOINTS = tuple(Fraction(x) for x in ("0", "1/3", "1/2", "2/3", "1"))


def random_graded_graph(rng: np.random.Generator, max_levels: int = 3,
                        max_vertices: int = 8, edge_prob: float = 0.5) -> GradedGraph:
    n = int(rng.integers(1, max_levels + 1))
    budget = int(rng.integers(n, max_vertices + 1))
    counts = [1] * n
    for _ in range(budget - n):
        counts[int(rng.integers(n))] += 1
    levels = [i + 1 for i, c in enumerate(counts) for _ in range(c)]
    edges = [(u, v) for u in range(len(levels)) for v in range(len(levels))
             if levels[v] == levels[u] + 1 and rng.random() < edge_prob]
    return GradedGraph(tuple(levels), tuple(edges))


def random_box_union(rng: np.random.Generator, dim: int, max_boxes: int = 2,
                     endpoints=ENDPOINTS) -> BoxUnion:
    boxes = []
    for _ in range(int(rng.integers(1, max_boxes + 1))):
        lo, hi = [], []
        for _ in range(dim):
            a, b = sorted(rng.choice(len(endpoints), size=2, replace=False))
            lo.append(endpoints[a])
            hi.append(endpoints[b])
        boxes.append(Box(tuple(lo), tuple(hi)))
    return BoxUnion(dim, boxes)


@dataclass
class ScanInstance:
    index: int
    graph: GradedGraph
    b_set: BoxUnion
    report: ConjectureReport

    def to_json(self) -> dict:
        return {"index": self.index,
                "levels": list(self.graph.levels),
                "edges": [list(e) for e in self.graph.edges],
                "set": self.b_set.to_json_obj(),
                "lhs": str(self.report.lhs), "rhs": str(self.report.rhs),
                "full_paths": self.report.full_paths, "holds": self.report.holds}


def run_scan(count: int, seed: int, max_levels: int = 3, max_vertices: int = 8,
             sets_per_graph: int = 1) -> list[ScanInstance]:
    """Instance i draws from replica stream i of ``seed``, so any single
    instance can be regenerated from (seed, index)."""
    out = []
    for i in range(count):
        rng = replica_generator(seed, i)
        g = random_graded_graph(rng, max_levels, max_vertices)
        for _ in range(sets_per_graph):
            b = random_box_union(rng, g.height)
            out.append(ScanInstance(i, g, b, conjecture_scan(g, b)))
    return out


def first_violation(instances: list[ScanInstance]) -> Optional[ScanInstance]:
    return next((x for x in instances if not x.report.holds), None)
