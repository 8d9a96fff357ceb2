"""Finite unions of closed rational boxes in [0, 1]^n.

Exact evaluation works on a grid: the breakpoints of every box along each
axis cut [0, 1]^n into cells, and a union of boxes is (up to measure zero)
a boolean array over those cells. Cross-sections are then slices of that
array and integrals become finite rational sums.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ContractError, SizeError

DEFAULT_CELL_CAP = 10**6

_ZERO, _ONE = Fraction(0), Fraction(1)


@dataclass(frozen=True)
class Box:
    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self):
        lo = tuple(Fraction(x) for x in self.lo)
        hi = tuple(Fraction(x) for x in self.hi)
        if len(lo) != len(hi):
            raise ContractError("box bounds differ in dimension")
        for a, b in zip(lo, hi):
            if not (0 <= a <= b <= 1):
                raise ContractError(f"box interval [{a}, {b}] is not inside [0, 1]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def measure(self) -> Fraction:
        out = _ONE
        for a, b in zip(self.lo, self.hi):
            out *= b - a
        return out

    def contains(self, x: Sequence) -> bool:
        return all(a <= xi <= b for a, xi, b in zip(self.lo, x, self.hi))


class BoxUnion:
    """A set D in [0, 1]^n given as a finite union of boxes."""

    def __init__(self, dim: int, boxes: Iterable[Box] = ()):
        if dim < 1:
            raise ContractError("dimension must be >= 1")
        boxes = tuple(boxes)
        for b in boxes:
            if b.dim != dim:
                raise ContractError(f"box of dimension {b.dim} in a {dim}-dimensional union")
        self.dim = dim
        self.boxes = boxes

    @classmethod
    def from_intervals(cls, *boxes: Sequence[tuple]) -> "BoxUnion":
        """``from_intervals([(0, "1/2"), (0, 1)], ...)``: each box as a list of
        per-axis ``(lo, hi)`` pairs."""
        built = [Box(tuple(a for a, _ in b), tuple(c for _, c in b)) for b in boxes]
        if not built:
            raise ContractError("use BoxUnion.empty(dim) for the empty set")
        return cls(built[0].dim, built)

    @classmethod
    def empty(cls, dim: int) -> "BoxUnion":
        return cls(dim, ())

    @classmethod
    def full(cls, dim: int) -> "BoxUnion":
        return cls(dim, (Box((_ZERO,) * dim, (_ONE,) * dim),))

    @classmethod
    def cube(cls, dim: int, hi) -> "BoxUnion":
        return cls(dim, (Box((_ZERO,) * dim, (Fraction(hi),) * dim),))

    def breakpoints(self, axis: int) -> tuple[Fraction, ...]:
        pts = {_ZERO, _ONE}
        for b in self.boxes:
            pts.add(b.lo[axis])
            pts.add(b.hi[axis])
        return tuple(sorted(pts))

    def grid(self, cap: int = DEFAULT_CELL_CAP) -> "Grid":
        return Grid.for_sets([self], cap=cap)

    def indicator(self, grid: "Grid | None" = None) -> np.ndarray:
        grid = grid or self.grid()
        return grid.indicator(self)

    @property
    def measure(self) -> Fraction:
        grid = self.grid()
        return grid.measure(grid.indicator(self))

    def complement(self, cap: int = DEFAULT_CELL_CAP) -> "BoxUnion":
        grid = Grid.for_sets([self], cap=cap)
        return grid.to_union(~grid.indicator(self))

    def cross_section(self, x) -> "BoxUnion":
        """{(x_2, ..., x_n) : (x, x_2, ..., x_n) in D}."""
        if self.dim < 2:
            raise ContractError("cross-section needs dimension >= 2")
        x = Fraction(x)
        kept = [Box(b.lo[1:], b.hi[1:]) for b in self.boxes if b.lo[0] <= x <= b.hi[0]]
        return BoxUnion(self.dim - 1, kept)

    def contains(self, x: Sequence) -> bool:
        return any(b.contains(x) for b in self.boxes)

    def to_json_obj(self) -> dict[str, Any]:
        return {"dim": self.dim,
                "boxes": [{"lo": [str(v) for v in b.lo], "hi": [str(v) for v in b.hi]}
                          for b in self.boxes]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "BoxUnion":
        boxes = [Box(tuple(Fraction(v) for v in b["lo"]), tuple(Fraction(v) for v in b["hi"]))
                 for b in obj["boxes"]]
        return cls(int(obj["dim"]), boxes)

    @classmethod
    def from_json(cls, text: str) -> "BoxUnion":
        return cls.from_json_obj(json.loads(text))

    def __repr__(self) -> str:
        def iv(a, b):
            return f"[{a},{b}]"

        parts = ["x".join(iv(a, b) for a, b in zip(bx.lo, bx.hi)) for bx in self.boxes]
        return f"BoxUnion({self.dim}: {' u '.join(parts) or 'empty'})"


class Grid:
    """Product of per-axis breakpoint lists."""

    def __init__(self, axes: Sequence[Sequence[Fraction]], cap: int = DEFAULT_CELL_CAP):
        self.axes = tuple(tuple(Fraction(p) for p in ax) for ax in axes)
        for ax in self.axes:
            if ax[0] != 0 or ax[-1] != 1 or any(a >= b for a, b in zip(ax, ax[1:])):
                raise ContractError("grid axis must increase strictly from 0 to 1")
        self.shape = tuple(len(ax) - 1 for ax in self.axes)
        cells = 1
        for s in self.shape:
            cells *= s
        if cells > cap:
            raise SizeError(f"grid has {cells} cells, above the cap of {cap}")
        self.widths = tuple(tuple(b - a for a, b in zip(ax, ax[1:])) for ax in self.axes)

    @classmethod
    def for_sets(cls, sets: Sequence[BoxUnion], cap: int = DEFAULT_CELL_CAP) -> "Grid":
        dims = {s.dim for s in sets}
        if len(dims) != 1:
            raise ContractError("sets on one grid must share a dimension")
        dim = dims.pop()
        axes = []
        for axis in range(dim):
            pts = set()
            for s in sets:
                pts.update(s.breakpoints(axis))
            axes.append(sorted(pts))
        return cls(axes, cap=cap)

    @property
    def dim(self) -> int:
        return len(self.axes)

    def indicator(self, d: BoxUnion) -> np.ndarray:
        if d.dim != self.dim:
            raise ContractError("set and grid dimensions differ")
        out = np.zeros(self.shape, dtype=bool)
        for b in d.boxes:
            sl = []
            for axis, ax in enumerate(self.axes):
                i, j = ax.index(b.lo[axis]), ax.index(b.hi[axis])
                sl.append(slice(i, j))
            out[tuple(sl)] = True
        return out

    def measure(self, ind: np.ndarray) -> Fraction:
        total = _ZERO
        for idx in zip(*np.nonzero(ind)):
            cell = _ONE
            for axis, i in enumerate(idx):
                cell *= self.widths[axis][i]
            total += cell
        return total

    def to_union(self, ind: np.ndarray) -> BoxUnion:
        """Boxes covering the marked cells; runs along the last axis are merged."""
        boxes = []
        lead_shape = ind.shape[:-1]
        last = self.axes[-1]
        for lead in itertools.product(*(range(s) for s in lead_shape)):
            row = ind[lead]
            j = 0
            while j < len(row):
                if not row[j]:
                    j += 1
                    continue
                k = j
                while k < len(row) and row[k]:
                    k += 1
                lo = tuple(self.axes[a][i] for a, i in enumerate(lead)) + (last[j],)
                hi = tuple(self.axes[a][i + 1] for a, i in enumerate(lead)) + (last[k],)
                boxes.append(Box(lo, hi))
                j = k
        return BoxUnion(self.dim, boxes)


def counterexample_D() -> BoxUnion:
    """([0,1/2] x [0,1] x [0,2/3]) u ([1/2,1] x [0,1/2] x [0,1])."""
    h, t = Fraction(1, 2), Fraction(2, 3)
    return BoxUnion.from_intervals(
        [(0, h), (0, 1), (0, t)],
        [(h, 1), (0, h), (0, 1)],
    )


def witness_set_height2(r: int, eps) -> BoxUnion:
    """([0, eps^r] x [0, 1]) u ([0, 1] x [0, eps])."""
    eps = Fraction(eps)
    if r < 1:
        raise ContractError("r must be a positive integer")
    if not 0 < eps < 1:
        raise ContractError("eps must lie strictly between 0 and 1")
    return BoxUnion.from_intervals(
        [(0, eps**r), (0, 1)],
        [(0, 1), (0, eps)],
    )
