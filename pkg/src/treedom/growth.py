"""Integer growth functions f(n) >= 1: an explicit prefix followed by a tail rule.

The tail rule is evaluated at the absolute index n, so ``f(n)`` for
``n > len(prefix)`` is ``rule(n)``. Interleaved tails evaluate their odd
rule at ``(n + 1) // 2`` and their even rule at ``n // 2``, which gives
``f(2m - 1) = odd(m)`` and ``f(2m) = even(m)``.
"""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Optional

from .errors import ContractError, InsufficientDataError

TAIL_KINDS = ("table", "constant", "polynomial", "exponential", "interleave")


def _ceil_at_least_one(x) -> int:
    return max(1, math.ceil(x))


@dataclass(frozen=True)
class Tail:
    """Rule for f(n) past the explicit prefix.

    ``polynomial`` means ``ceil(scale * n**degree * ln(n + 1)**log_power)``;
    ``exponential`` means ``ceil(base**n)``.
    """

    kind: str = "table"
    value: int = 1
    degree: Fraction = Fraction(1)
    scale: Fraction = Fraction(1)
    log_power: Fraction = Fraction(0)
    base: Fraction = Fraction(2)
    odd: Optional["Tail"] = None
    even: Optional["Tail"] = None

    def __post_init__(self):
        if self.kind not in TAIL_KINDS:
            raise ContractError(f"unknown tail kind {self.kind!r}")
        for name in ("degree", "scale", "log_power", "base"):
            object.__setattr__(self, name, Fraction(getattr(self, name)))
        if self.kind == "constant" and (int(self.value) != self.value or self.value < 1):
            raise ContractError("constant tail needs an integer value >= 1")
        if self.kind == "polynomial":
            if self.scale <= 0 or self.degree < 0 or self.log_power < 0:
                raise ContractError("polynomial tail needs scale > 0, degree >= 0, log_power >= 0")
        if self.kind == "exponential" and self.base < 1:
            raise ContractError("exponential tail needs base >= 1")
        if self.kind == "interleave":
            if self.odd is None or self.even is None:
                raise ContractError("interleave tail needs odd and even rules")
            for part in (self.odd, self.even):
                if part.kind in ("table", "interleave"):
                    raise ContractError("interleave parts must be closed-form rules")

    @property
    def evaluable(self) -> bool:
        return self.kind != "table"

    def __call__(self, n: int) -> int:
        if self.kind == "table":
            raise InsufficientDataError(f"table-only growth function has no value at n={n}")
        if self.kind == "constant":
            return int(self.value)
        if self.kind == "exponential":
            if self.base.denominator == 1:
                return int(self.base.numerator) ** n
            return _ceil_at_least_one(self.base**n)
        if self.kind == "polynomial":
            if self.log_power == 0 and self.degree.denominator == 1:
                return _ceil_at_least_one(self.scale * n ** int(self.degree))
            val = (float(self.scale) * n ** float(self.degree)
                   * math.log(n + 1) ** float(self.log_power))
            return _ceil_at_least_one(val)
        # interleave
        if n % 2:
            return self.odd((n + 1) // 2)
        return self.even(n // 2)

    @property
    def nondecreasing(self) -> bool:
        return self.kind in ("constant", "polynomial", "exponential")

    def to_json(self) -> dict[str, Any]:
        def num(x: Fraction):
            return int(x) if x.denominator == 1 else str(x)

        if self.kind == "table":
            return {"kind": "table"}
        if self.kind == "constant":
            return {"kind": "constant", "value": int(self.value)}
        if self.kind == "exponential":
            return {"kind": "exponential", "base": num(self.base)}
        if self.kind == "polynomial":
            out = {"kind": "polynomial", "degree": num(self.degree), "scale": num(self.scale)}
            if self.log_power:
                out["log_power"] = num(self.log_power)
            return out
        return {"kind": "interleave", "odd": self.odd.to_json(), "even": self.even.to_json()}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "Tail":
        kind = obj.get("kind", "table")
        if kind == "interleave":
            return cls(kind, odd=cls.from_json(obj["odd"]), even=cls.from_json(obj["even"]))
        kwargs = {k: (Fraction(v) if k != "value" else int(v))
                  for k, v in obj.items() if k != "kind"}
        return cls(kind, **kwargs)


@dataclass(frozen=True)
class GrowthFunction:
    prefix: tuple[int, ...]
    tail: Tail = field(default_factory=Tail)

    def __post_init__(self):
        prefix = tuple(self.prefix)
        if not prefix:
            raise ContractError("growth function prefix must be nonempty")
        for i, v in enumerate(prefix, start=1):
            if int(v) != v or v < 1:
                raise ContractError(f"f({i}) = {v!r} is not a positive integer")
        object.__setattr__(self, "prefix", tuple(int(v) for v in prefix))

    @classmethod
    def from_tail(cls, tail: Tail, prefix_len: int = 1) -> "GrowthFunction":
        return cls(tuple(tail(n) for n in range(1, prefix_len + 1)), tail)

    @classmethod
    def table(cls, values) -> "GrowthFunction":
        return cls(tuple(values))

    @classmethod
    def constant(cls, v: int) -> "GrowthFunction":
        return cls.from_tail(Tail("constant", value=v))

    @classmethod
    def polynomial(cls, degree=1, scale=1, log_power=0) -> "GrowthFunction":
        return cls.from_tail(Tail("polynomial", degree=degree, scale=scale, log_power=log_power))

    @classmethod
    def exponential(cls, base=2) -> "GrowthFunction":
        return cls.from_tail(Tail("exponential", base=base))

    @property
    def table_only(self) -> bool:
        return not self.tail.evaluable

    @property
    def known_length(self) -> Optional[int]:
        """Largest index with a value, or None when the tail is unbounded."""
        return len(self.prefix) if self.table_only else None

    def __call__(self, n: int) -> int:
        n = operator.index(n)  # numpy integers would overflow in exact tails
        if n < 1:
            raise ContractError(f"growth index must be >= 1, got {n}")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.tail(n)

    def values(self, upto: int) -> list[int]:
        return [self(n) for n in range(1, upto + 1)]

    def __iter__(self) -> Iterator[int]:
        n = 1
        while self.known_length is None or n <= self.known_length:
            yield self(n)
            n += 1

    def generation_sizes(self, depth: int) -> list[int]:
        sizes, b = [], 1
        for v in self.values(depth):
            b *= v
            sizes.append(b)
        return sizes

    def log_values(self, upto: int) -> list[float]:
        return [math.log(v) for v in self.values(upto)]

    def is_nondecreasing(self, upto: int) -> bool:
        vals = self.values(upto)
        return all(a <= b for a, b in zip(vals, vals[1:]))

    def to_json(self) -> dict[str, Any]:
        return {"prefix": list(self.prefix), "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> "GrowthFunction":
        tail = Tail.from_json(obj.get("tail", {"kind": "table"}))
        return cls(tuple(obj["prefix"]), tail)


# CLI mini-language: poly:d[,c[,e]]  exp:b  const:v  table:v1,v2,...  alt:<term>,<term>
# where an alt term is an integer, "b^n", "n" or "n^d".
_TERM_EXP = re.compile(r"^(\d+(?:/\d+)?)\^n$")
_TERM_POLY = re.compile(r"^n(?:\^(\d+(?:/\d+)?))?$")


def _parse_term(term: str) -> Tail:
    term = term.strip()
    if term.isdigit():
        return Tail("constant", value=int(term))
    m = _TERM_EXP.match(term)
    if m:
        return Tail("exponential", base=Fraction(m.group(1)))
    m = _TERM_POLY.match(term)
    if m:
        return Tail("polynomial", degree=Fraction(m.group(1) or 1))
    raise ContractError(f"cannot parse growth term {term!r}")


def parse_growth(text: str) -> GrowthFunction:
    """Parse the CLI growth grammar into a GrowthFunction."""
    kind, _, args = text.partition(":")
    parts = [a for a in args.split(",") if a.strip()] if args else []
    try:
        if kind == "poly":
            nums = [Fraction(p) for p in parts] or [Fraction(1)]
            return GrowthFunction.polynomial(*nums)
        if kind == "exp":
            return GrowthFunction.exponential(Fraction(parts[0]) if parts else 2)
        if kind == "const":
            return GrowthFunction.constant(int(parts[0]))
        if kind == "table":
            return GrowthFunction.table(int(p) for p in parts)
        if kind == "alt":
            if len(parts) != 2:
                raise ContractError("alt needs exactly two terms: odd,even")
            tail = Tail("interleave", odd=_parse_term(parts[0]), even=_parse_term(parts[1]))
            return GrowthFunction.from_tail(tail, prefix_len=2)
    except (ValueError, ZeroDivisionError, IndexError) as exc:
        if isinstance(exc, ContractError):
            raise
        raise ContractError(f"cannot parse growth spec {text!r}: {exc}") from exc
    raise ContractError(f"unknown growth kind {kind!r} in {text!r}")
