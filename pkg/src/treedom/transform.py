"""The nondecreasing regularization f~ of a growth function and explosion
classification.

``ln f~`` is the sequence of increments of the greatest convex minorant of
the points ``(n, sum_{j<=n} ln f(j))`` anchored at the origin. Because f~(n)
depends on f arbitrarily far past n, every computation runs on a window
``1..N`` with an explicit look-ahead horizon ``H`` and reports which window
indices do not move when the horizon is doubled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ContractError, InsufficientDataError
from .growth import GrowthFunction, Tail

TIE_TOL = 1e-12
CONTACT_TOL = 1e-9


def kahan_cumsum(values) -> np.ndarray:
    out = np.empty(len(values))
    total = comp = 0.0
    for i, v in enumerate(values):
        y = float(v) - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    return out


def _cumulative_logs(log_f: np.ndarray) -> np.ndarray:
    return np.concatenate(([0.0], np.cumsum(log_f)))


def lower_hull(cum: np.ndarray) -> list[int]:
    """Indices of the greatest convex minorant vertices of ``(i, cum[i])``.

    Collinear points within the tie tolerance are kept as vertices.
    """
    hull: list[int] = []
    for c in range(len(cum)):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            on_chord = cum[a] + (cum[c] - cum[a]) * (b - a) / (c - a)
            if cum[b] - on_chord > TIE_TOL * max(1.0, abs(cum[b])):
                hull.pop()
            else:
                break
        hull.append(c)
    return hull


def regularize_logs(log_f) -> np.ndarray:
    """ln f~ for a finite sequence ln f(1), ..., ln f(M) (hull over all M)."""
    log_f = np.asarray(log_f, dtype=float)
    cum = _cumulative_logs(log_f)
    hull = lower_hull(cum)
    out = np.empty(len(log_f))
    for a, b in zip(hull, hull[1:]):
        if b - a == 1:
            out[a] = log_f[a]
        else:
            out[a:b] = (cum[b] - cum[a]) / (b - a)
    return out


@dataclass
class RegularizedGrowth:
    growth: GrowthFunction
    window: int
    horizon: int
    log_values: np.ndarray
    stable: np.ndarray
    exact: np.ndarray = field(repr=False)
    discrepancy: Optional[float] = None

    @property
    def values(self) -> np.ndarray:
        """f~(1..N); entries equal to f(n) are returned as exactly that integer."""
        out = np.exp(self.log_values)
        for i in np.flatnonzero(self.exact):
            try:
                out[i] = float(self.growth(i + 1))
            except OverflowError:
                pass
        return out

    @property
    def cumulative_log(self) -> np.ndarray:
        return np.cumsum(self.log_values)

    def inverse_power_terms(self, alpha: float = 1.0) -> np.ndarray:
        return np.exp(-self.log_values / alpha)

    def normalizer(self, alpha: float = 1.0) -> np.ndarray:
        """sum_{j<=n} f~(j)^(-1/alpha) for n = 1..N."""
        return kahan_cumsum(self.inverse_power_terms(alpha))

    @property
    def all_stable(self) -> bool:
        return bool(self.stable.all())


def _available(f: GrowthFunction, wanted: int) -> int:
    known = f.known_length
    return wanted if known is None else min(wanted, known)


def _check_window(f: GrowthFunction, N: int, H: int) -> None:
    if N < 1 or H < 0:
        raise ContractError("need N >= 1 and H >= 0")
    known = f.known_length
    if known is not None and N + H > known:
        raise InsufficientDataError(
            f"table-only growth function has {known} values but N + H = {N + H} are needed")


def _hull_logs(f: GrowthFunction, N: int, total: int) -> tuple[np.ndarray, np.ndarray]:
    log_f = np.array(f.log_values(total))
    reg = regularize_logs(log_f)[:N]
    exact = np.isclose(reg, log_f[:N], rtol=0, atol=0)
    return reg, exact


def _stability(f: GrowthFunction, N: int, H: int, reg: np.ndarray) -> np.ndarray:
    known = f.known_length
    wider = max(2 * H, N) if H else N
    target = N + wider
    if known is not None:
        target = min(target, known)
    if target <= N + H:
        # no further data exists: the window is final
        return np.ones(N, dtype=bool)
    other, _ = _hull_logs(f, N, target)
    same = np.abs(other - reg) <= TIE_TOL * np.maximum(1.0, np.abs(reg))
    return np.logical_and.accumulate(same)


def tilde_f_hull(f: GrowthFunction, N: int, H: Optional[int] = None) -> RegularizedGrowth:
    """f~ on 1..N from the convex minorant of cumulative logs over 0..N+H."""
    H = N if H is None else H
    _check_window(f, N, H)
    reg, exact = _hull_logs(f, N, N + H)
    return RegularizedGrowth(f, N, H, reg, _stability(f, N, H, reg), exact)


def tilde_f_recursive(f: GrowthFunction, N: int, H: Optional[int] = None) -> RegularizedGrowth:
    """f~ on 1..N straight from the recursive supremum, m truncated to N+H-n.

    ln f~(n+1) = min_{m>=1} (L(n+m) - L~(n)) / m with L the cumulative logs
    of f and L~ those of f~.
    """
    H = N if H is None else H
    _check_window(f, N, H)
    log_f = np.array(f.log_values(N + H))
    cum = _cumulative_logs(log_f)
    out = np.empty(N)
    acc = 0.0
    for n in range(N):
        steps = np.arange(1, N + H - n + 1)
        slopes = (cum[n + 1:N + H + 1] - acc) / steps
        out[n] = slopes.min()
        acc += out[n]
    hull = tilde_f_hull(f, N, H)
    exact = np.abs(out - log_f[:N]) <= TIE_TOL * np.maximum(1.0, np.abs(log_f[:N]))
    out = np.where(exact, log_f[:N], out)
    diff = np.abs(out - hull.log_values)[hull.stable]
    return RegularizedGrowth(f, N, H, out, hull.stable.copy(), exact,
                             discrepancy=float(diff.max()) if len(diff) else 0.0)


def equal_product_indices(f: GrowthFunction, N: int, H: Optional[int] = None) -> list[int]:
    """Indices n <= N where prod f~(i) = prod f(i) (contact points)."""
    reg = tilde_f_hull(f, N, H)
    cum_t = reg.cumulative_log
    cum_f = np.cumsum(f.log_values(N))
    hits = np.abs(cum_t - cum_f) <= CONTACT_TOL * np.maximum(1.0, np.abs(cum_f))
    return [int(i) + 1 for i in np.flatnonzero(hits)]


def limit_constant(alpha: float, c: float = 1.0) -> float:
    """alpha e^-1 (c Gamma(1 + alpha))^(-1/alpha)."""
    if alpha <= 0 or c <= 0:
        raise ContractError("alpha and c must be positive")
    return alpha / math.e * (c * math.gamma(1 + alpha)) ** (-1 / alpha)


@dataclass
class ClassificationVerdict:
    regime: str  # "explosion" | "no-explosion"
    definitive: bool
    alpha: float
    partial_sums: list[tuple[int, float]]
    notes: str = ""

    def to_json(self) -> dict:
        return {"regime": self.regime, "definitive": self.definitive, "alpha": self.alpha,
                "partial_sums": [{"n": n, "sum": s} for n, s in self.partial_sums],
                "notes": self.notes}


def _growth_order(tail: Tail) -> tuple[str, float, float]:
    """(kind, degree, log power) of a nondecreasing closed-form rule."""
    if tail.kind == "constant" or (tail.kind == "exponential" and tail.base == 1):
        return ("poly", 0.0, 0.0)
    if tail.kind == "exponential":
        return ("exp", 0.0, 0.0)
    if tail.kind == "polynomial":
        return ("poly", float(tail.degree), float(tail.log_power))
    raise ContractError(f"no growth order for tail kind {tail.kind}")


def series_converges(tail: Tail, alpha: float) -> bool:
    """Does sum f~(n)^(-1/alpha) converge for a growth function with this tail?

    Eventually nondecreasing closed forms have f~ = f eventually. An
    interleaved tail is judged by the geometric mean of its two rules, which
    is what f~ pairs up to when both halves are nondecreasing.
    """
    if tail.kind == "interleave":
        a, b = _growth_order(tail.odd), _growth_order(tail.even)
        if "exp" in (a[0], b[0]):
            return True
        kind, d, e = "poly", (a[1] + b[1]) / 2, (a[2] + b[2]) / 2
    else:
        kind, d, e = _growth_order(tail)
    if kind == "exp":
        return True
    if d / alpha != 1:
        return d / alpha > 1
    return e / alpha > 1


def checkpoints(N: int) -> list[int]:
    pts, p = [], 10
    while p < N:
        pts.append(p)
        p *= 10
    pts.append(N)
    return pts


def classify(f: GrowthFunction, alpha: float = 1.0, N: int = 1000) -> ClassificationVerdict:
    """Explosion iff sum f~(n)^(-1/alpha) converges."""
    if alpha <= 0:
        raise ContractError("alpha must be positive")
    if f.table_only:
        N = min(N, len(f.prefix))
        reg = tilde_f_hull(f, N, len(f.prefix) - N)
    else:
        reg = tilde_f_hull(f, N, N)
    sums = reg.normalizer(alpha)
    partial = [(n, float(sums[n - 1])) for n in checkpoints(N)]
    if not f.table_only:
        conv = series_converges(f.tail, alpha)
        return ClassificationVerdict("explosion" if conv else "no-explosion", True, alpha,
                                     partial, f"analytic rule for {f.tail.kind} tail")
    # finite data cannot decide convergence; report the last doubling window
    half = sums[N // 2 - 1] if N >= 2 else 0.0
    share = (sums[-1] - half) / sums[-1] if sums[-1] > 0 else 0.0
    regime = "explosion" if share < 0.05 else "no-explosion"
    return ClassificationVerdict(regime, False, alpha, partial,
                                 f"evidence only: last doubling window holds {share:.3g} of the sum")


def criterion_general_G(f: GrowthFunction, ginv: Callable[[float], float],
                        N: int) -> list[tuple[int, float]]:
    """Partial sums of G^-1(1 / f(n)) at checkpoints; exploratory only."""
    terms = []
    for n in range(1, N + 1):
        try:
            terms.append(float(ginv(1.0 / f(n))))
        except (ValueError, ArithmeticError) as exc:
            raise ContractError(f"G^-1 failed at n={n}: {exc}") from exc
    sums = kahan_cumsum(terms)
    return [(n, float(sums[n - 1])) for n in checkpoints(N)]
