"""Measure isomorphisms onto the Lebesgue interval and onto fair-coin Cantor space.

``F(x) = mu([0, x])`` sends a non-atomic measure on [0, 1] to Lebesgue
measure.  Its generalized inverses ``G_<(y) = sup{x : F(x) < y}`` and
``G_>(y) = inf{x : F(x) > y}`` agree off a countable set, where F is flat.
Binary expansion and decoding link ([0, 1], Lebesgue) with (Cantor, fair coin).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from .errors import AtomicMeasure, BadParameter, DyadicBoundary, SpaceMismatch, StageBudgetExceeded
from .exact_core import ApproxReal, Ordering, as_rational, const, dyadic, lift, separate_within
from .measures import ComputableMeasure, as_measure
from .spaces import CANTOR, INTERVAL, ApproxPoint, IdealBall, as_point, word_value


class CdfIsomorphism:
    """The CDF map of a non-atomic measure on [0, 1]."""

    def __init__(self, measure: ComputableMeasure, budget: int = 60) -> None:
        measure = as_measure(measure)
        if measure.space is not INTERVAL:
            raise SpaceMismatch("CDF isomorphism needs a measure on [0, 1]")
        if not measure.is_nonatomic:
            raise AtomicMeasure(f"{measure!r} is not known to be non-atomic")
        self.measure = measure
        self.budget = budget

    def bounds_at(self, q, t: int) -> Tuple[Fraction, Fraction]:
        """Enclosure of ``F(q)`` for an exact rational q, at lower-oracle stage t."""
        q = as_rational(q)
        mu = self.measure
        lo = mu.lower([IdealBall(INTERVAL, Fraction(0), q)], t) if q > 0 else Fraction(0)
        hi = 1 - mu.lower([IdealBall(INTERVAL, Fraction(1), 1 - q)], t) if q < 1 else Fraction(1)
        return lo, hi

    def sandwich(self, x, t: int) -> Tuple[Fraction, Fraction]:
        """Enclosure of ``F(x)`` from the query ``x(t)`` shrunk by ``2**-t`` on both sides."""
        q, eps = lift(x)(t), dyadic(t)
        mu = self.measure
        left = q - eps
        right = q + eps
        lo = mu.lower([IdealBall(INTERVAL, Fraction(0), left)], t) if left > 0 else Fraction(0)
        hi = 1 - mu.lower([IdealBall(INTERVAL, Fraction(1), 1 - right)], t) if right < 1 else Fraction(1)
        return lo, hi

    def forward(self, x) -> ApproxReal:
        return cdf_forward(self, x)

    def inverse(self, y, budget: int = 40) -> ApproxReal:
        return cdf_inverse(self, y, budget)

    def compare(self, q: Fraction, y, s: int) -> str:
        """'<' if ``F(q) < y`` is certified at precision s, '>' if ``F(q) > y``, else '?'."""
        lo, hi = self.bounds_at(q, s)
        yq, eps = lift(y)(s), dyadic(s)
        if hi < yq - eps:
            return "<"
        if lo > yq + eps:
            return ">"
        return "?"

    def inverse_envelopes(self, y, stage: int) -> Tuple[Fraction, Fraction]:
        """Grid envelopes ``L <= G_<(y) <= G_>(y) <= U`` on the mesh ``2**-stage``."""
        lo, hi = Fraction(0), Fraction(1)
        for k in range(1, 1 << stage):
            q = Fraction(k, 1 << stage)
            verdict = self.compare(q, y, stage)
            if verdict == "<":
                lo = q
            elif verdict == ">":
                hi = min(hi, q)
                break
        return lo, hi


def cdf_forward(iso: CdfIsomorphism, x) -> ApproxReal:
    """``F(x)`` for a computable x, by shrinking margins ``2**-t``."""
    x = lift(x)

    def oracle(n: int) -> Fraction:
        for t in range(n + 1, n + 1 + iso.budget):
            lo, hi = iso.sandwich(x, t)
            if hi - lo <= 2 * dyadic(n):
                return (lo + hi) / 2
        raise StageBudgetExceeded(f"F(x) brackets did not close to 2^-{n}; atom near x?")

    return ApproxReal(oracle, bound=Fraction(1), label="F(x)")


def cdf_inverse(iso: CdfIsomorphism, y, budget: int = 40) -> ApproxReal:
    """``G(y)`` by certified trisection.

    The bracket ``[lo, hi]`` always has ``F(lo) < y`` and ``F(hi) > y``
    certified (or lo = 0, hi = 1), so it contains both ``G_<(y)`` and
    ``G_>(y)``.  ``budget`` bounds the consecutive precision increases
    without progress.
    """
    y = lift(y)

    def oracle(n: int) -> Fraction:
        lo, hi = Fraction(0), Fraction(1)
        s, stalled = n + 2, 0
        while hi - lo > 2 * dyadic(n):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            c1, c2 = iso.compare(m1, y, s), iso.compare(m2, y, s)
            if c1 == ">":
                hi = m1
            elif c2 == "<":
                lo = m2
            elif c1 == "<" or c2 == ">":
                if c1 == "<":
                    lo = m1
                if c2 == ">":
                    hi = m2
            else:
                s += 1
                stalled += 1
                if stalled > budget:
                    raise StageBudgetExceeded(
                        f"G(y) bracket stuck at [{lo}, {hi}]; F looks flat at level y")
                continue
            stalled = 0
        return (lo + hi) / 2

    return ApproxReal(oracle, bound=Fraction(1), label="G(y)")


# -- binary expansion ----------------------------------------------------------------

def binary_expand(x, k: int, budget: int = 64) -> str:
    """First k binary digits of a non-dyadic x in [0, 1]."""
    x = lift(x)
    if k < 0:
        raise BadParameter("k must be non-negative")
    bits, s = [], Fraction(0)
    for i in range(1, k + 1):
        mid = s + dyadic(i)
        verdict = separate_within(x, const(mid), i + 2, budget)
        if verdict is Ordering.UNSEPARATED:
            raise DyadicBoundary(f"x is within reach of the dyadic {mid}; digit {i} undecided")
        if verdict is Ordering.GREATER:
            bits.append("1")
            s = mid
        else:
            bits.append("0")
    return "".join(bits)


def binary_decode(point) -> ApproxReal:
    """Real with binary digits given by a Cantor point; precision n reads n+1 bits."""
    point = as_point(CANTOR, point)
    return ApproxReal(lambda n: word_value(point.prefix(n + 1)), bound=Fraction(1), label="decode")


def expand_point(x, budget: int = 64) -> ApproxPoint:
    """The binary expansion of a non-dyadic real as a Cantor point."""
    x = lift(x)
    cache = {"bits": ""}

    def prefix(k: int) -> str:
        if len(cache["bits"]) < k:
            cache["bits"] = binary_expand(x, k, budget)
        return cache["bits"][:k]

    return ApproxPoint.from_prefix(prefix, label="expand")


@dataclass(frozen=True)
class BinaryExpansionMap:
    """``expand``: [0, 1] -> Cantor on non-dyadics; ``decode``: Cantor -> [0, 1]."""

    direction: str

    def __post_init__(self):
        if self.direction not in ("expand", "decode"):
            raise BadParameter("direction is 'expand' or 'decode'")

    def __call__(self, value):
        if self.direction == "decode":
            return binary_decode(value)
        return expand_point(value)
