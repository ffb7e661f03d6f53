"""Exact rationals and oracle representations of computable reals.

A computable real is represented by an :class:`ApproxReal`, a total function
``n -> Fraction`` whose value at ``n`` lies within ``2**-n`` of the real.
Semi-computable reals are monotone rational streams (:class:`SemiReal`).
All arithmetic is done in :class:`fractions.Fraction`; nothing is rounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

from .errors import BadParameter, MissingBound, StageBudgetExceeded

Rational = Fraction
RationalLike = Union[Fraction, int, str]


def as_rational(value: RationalLike) -> Fraction:
    """Coerce ints, Fractions and "p/q" strings to a Fraction (never floats)."""
    if isinstance(value, bool):
        raise BadParameter("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise BadParameter(f"cannot use {type(value).__name__} as an exact rational")


def format_rational(q: RationalLike) -> str:
    q = as_rational(q)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str) -> Fraction:
    text = text.strip()
    try:
        if "/" in text:
            p, q = text.split("/")
            return Fraction(int(p), int(q))
        return Fraction(int(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise BadParameter(f"not a rational literal: {text!r}") from exc


def dyadic(n: int) -> Fraction:
    """``2**-n`` as an exact Fraction."""
    return Fraction(1, 1 << n) if n >= 0 else Fraction(1 << -n)


def ceil_log2(x: RationalLike) -> int:
    """Smallest integer k with ``2**k >= x`` (x > 0)."""
    x = as_rational(x)
    if x <= 0:
        raise BadParameter("ceil_log2 needs a positive argument")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    while dyadic(-k) < x:
        k += 1
    while dyadic(-(k - 1)) >= x:
        k -= 1
    return k


# -- pairing of naturals -------------------------------------------------------

def pair(i: int, j: int) -> int:
    """Cantor diagonal pairing <i, j>."""
    s = i + j
    return s * (s + 1) // 2 + j


def unpair(n: int) -> tuple[int, int]:
    s = (math.isqrt(8 * n + 1) - 1) // 2
    j = n - s * (s + 1) // 2
    return s - j, j


def rational_index(q: RationalLike) -> int:
    """Position of a positive rational in the Calkin-Wilf enumeration (1/1 -> 1)."""
    q = as_rational(q)
    if q <= 0:
        raise BadParameter("only positive rationals are numbered")
    a, b = q.numerator, q.denominator
    runs = []
    while (a, b) != (1, 1):
        if a < b:
            k = (b - 1) // a
            runs.append("0" * k)
            b -= k * a
        else:
            k = (a - 1) // b
            runs.append("1" * k)
            a -= k * b
    return int("1" + "".join(reversed(runs)), 2)


def rational_from_index(n: int) -> Fraction:
    if n < 1:
        raise BadParameter("Calkin-Wilf indices start at 1")
    a, b = 1, 1
    for bit in bin(n)[3:]:
        if bit == "0":
            b = a + b
        else:
            a = a + b
    return Fraction(a, b)


# -- computable reals ----------------------------------------------------------

class ApproxReal:
    """A real number given by a precision oracle.

    ``x(n)`` returns a rational within ``2**-n`` of the represented real.
    Oracles must be deterministic; the optional ``bound`` is a magnitude
    bound used by multiplication.
    """

    __slots__ = ("_oracle", "bound", "label")

    def __init__(self, oracle: Callable[[int], Fraction], bound: Optional[Fraction] = None,
                 label: str = "") -> None:
        self._oracle = oracle
        self.bound = None if bound is None else as_rational(bound)
        self.label = label

    def __call__(self, n: int) -> Fraction:
        if n < 0:
            raise BadParameter("precision must be non-negative")
        return Fraction(self._oracle(n))

    def __repr__(self) -> str:
        # labelled oracles may be costly (sums of measures), so only bare ones are evaluated
        if self.label:
            return f"<ApproxReal {self.label}>"
        return f"<ApproxReal ~ {float(self(20)):.6g}>"

    def __add__(self, other):
        return combine("add", [self, lift(other)])

    __radd__ = __add__

    def __sub__(self, other):
        return combine("sub", [self, lift(other)])

    def __rsub__(self, other):
        return combine("sub", [lift(other), self])

    def __neg__(self):
        return combine("negate", [self])

    def __abs__(self):
        return combine("abs", [self])

    def to_json(self, n: int) -> dict:
        return {"precision": n, "value": format_rational(self(n))}


def const(q: RationalLike) -> ApproxReal:
    q = as_rational(q)
    return ApproxReal(lambda n: q, bound=abs(q), label=f"const({q})")


def lift(x) -> ApproxReal:
    return x if isinstance(x, ApproxReal) else const(x)


def eval_real(x: ApproxReal, n: int) -> Fraction:
    """Rational within ``2**-n`` of ``x``; repeatable."""
    return lift(x)(n)


def sqrt_oracle(a: RationalLike) -> ApproxReal:
    """Square root of a non-negative rational, truncated to ``n`` binary digits."""
    a = as_rational(a)
    if a < 0:
        raise BadParameter("square root of a negative rational")

    def oracle(n: int) -> Fraction:
        scaled = (a.numerator << (2 * n)) // a.denominator
        return Fraction(math.isqrt(scaled), 1 << n)

    return ApproxReal(oracle, bound=max(a, Fraction(1)), label=f"sqrt({a})")


def geometric_series(ratio: RationalLike, first: RationalLike = 1) -> ApproxReal:
    """``first * sum_{i>=0} ratio**i`` for ``|ratio| < 1``, via truncated partial sums."""
    r, a = as_rational(ratio), as_rational(first)
    if abs(r) >= 1:
        raise BadParameter("geometric series needs |ratio| < 1")
    limit = a / (1 - r)

    def oracle(n: int) -> Fraction:
        # tail after m terms is |a| |r|^m / (1 - |r|)
        total, term, m = Fraction(0), a, 0
        while abs(a) * abs(r) ** m / (1 - abs(r)) > dyadic(n + 1):
            total += term
            term *= r
            m += 1
        return total

    return ApproxReal(oracle, bound=abs(limit) + 1, label="geometric")


_UNARY = {"negate", "abs"}
_OPS = {"add", "sub", "mul", "negate", "max", "min", "abs"}


def combine(op: str, xs: Sequence, bounds: Optional[Sequence[RationalLike]] = None) -> ApproxReal:
    """Combine computable reals with an exact operation.

    Error budgets, for an m-ary call evaluated at precision n:

    * add / sub: each operand at ``n + ceil(log2 m) + 1``; errors add up to
      at most ``2**-(n+1)``.
    * max / min / abs / negate: 1-Lipschitz, so the same operand precision
      suffices.
    * mul: with ``|x_i| <= B_i`` the product error is at most
      ``e * m * prod(B_i + 1)`` for operand error ``e <= 1``, so operands
      are evaluated at ``n + ceil(log2(m * prod(B_i + 1)))``.
    """
    if op not in _OPS:
        raise BadParameter(f"unknown operation {op!r}")
    xs = [lift(x) for x in xs]
    if not xs:
        raise BadParameter("combine needs at least one operand")
    if op in _UNARY and len(xs) != 1:
        raise BadParameter(f"{op} is unary")
    m = len(xs)
    shift = ceil_log2(m) + 1 if m > 1 else 1

    if op == "mul":
        if bounds is None:
            bounds = [x.bound for x in xs]
        if len(bounds) != m or any(b is None for b in bounds):
            raise MissingBound("mul needs a magnitude bound for every operand")
        bs = [as_rational(b) for b in bounds]
        growth = Fraction(m)
        for b in bs:
            growth *= abs(b) + 1
        shift = max(ceil_log2(growth), 0) + 1
        out_bound = math.prod(abs(b) for b in bs)

        def oracle(n: int) -> Fraction:
            return math.prod((x(n + shift) for x in xs), start=Fraction(1))

        return ApproxReal(oracle, bound=out_bound, label="mul")

    def oracle(n: int) -> Fraction:
        vals = [x(n + shift) for x in xs]
        if op == "add":
            return sum(vals, Fraction(0))
        if op == "sub":
            return vals[0] - sum(vals[1:], Fraction(0))
        if op == "negate":
            return -vals[0]
        if op == "abs":
            return abs(vals[0])
        if op == "max":
            return max(vals)
        return min(vals)

    if all(x.bound is not None for x in xs):
        if op in ("add", "sub"):
            out_bound = sum((x.bound for x in xs), Fraction(0))
        else:
            out_bound = max(x.bound for x in xs)
    else:
        out_bound = None
    return ApproxReal(oracle, bound=out_bound, label=op)


class Ordering(Enum):
    LESS = "Less"
    GREATER = "Greater"
    UNSEPARATED = "Unseparated"


def separate(x, y, n: int) -> Ordering:
    """Certify strict order of two reals at precision ``n``.

    Decisive answers are always correct; equal reals stay ``UNSEPARATED``.
    """
    qx, qy = eval_real(x, n), eval_real(y, n)
    gap = 2 * dyadic(n)
    if qy - qx > gap:
        return Ordering.LESS
    if qx - qy > gap:
        return Ordering.GREATER
    return Ordering.UNSEPARATED


def separate_within(x, y, start: int, budget: int) -> Ordering:
    """Try ``separate`` at precisions ``start .. start + budget``."""
    for n in range(start, start + budget + 1):
        verdict = separate(x, y, n)
        if verdict is not Ordering.UNSEPARATED:
            return verdict
    return Ordering.UNSEPARATED


# -- semi-computable reals -----------------------------------------------------

@dataclass(frozen=True)
class SemiReal:
    """A monotone rational stream: non-decreasing for ``lower``, non-increasing for ``upper``."""

    direction: str
    stream: Callable[[int], Fraction]

    def __post_init__(self):
        if self.direction not in ("lower", "upper"):
            raise BadParameter("direction must be 'lower' or 'upper'")

    def __call__(self, t: int) -> Fraction:
        return Fraction(self.stream(t))

    def is_monotone(self, stages: Iterable[int]) -> bool:
        vals = [self(t) for t in sorted(stages)]
        pairs = zip(vals, vals[1:])
        if self.direction == "lower":
            return all(a <= b for a, b in pairs)
        return all(a >= b for a, b in pairs)


def semis_to_computable(lo: SemiReal, hi: SemiReal, max_stage: Optional[int] = None) -> ApproxReal:
    """A real that is both lower and upper semi-computable is computable.

    At precision n both streams are run until ``hi(t) - lo(t) <= 2**-n`` and
    the midpoint is returned.
    """
    if lo.direction != "lower" or hi.direction != "upper":
        raise BadParameter("need a lower stream and an upper stream")

    def oracle(n: int) -> Fraction:
        t = 0
        while True:
            a, b = lo(t), hi(t)
            if b - a <= dyadic(n):
                return (a + b) / 2
            t += 1
            if max_stage is not None and t > max_stage:
                raise StageBudgetExceeded(
                    f"brackets still {float(b - a):.3g} apart after {max_stage} stages")

    return ApproxReal(oracle, label="semis")
