"""The two concrete computable metric spaces: Cantor space and [0, 1].

Ideal points
    Cantor: finite binary words ``w`` standing for ``w000...``.
    Interval: rationals in ``[0, 1]``.

Cantor distance is ``d(x, y) = sum_{i : x_i != y_i} 2**-i`` with coordinates
indexed from 1, so the space has diameter 1.  Balls are open; interval balls
are relative to ``[0, 1]``, so ``B(0, a) = [0, a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import BadParameter, SpaceMismatch
from .exact_core import (
    ApproxReal,
    as_rational,
    dyadic,
    format_rational,
    lift,
    pair,
    parse_rational,
    rational_from_index,
    rational_index,
    unpair,
)


class Space(Enum):
    CANTOR = "cantor"
    INTERVAL = "interval"


CANTOR = Space.CANTOR
INTERVAL = Space.INTERVAL

IdealPoint = Union[str, Fraction]


# -- ideal points ----------------------------------------------------------------

def normalize_word(word: str) -> str:
    if any(ch not in "01" for ch in word):
        raise BadParameter(f"not a binary word: {word!r}")
    return word.rstrip("0")


def word_value(word: str) -> Fraction:
    """Binary value ``sum w_i 2**-i`` of a finite word."""
    if not word:
        return Fraction(0)
    return Fraction(int(word, 2), 1 << len(word))


def word_index(word: str) -> int:
    """Bijective numbering of ultimately-zero sequences (0 is the zero sequence)."""
    w = normalize_word(word)
    return int(w[::-1], 2) if w else 0


def word_from_index(n: int) -> str:
    return bin(n)[2:][::-1] if n else ""


def check_point(space: Space, point) -> IdealPoint:
    if space is CANTOR:
        if not isinstance(point, str):
            raise BadParameter("Cantor ideal points are binary words")
        normalize_word(point)
        return point
    q = as_rational(point)
    if not 0 <= q <= 1:
        raise BadParameter(f"interval ideal point {q} outside [0, 1]")
    return q


def distance(space: Space, a: IdealPoint, b: IdealPoint) -> Fraction:
    """Exact distance between two ideal points."""
    if space is INTERVAL:
        return abs(as_rational(a) - as_rational(b))
    n = max(len(a), len(b))
    a, b = a.ljust(n, "0"), b.ljust(n, "0")
    if n == 0:
        return Fraction(0)
    return Fraction(int(a, 2) ^ int(b, 2), 1 << n)


def point_index(space: Space, point: IdealPoint) -> int:
    if space is CANTOR:
        return word_index(point)
    q = as_rational(point)
    if q == 0:
        return 0
    if q == 1:
        return 1
    # (0, 1) <-> positive rationals via q -> q / (1 - q)
    return rational_index(q / (1 - q)) + 1


def point_from_index(space: Space, i: int) -> IdealPoint:
    if space is CANTOR:
        return word_from_index(i)
    if i < 2:
        return Fraction(i)
    q = rational_from_index(i - 1)
    return q / (1 + q)


def format_point(space: Space, point: IdealPoint) -> str:
    return point if space is CANTOR else format_rational(point)


def parse_point(space: Space, text: str) -> IdealPoint:
    return check_point(space, text if space is CANTOR else parse_rational(text))


# -- balls -----------------------------------------------------------------------

@dataclass(frozen=True)
class IdealBall:
    """Open ball ``B(center, radius)`` around an ideal point."""

    space: Space
    center: IdealPoint
    radius: Fraction

    def __post_init__(self):
        object.__setattr__(self, "center", check_point(self.space, self.center))
        r = as_rational(self.radius)
        if r <= 0:
            raise BadParameter("ball radius must be positive")
        object.__setattr__(self, "radius", r)

    @property
    def index(self) -> int:
        """``<i, j>`` with i the center's number and j the radius's number."""
        return pair(point_index(self.space, self.center), rational_index(self.radius) - 1)

    @classmethod
    def from_index(cls, space: Space, n: int) -> "IdealBall":
        i, j = unpair(n)
        return cls(space, point_from_index(space, i), rational_from_index(j + 1))

    def contains_point(self, p: IdealPoint) -> bool:
        """Exact membership test for an ideal point."""
        return distance(self.space, self.center, p) < self.radius

    def interval(self) -> Tuple[Fraction, Fraction]:
        """Real-line endpoints ``(c - r, c + r)`` of an interval ball."""
        _need(self.space, INTERVAL)
        return self.center - self.radius, self.center + self.radius

    def to_json(self) -> dict:
        return {"center": format_point(self.space, self.center),
                "radius": format_rational(self.radius)}


def cylinder_ball(word: str) -> IdealBall:
    """The ball ``B(w0^inf, 2**-|w|)``: the cylinder ``[w]`` minus the point ``w1^inf``."""
    return IdealBall(CANTOR, word, dyadic(len(word)))


def cylinder_balls(word: str) -> Tuple[IdealBall, IdealBall]:
    """Two ideal balls whose union is exactly the cylinder ``[w]``.

    ``B(w0^inf, 2**-|w|)`` misses only ``w1^inf``, which ``B(w10^inf, 2**-|w|)`` covers.
    """
    normalize_word(word)
    return cylinder_ball(word), IdealBall(CANTOR, word + "1", dyadic(len(word)))


def cylinder_open(word: str) -> "EffectiveOpen":
    return EffectiveOpen.of(CANTOR, cylinder_balls(word), name=f"[{word}]")


def interval_ball(lo, hi) -> IdealBall:
    """The open interval ``(lo, hi)`` (relative to [0, 1]) as an ideal ball."""
    lo, hi = as_rational(lo), as_rational(hi)
    if not (lo < hi and lo < 1 and hi > 0):
        raise BadParameter("empty interval")
    if lo < 0:
        # [0, hi) is B(0, hi)
        return IdealBall(INTERVAL, Fraction(0), hi)
    if hi > 1:
        return IdealBall(INTERVAL, Fraction(1), 1 - lo)
    return IdealBall(INTERVAL, (lo + hi) / 2, (hi - lo) / 2)


def ball_within(inner: IdealBall, outer: IdealBall) -> bool:
    """Certified inclusion ``inner ⊆ outer``."""
    _need(inner.space, outer.space)
    if inner.space is CANTOR:
        return _cylinder_ball_within(inner, outer) or (
            distance(CANTOR, inner.center, outer.center) + inner.radius <= outer.radius)
    return _interval_within(*inner.interval(), *outer.interval())


def _interval_within(lo, hi, olo, ohi) -> bool:
    # compare the traces on [0, 1]; an endpoint outside [0, 1] means the
    # trace reaches 0 (or 1) itself
    left_ok = olo < 0 if lo < 0 else olo <= lo
    right_ok = ohi > 1 if hi > 1 else hi <= ohi
    return left_ok and right_ok


def _cylinder_ball_within(inner: IdealBall, outer: IdealBall) -> bool:
    # exact test when inner is a cylinder ball B(u0^inf, 2**-|u|)
    r = inner.radius
    if r.numerator != 1 or r.denominator & (r.denominator - 1):
        return False
    j = r.denominator.bit_length() - 1
    u = normalize_word(inner.center)
    if len(u) > j:
        return False
    u = u.ljust(j, "0")
    mismatch, tail_zero = _prefix_mismatch(u, outer.center, j)
    edge = mismatch + dyadic(j)
    return edge < outer.radius or (edge == outer.radius and tail_zero)


def _prefix_mismatch(u: str, c: str, j: int) -> Tuple[Fraction, bool]:
    """Distance contribution of coordinates 1..j and whether c vanishes past j."""
    cj = c[:j].ljust(j, "0")
    d = Fraction(int(u, 2) ^ int(cj, 2), 1 << j) if j else Fraction(0)
    return d, "1" not in c[j:]


def cylinder_disjoint(u: str, ball: IdealBall) -> bool:
    """Whether the whole cylinder ``[u]`` misses ``ball``."""
    d, _ = _prefix_mismatch(u, ball.center, len(u))
    return d >= ball.radius


def cylinder_inside(u: str, ball: IdealBall) -> bool:
    return _cylinder_ball_within(cylinder_ball(u), ball)


def balls_disjoint(a: IdealBall, b: IdealBall) -> bool:
    """Certified ``a ∩ b = ∅``."""
    _need(a.space, b.space)
    if a.space is INTERVAL:
        alo, ahi = a.interval()
        blo, bhi = b.interval()
        return ahi <= blo or bhi <= alo or ahi <= 0 or bhi <= 0 or alo >= 1 or blo >= 1
    return distance(CANTOR, a.center, b.center) >= a.radius + b.radius


def _need(a: Space, b: Space) -> None:
    if a is not b:
        raise SpaceMismatch(f"{a.value} vs {b.value}")


# -- approximate points -------------------------------------------------------------

class ApproxPoint:
    """A computable point: ``oracle(n)`` is an ideal point within ``2**-n``.

    Cantor points are described by their bit prefixes: ``oracle(n)`` agrees
    with the point on coordinates ``1..n``, which is slightly stronger than
    the distance contract.
    """

    def __init__(self, space: Space, oracle: Callable[[int], IdealPoint],
                 prefix: Optional[Callable[[int], str]] = None, label: str = "") -> None:
        self.space = space
        self._oracle = oracle
        self._prefix = prefix
        self.label = label

    def __call__(self, n: int) -> IdealPoint:
        p = self._oracle(n)
        if self.space is INTERVAL:
            p = min(max(as_rational(p), Fraction(0)), Fraction(1))
        return p

    def __repr__(self) -> str:
        return f"<ApproxPoint {self.space.value} {self.label}>"

    def prefix(self, k: int) -> str:
        """First ``k`` bits of a Cantor point."""
        _need(self.space, CANTOR)
        if self._prefix is not None:
            return self._prefix(k)
        return self._oracle(k)[:k].ljust(k, "0")

    def bit_array(self, k: int) -> np.ndarray:
        return np.frombuffer(self.prefix(k).encode("ascii"), dtype=np.uint8) - ord("0")

    @classmethod
    def from_word(cls, word: str) -> "ApproxPoint":
        normalize_word(word)
        return cls(CANTOR, lambda n: word[:n], prefix=lambda k: word[:k].ljust(k, "0"),
                   label=word[:16] + ("..." if len(word) > 16 else ""))

    @classmethod
    def from_prefix(cls, prefix: Callable[[int], str], label: str = "") -> "ApproxPoint":
        return cls(CANTOR, prefix, prefix=prefix, label=label)

    @classmethod
    def from_bits(cls, bit: Callable[[int], int], label: str = "") -> "ApproxPoint":
        """Cantor point whose ``i``-th coordinate (1-based) is ``bit(i)``."""
        def prefix(k: int) -> str:
            return "".join("1" if bit(i) else "0" for i in range(1, k + 1))
        return cls.from_prefix(prefix, label)

    @classmethod
    def periodic(cls, block: str) -> "ApproxPoint":
        normalize_word(block)

        def prefix(k: int) -> str:
            return (block * (k // len(block) + 1))[:k]
        return cls.from_prefix(prefix, label=f"({block})^inf")

    @classmethod
    def from_real(cls, x) -> "ApproxPoint":
        x = lift(x)
        return cls(INTERVAL, x, label=x.label)

    @classmethod
    def from_rational(cls, q) -> "ApproxPoint":
        q = check_point(INTERVAL, q)
        return cls(INTERVAL, lambda n: q, label=str(q))

    def as_real(self) -> ApproxReal:
        _need(self.space, INTERVAL)
        return ApproxReal(self.__call__, bound=Fraction(1), label=self.label)


def as_point(space: Space, x) -> ApproxPoint:
    if isinstance(x, ApproxPoint):
        _need(x.space, space)
        return x
    if space is CANTOR:
        return ApproxPoint.from_word(x)
    if isinstance(x, ApproxReal):
        return ApproxPoint.from_real(x)
    return ApproxPoint.from_rational(x)


def cantor_distance(x, y, k: Optional[int] = None):
    """Distance on Cantor space.

    Two words give the exact rational distance.  Otherwise the first ``k``
    coordinates are compared and an enclosure ``(lo, hi)`` of width
    ``2**-k`` is returned.
    """
    if isinstance(x, str) and isinstance(y, str):
        return distance(CANTOR, x, y)
    if k is None:
        raise BadParameter("approximate points need a coordinate count k")
    px = as_point(CANTOR, x).prefix(k)
    py = as_point(CANTOR, y).prefix(k)
    lo = distance(CANTOR, px, py)
    return lo, lo + dyadic(k)


# -- semi-decisions -----------------------------------------------------------------

class Verdict(Enum):
    YES = "Yes"
    NOT_YET = "NotYet"


def _certified_at(x: ApproxPoint, ball: IdealBall, s: int) -> bool:
    return distance(ball.space, x(s), ball.center) + dyadic(s) < ball.radius


def ball_membership(x, ball: IdealBall, stage: int) -> Verdict:
    """Semi-decide ``x ∈ ball``: YES once ``d(x_s, c) + 2**-s < r`` for some ``s <= stage``."""
    x = as_point(ball.space, x)
    _need(x.space, ball.space)
    if x.space is CANTOR:
        # prefix oracles make the margin test monotone in s
        return Verdict.YES if _certified_at(x, ball, stage) else Verdict.NOT_YET
    for s in range(stage, -1, -1):
        if _certified_at(x, ball, s):
            return Verdict.YES
    return Verdict.NOT_YET


class EffectiveOpen:
    """An r.e. open set given by a stage-monotone enumeration of ideal balls.

    ``locate``, when given, must return a ball that the enumerator lists at
    that stage and that certifiably contains the point (or None); it lets
    huge finite unions answer membership without materializing the list.
    """

    def __init__(self, space: Space, enumerator: Callable[[int], Sequence[IdealBall]],
                 name: str = "", locate: Optional[Callable[[ApproxPoint, int], Optional[IdealBall]]] = None):
        self.space = space
        self._enumerator = enumerator
        self.name = name
        self._locate = locate

    def balls(self, stage: int) -> Tuple[IdealBall, ...]:
        return tuple(self._enumerator(stage))

    def __repr__(self) -> str:
        return f"<EffectiveOpen {self.space.value} {self.name}>"

    @classmethod
    def of(cls, space: Space, balls: Iterable[IdealBall], name: str = "") -> "EffectiveOpen":
        fixed = tuple(balls)
        for b in fixed:
            _need(b.space, space)
        return cls(space, lambda t: fixed, name=name)

    @classmethod
    def empty(cls, space: Space) -> "EffectiveOpen":
        return cls.of(space, (), name="empty")

    @classmethod
    def growing(cls, space: Space, ball_at: Callable[[int], Optional[IdealBall]], name: str = "") -> "EffectiveOpen":
        """Enumerate ``ball_at(0), ball_at(1), ...`` (None entries skipped)."""
        def enum(t):
            return [b for b in (ball_at(s) for s in range(t + 1)) if b is not None]
        return cls(space, enum, name=name)

    def witness(self, x, stage: int) -> Optional[IdealBall]:
        x = as_point(self.space, x)
        if self._locate is not None:
            return self._locate(x, stage)
        for ball in self.balls(stage):
            if ball_membership(x, ball, stage) is Verdict.YES:
                return ball
        return None

    def snapshot(self, stage: int) -> dict:
        return {"space": self.space.value, "stage": stage,
                "balls": [b.to_json() for b in self.balls(stage)]}


def load_snapshot(data: dict) -> EffectiveOpen:
    space = Space(data["space"])
    balls = [IdealBall(space, parse_point(space, b["center"]), parse_rational(b["radius"]))
             for b in data["balls"]]
    return EffectiveOpen.of(space, balls, name=f"snapshot@{data.get('stage')}")


def open_membership(x, U: EffectiveOpen, stage: int) -> Verdict:
    return Verdict.YES if U.witness(x, stage) is not None else Verdict.NOT_YET


def _dedupe(balls: Iterable[IdealBall]) -> List[IdealBall]:
    seen, out = set(), []
    for b in balls:
        if b not in seen:
            seen.add(b)
            out.append(b)
    return out


def open_union(U: EffectiveOpen, V: EffectiveOpen) -> EffectiveOpen:
    _need(U.space, V.space)

    def enum(t):
        a, b = U.balls(t), V.balls(t)
        merged = []
        for i in range(max(len(a), len(b))):
            merged.extend(a[i:i + 1])
            merged.extend(b[i:i + 1])
        return _dedupe(merged)

    return EffectiveOpen(U.space, enum, name=f"({U.name} | {V.name})")


def open_intersect(U: EffectiveOpen, V: EffectiveOpen) -> EffectiveOpen:
    """Witness balls lying inside a ball of U and a ball of V."""
    _need(U.space, V.space)
    return hit_region(U.space, [U, V], 2, name=f"({U.name} & {V.name})")


def hit_region(space: Space, sets: Sequence[EffectiveOpen], need: int, name: str = "",
               families_at: Optional[Callable[[int], Sequence[Sequence[IdealBall]]]] = None) -> EffectiveOpen:
    """Points lying in at least ``need`` of the given r.e. open sets.

    At stage t the enumerator lists witness balls certified (exact ball
    arithmetic) to lie inside one ball of each of ``need`` different sets,
    cumulated over stages ``0..t`` so the listing is monotone.
    """
    if families_at is None:
        def families_at(s):
            return [U.balls(s) for U in sets]

    def enum(t):
        found = []
        for s in range(t + 1):
            found.extend(witness_balls(space, families_at(s), need, s))
        return _dedupe(found)

    return EffectiveOpen(space, enum, name=name)


def witness_balls(space: Space, families: Sequence[Sequence[IdealBall]], need: int,
                  depth: int) -> List[IdealBall]:
    """Ideal balls each contained in a single ball from at least ``need`` families.

    Interval: exact sweep over endpoints, so the union of the output is the
    whole ``need``-fold coverage region.  Cantor: cylinder refinement to
    ``depth`` levels with pruning.
    """
    if need <= 0:
        raise BadParameter("need must be positive")
    families = [tuple(f) for f in families]
    if sum(1 for f in families if f) < need:
        return []
    for f in families:
        for b in f:
            _need(b.space, space)
    if space is INTERVAL:
        return _interval_witnesses(families, need)
    return _cantor_witnesses(families, need, depth)


def _interval_witnesses(families, need) -> List[IdealBall]:
    spans = [[b.interval() for b in f] for f in families]
    cuts = {Fraction(0), Fraction(1)}
    for f in spans:
        for lo, hi in f:
            cuts.update(c for c in (lo, hi) if 0 < c < 1)
    cuts = sorted(cuts)
    out = []
    for a, b in zip(cuts, cuts[1:]):
        hits = sum(1 for f in spans if any(lo <= a and b <= hi for lo, hi in f))
        if hits >= need:
            out.append(IdealBall(INTERVAL, (a + b) / 2, (b - a) / 2))
    for e in cuts:
        margins = []
        for f in spans:
            best = max((min(e - lo, hi - e) for lo, hi in f if lo < e < hi), default=None)
            if best is not None:
                margins.append(best)
        if len(margins) >= need:
            margins.sort(reverse=True)
            out.append(IdealBall(INTERVAL, e, margins[need - 1]))
    return out


def cylinder_closed_inside(u: str, ball: IdealBall) -> bool:
    """Whether the whole cylinder ``[u]``, edge point included, lies in ``ball``."""
    d, _ = _prefix_mismatch(u, ball.center, len(u))
    return d + dyadic(len(u)) < ball.radius


def _cantor_witnesses(families, need, depth) -> List[IdealBall]:
    out = []
    stack = [""]
    while stack:
        u = stack.pop()
        closed = inside = undecided = 0
        for f in families:
            if any(cylinder_closed_inside(u, b) for b in f):
                closed += 1
                inside += 1
            elif any(cylinder_inside(u, b) for b in f):
                inside += 1
            elif not all(cylinder_disjoint(u, b) for b in f):
                undecided += 1
        if closed >= need:
            out.extend(cylinder_balls(u))
        elif inside >= need:
            out.append(cylinder_ball(u))
            if len(u) < depth:
                # the open-inside ball misses the edge point u1^inf
                stack.append(u + "1")
        elif inside + undecided >= need and len(u) < depth:
            stack.append(u + "1")
            stack.append(u + "0")
    return out


# -- interval unions ------------------------------------------------------------------

def interval_components(balls: Iterable[IdealBall]) -> List[Tuple[Fraction, Fraction]]:
    """Disjoint maximal open intervals (real-line endpoints) of a union of interval balls."""
    spans = sorted(b.interval() for b in balls)
    comps: List[List[Fraction]] = []
    for lo, hi in spans:
        if comps and lo < comps[-1][1]:
            comps[-1][1] = max(comps[-1][1], hi)
        else:
            comps.append([lo, hi])
    return [(lo, hi) for lo, hi in comps]


def closed_within_components(a: Fraction, b: Fraction, comps) -> bool:
    """``[a, b] ∩ [0, 1]`` lies inside the union."""
    return any(lo < a and b < hi for lo, hi in comps)


def closed_misses_components(a: Fraction, b: Fraction, comps) -> bool:
    return all(b <= lo or a >= hi for lo, hi in comps)
