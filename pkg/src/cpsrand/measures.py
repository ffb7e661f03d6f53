"""Computable probability measures on Cantor space and on [0, 1].

A measure carries two oracles:

* ``approx(n)``: a finitely supported measure within Prokhorov distance
  ``2**-n``;
* ``lower(balls, t)``: a lower bound for the mass of a finite union of
  ideal balls, non-decreasing in ``t`` and converging to the true mass.

:func:`derive_bounds` turns these into a two-sided bracket.  The
closed-form families (CDF measures, cylinder measures, dyadic-cell
measures, mixtures) answer ``lower`` exactly or by exact refinement; the
generic :class:`ProkhorovMeasure` answers it from its approximants.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from .errors import (
    AtomicMeasure,
    BadParameter,
    PrecisionStall,
    SpaceMismatch,
    SupportTooLarge,
    UnsupportedMorphism,
)
from .exact_core import ApproxReal, as_rational, ceil_log2, dyadic, format_rational, parse_rational
from .spaces import (
    CANTOR,
    INTERVAL,
    IdealBall,
    Space,
    check_point,
    cylinder_ball,
    cylinder_disjoint,
    cylinder_inside,
    distance,
    format_point,
    interval_ball,
    interval_components,
    normalize_word,
    parse_point,
    point_from_index,
    word_value,
)

EXACT_SUPPORT_CAP = 15
NON_ATOMIC = "non-atomic"
UNKNOWN = "unknown"


# -- finitely supported measures ------------------------------------------------------

def _point_key(space: Space, p):
    return normalize_word(p) if space is CANTOR else as_rational(p)


@dataclass(frozen=True)
class FiniteMeasure:
    """Rational weights on finitely many ideal points, summing to exactly 1."""

    space: Space
    atoms: Tuple[Tuple[object, Fraction], ...]

    def __post_init__(self):
        merged: Dict[object, Fraction] = {}
        for p, w in self.atoms:
            w = as_rational(w)
            if w < 0:
                raise BadParameter("atom weights must be non-negative")
            key = _point_key(self.space, check_point(self.space, p))
            merged[key] = merged.get(key, Fraction(0)) + w
        atoms = tuple(sorted(((p, w) for p, w in merged.items() if w > 0),
                             key=lambda a: (len(a[0]), a[0]) if self.space is CANTOR else a[0]))
        if sum((w for _, w in atoms), Fraction(0)) != 1:
            raise BadParameter("atom weights must sum to exactly 1")
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_pairs(cls, space: Space, pairs: Iterable) -> "FiniteMeasure":
        return cls(space, tuple((p, w) for p, w in pairs))

    @classmethod
    def dirac(cls, space: Space, point) -> "FiniteMeasure":
        return cls(space, ((point, Fraction(1)),))

    @property
    def support(self) -> List:
        return [p for p, _ in self.atoms]

    def weight(self, point) -> Fraction:
        key = _point_key(self.space, point)
        return next((w for p, w in self.atoms if p == key), Fraction(0))

    def mass_where(self, pred: Callable[[object], bool]) -> Fraction:
        return sum((w for p, w in self.atoms if pred(p)), Fraction(0))

    def mass_in(self, balls: Sequence[IdealBall]) -> Fraction:
        return self.mass_where(lambda p: any(b.contains_point(p) for b in balls))

    def map(self, fn: Callable, space: Optional[Space] = None) -> "FiniteMeasure":
        return FiniteMeasure(space or self.space, tuple((fn(p), w) for p, w in self.atoms))

    def to_json(self) -> dict:
        return {"space": self.space.value,
                "atoms": [{"point": format_point(self.space, p), "weight": format_rational(w)}
                          for p, w in self.atoms]}

    @classmethod
    def from_json(cls, data: dict) -> "FiniteMeasure":
        space = Space(data["space"])
        return cls(space, tuple((parse_point(space, a["point"]), parse_rational(a["weight"]))
                                for a in data["atoms"]))


def mix_finite(space: Space, parts: Sequence[Tuple[Fraction, FiniteMeasure]]) -> FiniteMeasure:
    return FiniteMeasure(space, tuple((p, c * w) for c, fm in parts if c for p, w in fm.atoms))


# -- computable measures ----------------------------------------------------------------

class ComputableMeasure:
    """Base class: subclasses provide ``_approx`` and ``lower``."""

    space: Space
    atom_flag: Union[str, Tuple] = UNKNOWN
    name: str = ""

    def __init__(self, space: Space, atom_flag=UNKNOWN, name: str = "") -> None:
        self.space = space
        self.atom_flag = atom_flag
        self.name = name
        self._approx_cache: Dict[int, FiniteMeasure] = {}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name or self.space.value}>"

    @property
    def is_nonatomic(self) -> bool:
        return self.atom_flag == NON_ATOMIC

    def approx(self, n: int) -> FiniteMeasure:
        if n not in self._approx_cache:
            self._approx_cache[n] = self._approx(n)
        return self._approx_cache[n]

    def _approx(self, n: int) -> FiniteMeasure:
        raise NotImplementedError

    def lower(self, balls: Sequence[IdealBall], t: int) -> Fraction:
        raise NotImplementedError

    def _check(self, balls: Sequence[IdealBall]) -> Tuple[IdealBall, ...]:
        balls = tuple(balls)
        for b in balls:
            if b.space is not self.space:
                raise SpaceMismatch(f"ball in {b.space.value}, measure on {self.space.value}")
        return balls


class DiscreteMeasure(ComputableMeasure):
    """A finitely supported measure viewed as a computable measure."""

    def __init__(self, fm: FiniteMeasure, name: str = "") -> None:
        super().__init__(fm.space, fm.atoms, name or "discrete")
        self.finite = fm

    def _approx(self, n: int) -> FiniteMeasure:
        return self.finite

    def lower(self, balls, t):
        return self.finite.mass_in(self._check(balls))


def as_measure(mu) -> ComputableMeasure:
    return DiscreteMeasure(mu) if isinstance(mu, FiniteMeasure) else mu


class IntervalCdfMeasure(ComputableMeasure):
    """Non-atomic measure on [0, 1] with an exact rational CDF."""

    def __init__(self, cdf: Callable[[Fraction], Fraction], name: str = "", density_bound=None) -> None:
        super().__init__(INTERVAL, NON_ATOMIC, name)
        self.cdf = cdf
        self.density_bound = None if density_bound is None else as_rational(density_bound)

    def F(self, x) -> Fraction:
        x = as_rational(x)
        if x <= 0:
            return Fraction(0)
        if x >= 1:
            return Fraction(1)
        return Fraction(self.cdf(x))

    def interval_mass(self, a, b) -> Fraction:
        return max(self.F(b) - self.F(a), Fraction(0))

    def _approx(self, n):
        cells = 1 << n
        atoms = []
        prev = Fraction(0)
        for k in range(cells):
            cur = self.F(Fraction(k + 1, cells))
            if cur > prev:
                atoms.append((Fraction(2 * k + 1, 2 * cells), cur - prev))
            prev = cur
        return FiniteMeasure(INTERVAL, tuple(atoms))

    def lower(self, balls, t):
        comps = interval_components(self._check(balls))
        return sum((self.interval_mass(lo, hi) for lo, hi in comps), Fraction(0))


class CantorCylinderMeasure(ComputableMeasure):
    """Measure on Cantor space given by exact cylinder masses."""

    def __init__(self, mass: Callable[[str], Fraction], name: str = "", atom_flag=NON_ATOMIC) -> None:
        super().__init__(CANTOR, atom_flag, name)
        self.mass = mass

    def cylinder_mass(self, word: str) -> Fraction:
        return Fraction(self.mass(word))

    def _approx(self, n):
        # atoms at u0^inf for |u| = n+1 move mass by at most 2^-(n+1)
        atoms = []
        for k in range(1 << (n + 1)):
            u = format(k, f"0{n + 1}b")
            w = self.cylinder_mass(u)
            if w:
                atoms.append((u, w))
        return FiniteMeasure(CANTOR, tuple(atoms))

    def lower(self, balls, t):
        balls = self._check(balls)
        total = Fraction(0)
        stack = [""]
        while stack:
            u = stack.pop()
            j = len(u)
            status = _cantor_node(u, balls, allow_edge=self.is_nonatomic)
            if status == "in":
                total += self.cylinder_mass(u)
            elif status == "mixed" and j < t:
                stack.extend((u + "1", u + "0"))
        return total


def _cantor_node(u: str, balls, allow_edge: bool) -> str:
    j = len(u)
    for b in balls:
        d = distance(CANTOR, u, b.center[:j]) if j else Fraction(0)
        if d + dyadic(j) < b.radius:
            return "in"
        if allow_edge and cylinder_inside(u, b):
            return "in"
    if all(cylinder_disjoint(u, b) for b in balls):
        return "out"
    return "mixed"


class IntervalDyadicMeasure(ComputableMeasure):
    """Non-atomic measure on [0, 1] given by masses of the dyadic cells ``[k 2^-j, (k+1) 2^-j]``."""

    def __init__(self, cell_mass: Callable[[int, int], Fraction], name: str = "") -> None:
        super().__init__(INTERVAL, NON_ATOMIC, name)
        self.cell_mass = cell_mass

    def F_dyadic(self, k: int, j: int) -> Fraction:
        """Exact CDF at ``k / 2**j``."""
        if k <= 0:
            return Fraction(0)
        if k >= 1 << j:
            return Fraction(1)
        total = Fraction(0)
        for i in range(1, j + 1):
            if (k >> (j - i)) & 1:
                total += Fraction(self.cell_mass(i, (k >> (j - i)) - 1))
        return total

    def _approx(self, n):
        cells = 1 << n
        atoms = [(Fraction(2 * k + 1, 2 * cells), Fraction(self.cell_mass(n, k))) for k in range(cells)]
        return FiniteMeasure(INTERVAL, tuple(a for a in atoms if a[1]))

    def lower(self, balls, t):
        total = Fraction(0)
        scale = 1 << t
        for lo, hi in interval_components(self._check(balls)):
            a = max(math.ceil(lo * scale), 0) if lo > 0 else 0
            b = min(math.floor(hi * scale), scale) if hi < 1 else scale
            if b > a:
                total += self.F_dyadic(b, t) - self.F_dyadic(a, t)
        return total


class MixtureMeasure(ComputableMeasure):
    """Convex combination ``sum c_i mu_i`` with exact rational weights."""

    def __init__(self, parts: Sequence[Tuple[Fraction, ComputableMeasure]], name: str = "") -> None:
        parts = [(as_rational(c), as_measure(m)) for c, m in parts if as_rational(c) != 0]
        if not parts:
            raise BadParameter("empty mixture")
        space = parts[0][1].space
        if any(m.space is not space for _, m in parts):
            raise SpaceMismatch("mixture components live in different spaces")
        if any(c < 0 for c, _ in parts) or sum(c for c, _ in parts) != 1:
            raise BadParameter("mixture weights must be non-negative and sum to 1")
        if all(m.is_nonatomic for _, m in parts):
            flag = NON_ATOMIC
        elif all(m.is_nonatomic or isinstance(m.atom_flag, tuple) for _, m in parts):
            flag = tuple((p, c * w) for c, m in parts if isinstance(m.atom_flag, tuple)
                         for p, w in m.atom_flag)
        else:
            flag = UNKNOWN
        super().__init__(space, flag, name or "mixture")
        self.parts = parts

    def _approx(self, n):
        return mix_finite(self.space, [(c, m.approx(n)) for c, m in self.parts])

    def lower(self, balls, t):
        balls = self._check(balls)
        return sum((c * m.lower(balls, t) for c, m in self.parts), Fraction(0))


class ProkhorovMeasure(ComputableMeasure):
    """Measure known only through its approximants.

    The lower oracle uses that atoms of ``mu_s`` lying ``2**-s`` inside the
    union carry at most ``2**-s`` more mass than the union itself.
    """

    def __init__(self, space: Space, approx_fn: Callable[[int], FiniteMeasure],
                 atom_flag=UNKNOWN, name: str = "") -> None:
        super().__init__(space, atom_flag, name or "prokhorov")
        self._fn = approx_fn
        self._lower_cache: Dict[Tuple, Fraction] = {}

    def _approx(self, n):
        fm = self._fn(n)
        if fm.space is not self.space:
            raise SpaceMismatch("approximant in the wrong space")
        return fm

    def _lower_at(self, balls, s):
        key = (balls, s)
        if key not in self._lower_cache:
            eps = dyadic(s)
            inner = self.approx(s).mass_where(
                lambda p: any(distance(self.space, p, b.center) + eps <= b.radius for b in balls))
            self._lower_cache[key] = max(inner - eps, Fraction(0))
        return self._lower_cache[key]

    def lower(self, balls, t):
        balls = self._check(balls)
        if not balls:
            return Fraction(0)
        return max(self._lower_at(balls, s) for s in range(t + 1))


# -- constructors ---------------------------------------------------------------------

def lebesgue() -> IntervalCdfMeasure:
    return IntervalCdfMeasure(lambda x: x, name="lebesgue", density_bound=1)


def piecewise_density(breaks: Sequence, densities: Sequence) -> IntervalCdfMeasure:
    """Piecewise-constant density on [0, 1]; ``breaks`` runs from 0 to 1."""
    xs = [as_rational(b) for b in breaks]
    ds = [as_rational(d) for d in densities]
    if len(xs) != len(ds) + 1 or xs[0] != 0 or xs[-1] != 1 or any(a >= b for a, b in zip(xs, xs[1:])):
        raise BadParameter("breaks must increase from 0 to 1, one more than densities")
    if any(d < 0 for d in ds):
        raise BadParameter("densities must be non-negative")
    if sum(d * (b - a) for d, a, b in zip(ds, xs, xs[1:])) != 1:
        raise BadParameter("density must integrate to 1")

    def cdf(x):
        total = Fraction(0)
        for d, a, b in zip(ds, xs, xs[1:]):
            if x <= a:
                break
            total += d * (min(x, b) - a)
        return total

    return IntervalCdfMeasure(cdf, name="piecewise", density_bound=max(ds))


def quadratic_atoms() -> ProkhorovMeasure:
    """Density ``2x`` on [0, 1], known only through an atom schedule.

    ``approx(n)`` puts the exact mass of each cell of width ``2**-(n+1)`` at
    the cell midpoint, so the CDF ``x**2`` is never consulted directly.
    """
    def approx_fn(n):
        m = 1 << (n + 1)
        return FiniteMeasure(INTERVAL, tuple((Fraction(2 * k + 1, 2 * m), Fraction(2 * k + 1, m * m))
                                             for k in range(m)))

    return ProkhorovMeasure(INTERVAL, approx_fn, NON_ATOMIC, name="quadratic-atoms")


def bernoulli(p) -> CantorCylinderMeasure:
    """Product measure with ``P(x_i = 1) = p``."""
    p = as_rational(p)
    if not 0 <= p <= 1:
        raise BadParameter("p must lie in [0, 1]")

    def mass(word):
        ones = word.count("1")
        return p ** ones * (1 - p) ** (len(word) - ones)

    if 0 < p < 1:
        flag = NON_ATOMIC
    elif p == 0:
        flag = (("", Fraction(1)),)
    else:
        flag = UNKNOWN  # the atom 1^inf is not an ideal point
    return CantorCylinderMeasure(mass, name=f"bernoulli({p})", atom_flag=flag)


def atomic_mixture(atoms: Sequence, continuous_part: Optional[ComputableMeasure], blend) -> ComputableMeasure:
    """``blend * sum w_i delta_{x_i} + (1 - blend) * continuous_part``."""
    blend = as_rational(blend)
    if not 0 <= blend <= 1:
        raise BadParameter("blend must lie in [0, 1]")
    pairs = list(atoms)
    if blend > 0 and not pairs:
        raise BadParameter("blend > 0 needs atoms")
    if blend < 1 and continuous_part is None:
        raise BadParameter("blend < 1 needs a continuous part")
    parts = []
    if blend > 0:
        space = continuous_part.space if continuous_part is not None else (
            CANTOR if isinstance(pairs[0][0], str) else INTERVAL)
        if any(as_rational(w) <= 0 for _, w in pairs):
            raise BadParameter("atom weights must be positive")
        parts.append((blend, DiscreteMeasure(FiniteMeasure(space, tuple(pairs)))))
    if blend < 1:
        parts.append((1 - blend, continuous_part))
    if len(parts) == 1:
        return parts[0][1]
    return MixtureMeasure(parts, name="atomic-mixture")


# -- bounds ---------------------------------------------------------------------------

def exterior_balls(space: Space, balls: Sequence[IdealBall], depth: int) -> List[IdealBall]:
    """Ideal balls certified disjoint from the union of ``balls``."""
    if space is INTERVAL:
        out = []
        cursor, cursor_in = Fraction(0), True  # is the cursor point itself uncovered?
        for lo, hi in interval_components(balls):
            if cursor_in and lo > cursor:
                out.append(IdealBall(INTERVAL, Fraction(0), lo) if cursor == 0 else interval_ball(cursor, lo))
            elif lo > cursor:
                out.append(interval_ball(cursor, lo))
            if hi > cursor:
                cursor, cursor_in = hi, False
        if cursor_in:
            out.append(IdealBall(INTERVAL, Fraction(0), Fraction(2)))
        elif cursor < 1:
            out.append(IdealBall(INTERVAL, Fraction(1), 1 - cursor))
        return out
    out = []
    stack = [""]
    while stack:
        u = stack.pop()
        if all(cylinder_disjoint(u, b) for b in balls):
            out.append(cylinder_ball(u))
        elif any(cylinder_inside(u, b) for b in balls):
            continue
        elif len(u) < depth:
            stack.extend((u + "1", u + "0"))
    return out


def derive_bounds(mu: ComputableMeasure, balls: Sequence[IdealBall], n: int) -> Tuple[Fraction, Fraction]:
    """Bracket ``mu(union of balls)`` at precision ``n``.

    The lower end is the lower oracle at stage ``n + 1``; the upper end is one
    minus the lower oracle of a certified-disjoint exterior, plus ``2**-n``,
    capped at 1.
    """
    mu = as_measure(mu)
    balls = mu._check(balls)
    t = n + 1
    lo = mu.lower(balls, t)
    ext = exterior_balls(mu.space, balls, t)
    hi = min(Fraction(1), 1 - mu.lower(ext, t) + dyadic(n))
    return min(lo, hi), hi


def closed_interval_upper(mu: ComputableMeasure, a, b, n: int) -> Fraction:
    """Upper bound for ``mu([a, b])`` from the lower mass of ``[0, a) ∪ (b, 1]``."""
    a, b = as_rational(a), as_rational(b)
    ext = []
    if a > 0:
        ext.append(IdealBall(INTERVAL, Fraction(0), a))
    if b < 1:
        ext.append(IdealBall(INTERVAL, Fraction(1), 1 - b))
    return min(Fraction(1), 1 - as_measure(mu).lower(ext, n + 1) + dyadic(n))


# -- zero-measure points --------------------------------------------------------------

@dataclass
class ZeroMeasureTrace:
    """Nested closed intervals ``J_0 ⊇ J_1 ⊇ ...`` with certified mass bounds."""

    intervals: List[Tuple[Fraction, Fraction]] = field(default_factory=list)
    upper_bounds: List[Fraction] = field(default_factory=list)
    sides: List[str] = field(default_factory=list)

    def check(self) -> bool:
        for k, ((a, b), ub) in enumerate(zip(self.intervals, self.upper_bounds)):
            if not ub < dyadic(k - 1):
                return False
            if k:
                pa, pb = self.intervals[k - 1]
                if not (pa <= a and b <= pb and b - a == (pb - pa) / 3):
                    return False
        return True

    def rows(self) -> List[dict]:
        return [{"k": k, "a": format_rational(a), "b": format_rational(b),
                 "upper_bound": format_rational(ub)}
                for k, ((a, b), ub) in enumerate(zip(self.intervals, self.upper_bounds))]


class _ZeroSearch:
    def __init__(self, mu, a, b, budget):
        self.mu, self.budget = as_measure(mu), budget
        self.trace = ZeroMeasureTrace([(a, b)], [closed_interval_upper(self.mu, a, b, 1)], ["start"])

    def extend(self, depth: int) -> None:
        tr = self.trace
        while len(tr.intervals) <= depth:
            k = len(tr.intervals)
            a, b = tr.intervals[-1]
            m = (b - a) / 3
            target = dyadic(k)
            left, right = (a, a + m), (b - m, b)
            for n in range(k + 1, k + 1 + self.budget):
                ub = closed_interval_upper(self.mu, *left, n)
                if ub < target:
                    chosen, side = left, "left"
                    break
                ub = closed_interval_upper(self.mu, *right, n)
                if ub < target:
                    chosen, side = right, "right"
                    break
            else:
                raise PrecisionStall(
                    f"neither third of [{a}, {b}] certified below 2^-{k} within {self.budget} rounds")
            tr.intervals.append(chosen)
            tr.upper_bounds.append(ub)
            tr.sides.append(side)

    def point(self, n: int) -> Fraction:
        a, b = self.trace.intervals[0]
        width, k = b - a, 0
        while width > dyadic(n):
            width /= 3
            k += 1
        self.extend(k)
        lo, hi = self.trace.intervals[k]
        return (lo + hi) / 2


def find_zero_measure_point(mu: ComputableMeasure, interval=(0, 1), depth: int = 20,
                            budget: int = 64) -> Tuple[ApproxReal, ZeroMeasureTrace]:
    """A point of ``interval`` carrying no mass, as the limit of nested thirds.

    The trace is computed to ``depth`` eagerly and extended on demand by the
    returned real's oracle.  At step k the left and right thirds are tried at
    precisions ``k+1, k+2, ...`` (left first) until one is certified below
    ``2**-k``.
    """
    mu = as_measure(mu)
    if mu.space is not INTERVAL:
        raise SpaceMismatch("zero-measure search runs on [0, 1]")
    a, b = (as_rational(v) for v in interval)
    if not 0 <= a < b <= 1:
        raise BadParameter("need a nondegenerate interval inside [0, 1]")
    search = _ZeroSearch(mu, a, b, budget)
    search.extend(depth)
    return ApproxReal(search.point, bound=Fraction(1), label="zero-measure point"), search.trace


@dataclass
class AlmostDecidableBall:
    """Ball around an ideal point whose radius carries no boundary mass."""

    center_index: int
    center: object
    radius: ApproxReal
    trace: ZeroMeasureTrace


def almost_decidable_balls(mu: ComputableMeasure, center_index: int, count: int,
                           radius_range=(0, 1), depth: int = 20, budget: int = 64) -> List[AlmostDecidableBall]:
    """``count`` radii, one in each equal slice of ``radius_range``.

    Each radius is a zero-mass point of the distance pushforward, searched in
    the middle third of its slice.
    """
    mu = as_measure(mu)
    if count < 1:
        raise BadParameter("count must be positive")
    center = point_from_index(mu.space, center_index)
    nu = pushforward(mu, distance_to(mu.space, center))
    lo, hi = (as_rational(v) for v in radius_range)
    if not 0 <= lo < hi <= 1:
        raise BadParameter("radius range must be a nondegenerate part of [0, 1]")
    step = (hi - lo) / count
    out = []
    for i in range(count):
        a = lo + i * step
        r, trace = find_zero_measure_point(nu, (a + step / 3, a + 2 * step / 3), depth, budget)
        out.append(AlmostDecidableBall(center_index, center, r, trace))
    return out


def almost_decidable_radii(mu, center_index, count, radius_range=(0, 1), depth=20, budget=64) -> List[ApproxReal]:
    return [b.radius for b in almost_decidable_balls(mu, center_index, count, radius_range, depth, budget)]


# -- pushforwards ---------------------------------------------------------------------

@dataclass(frozen=True)
class Morphism:
    """A concrete map between the two spaces.

    ``point_map`` evaluates the map exactly on ideal points when that is
    possible; ``lipschitz`` is a modulus used by the generic pushforward.
    """

    kind: str
    source: Space
    target: Space
    params: Tuple = ()
    point_map: Optional[Callable] = field(default=None, compare=False)
    lipschitz: Optional[Fraction] = None


def identity(space: Space) -> Morphism:
    return Morphism("identity", space, space, (), lambda p: p, Fraction(1))


def distance_to(space: Space, center) -> Morphism:
    center = check_point(space, center)
    return Morphism("distance", space, INTERVAL, (center,),
                    lambda p: distance(space, center, p), Fraction(1))


def binary_decode_map() -> Morphism:
    return Morphism("decode", CANTOR, INTERVAL, (), word_value, Fraction(1))


def binary_expand_map() -> Morphism:
    return Morphism("expand", INTERVAL, CANTOR)


def cdf_transform() -> Morphism:
    return Morphism("cdf", INTERVAL, INTERVAL)


def doubling_map() -> Morphism:
    return Morphism("doubling", INTERVAL, INTERVAL, (),
                    lambda p: (2 * as_rational(p)) % 1 if p != 1 else Fraction(0))


def shift_map() -> Morphism:
    return Morphism("shift", CANTOR, CANTOR, (), lambda w: w[1:], Fraction(2))


def affine_map(a, b) -> Morphism:
    """``x -> a x + b``, which must send [0, 1] into [0, 1]."""
    a, b = as_rational(a), as_rational(b)
    if a == 0 or not (0 <= b <= 1 and 0 <= a + b <= 1):
        raise BadParameter("affine map must be injective and keep [0, 1] inside [0, 1]")
    return Morphism("affine", INTERVAL, INTERVAL, (a, b), lambda p: a * as_rational(p) + b, abs(a))


def lipschitz_map(source: Space, target: Space, fn: Callable, constant, name: str = "lipschitz") -> Morphism:
    """User map, exact on ideal points, with a Lipschitz constant."""
    return Morphism(name, source, target, (), fn, as_rational(constant))


def pushforward(mu: ComputableMeasure, f: Morphism) -> ComputableMeasure:
    """The image measure ``mu ∘ f^-1``."""
    mu = as_measure(mu)
    if mu.space is not f.source:
        raise SpaceMismatch(f"map from {f.source.value}, measure on {mu.space.value}")
    if f.kind == "identity":
        return mu
    if isinstance(mu, MixtureMeasure):
        return MixtureMeasure([(c, pushforward(m, f)) for c, m in mu.parts], name=f"{f.kind}*{mu.name}")
    if isinstance(mu, DiscreteMeasure):
        if f.point_map is None:
            raise UnsupportedMorphism(f"{f.kind} cannot move atoms exactly")
        return DiscreteMeasure(mu.finite.map(f.point_map, f.target), name=f"{f.kind}*{mu.name}")
    special = _closed_form(mu, f)
    if special is not None:
        return special
    if f.point_map is not None and f.lipschitz is not None and f.kind not in ("doubling",):
        return _generic_pushforward(mu, f)
    raise UnsupportedMorphism(f"no pushforward of {mu!r} under {f.kind}")


def _closed_form(mu, f) -> Optional[ComputableMeasure]:
    name = f"{f.kind}*{mu.name}"
    if isinstance(mu, IntervalCdfMeasure):
        if f.kind == "distance":
            c = f.params[0]
            return IntervalCdfMeasure(lambda r: mu.F(c + r) - mu.F(c - r), name=name)
        if f.kind == "cdf":
            return IntervalCdfMeasure(lambda x: x, name=name, density_bound=1)
        if f.kind == "doubling":
            return IntervalCdfMeasure(lambda y: mu.F(y / 2) + mu.F((y + 1) / 2) - mu.F(Fraction(1, 2)),
                                      name=name)
        if f.kind == "affine":
            a, b = f.params
            if a > 0:
                return IntervalCdfMeasure(lambda y: mu.F((y - b) / a), name=name)
            return IntervalCdfMeasure(lambda y: 1 - mu.F((y - b) / a), name=name)
        if f.kind == "expand":
            return CantorCylinderMeasure(
                lambda w: mu.interval_mass(word_value(w), word_value(w) + dyadic(len(w))), name=name)
    if isinstance(mu, IntervalDyadicMeasure):
        if f.kind == "expand":
            return CantorCylinderMeasure(lambda w: Fraction(mu.cell_mass(len(w), int(w, 2) if w else 0)),
                                         name=name)
        if f.kind == "doubling":
            return IntervalDyadicMeasure(
                lambda j, k: Fraction(mu.cell_mass(j + 1, k)) + Fraction(mu.cell_mass(j + 1, k + (1 << j))),
                name=name)
        if f.kind == "cdf":
            return lebesgue()
    if isinstance(mu, CantorCylinderMeasure) and mu.is_nonatomic:
        if f.kind == "decode":
            return IntervalDyadicMeasure(lambda j, k: mu.cylinder_mass(format(k, f"0{j}b") if j else ""),
                                         name=name)
        if f.kind == "distance":
            c = f.params[0]

            def cell(j, k):
                u = format(k, f"0{j}b") if j else ""
                cj = c[:j].ljust(j, "0")
                return mu.cylinder_mass("".join("1" if x != y else "0" for x, y in zip(u, cj)))

            return IntervalDyadicMeasure(cell, name=name)
    if isinstance(mu, CantorCylinderMeasure) and f.kind == "shift":
        return CantorCylinderMeasure(lambda w: mu.cylinder_mass("0" + w) + mu.cylinder_mass("1" + w),
                                     name=name, atom_flag=mu.atom_flag if mu.is_nonatomic else UNKNOWN)
    if f.kind in ("cdf", "expand"):
        if not mu.is_nonatomic:
            raise AtomicMeasure(f"{f.kind} needs a non-atomic measure")
    return None


def _generic_pushforward(mu, f) -> ProkhorovMeasure:
    shift = max(ceil_log2(f.lipschitz), 0) if f.lipschitz > 0 else 0

    def approx_fn(n):
        return mu.approx(n + shift).map(f.point_map, f.target)

    flag = UNKNOWN
    if isinstance(mu.atom_flag, tuple):
        flag = tuple((f.point_map(p), w) for p, w in mu.atom_flag)
    return ProkhorovMeasure(f.target, approx_fn, flag, name=f"{f.kind}*{mu.name}")


# -- Prokhorov distance ---------------------------------------------------------------

def _subset_epsilon(mass_s: Fraction, dists: List[Tuple[Fraction, Fraction]]) -> Fraction:
    """Least eps with ``mass_s <= nu({y : d(y, S) < eps}) + eps``.

    ``dists`` holds (distance to S, weight) for the atoms of nu.
    """
    levels: Dict[Fraction, Fraction] = {}
    for d, w in dists:
        levels[d] = levels.get(d, Fraction(0)) + w
    edges = sorted(levels)
    # on [0, e_1] nothing is inside yet; on (e_j, e_{j+1}] the first j levels are
    if mass_s <= edges[0]:
        return mass_s
    covered = Fraction(0)
    for j, e in enumerate(edges):
        covered += levels[e]
        c = max(e, mass_s - covered)
        if j + 1 == len(edges) or c <= edges[j + 1]:
            return c
    raise AssertionError("unreachable")


def prokhorov_one_sided(mu: FiniteMeasure, nu: FiniteMeasure) -> Fraction:
    """``inf{eps : mu(A) <= nu(A^eps) + eps for all A}`` with ``A^eps`` the open eps-neighbourhood."""
    if mu.space is not nu.space:
        raise SpaceMismatch("measures in different spaces")
    if len(mu.atoms) > EXACT_SUPPORT_CAP or len(nu.atoms) > EXACT_SUPPORT_CAP:
        raise SupportTooLarge(
            f"exact method limited to {EXACT_SUPPORT_CAP} atoms; use prokhorov_bisect")
    space = mu.space
    pts = mu.atoms
    dmat = [[distance(space, p, q) for q, _ in nu.atoms] for p, _ in pts]
    best = Fraction(0)
    for r in range(1, len(pts) + 1):
        for subset in itertools.combinations(range(len(pts)), r):
            mass_s = sum((pts[i][1] for i in subset), Fraction(0))
            dists = [(min(dmat[i][j] for i in subset), w) for j, (_, w) in enumerate(nu.atoms)]
            best = max(best, _subset_epsilon(mass_s, dists))
    return best


def prokhorov(mu: FiniteMeasure, nu: FiniteMeasure) -> Fraction:
    """Exact Prokhorov distance of two finitely supported measures."""
    return max(prokhorov_one_sided(mu, nu), prokhorov_one_sided(nu, mu))


def _flow_deficit(mu: FiniteMeasure, nu: FiniteMeasure, eps: Fraction, strict_margin: bool) -> Fraction:
    """``max_S mu(S) - nu(S^eps)`` via max-flow (``S^eps`` strict neighbourhood)."""
    g = nx.DiGraph()
    for i, (p, w) in enumerate(mu.atoms):
        g.add_edge("s", ("a", i), capacity=w)
        for j, (q, _) in enumerate(nu.atoms):
            if distance(mu.space, p, q) < eps:
                g.add_edge(("a", i), ("b", j), capacity=Fraction(1))
    for j, (_, w) in enumerate(nu.atoms):
        g.add_edge(("b", j), "t", capacity=w)
    flow, _ = nx.maximum_flow(g, "s", "t")
    return 1 - Fraction(flow)


def prokhorov_bisect(mu: FiniteMeasure, nu: FiniteMeasure, n: int) -> Tuple[Fraction, Fraction]:
    """Enclosure ``(lo, hi)`` of the Prokhorov distance with ``hi - lo <= 2**-n``.

    Feasibility of eps is the Strassen condition ``max_S mu(S) - nu(S^eps) <= eps``
    in both directions, decided exactly by max-flow.
    """
    if mu.space is not nu.space:
        raise SpaceMismatch("measures in different spaces")

    def feasible(eps):
        return (_flow_deficit(mu, nu, eps, True) <= eps and _flow_deficit(nu, mu, eps, True) <= eps)

    lo, hi = Fraction(0), Fraction(1)
    if feasible(lo):
        return lo, lo
    while hi - lo > dyadic(n):
        mid = (lo + hi) / 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi
