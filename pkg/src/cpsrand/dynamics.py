"""Dynamical systems, Birkhoff sums and the deviation-set machinery.

Exact-first: the shift and the doubling map (conjugate to the shift by
binary expansion) are handled with cylinder combinatorics in exact
rationals.  Manneville-Pomeau and rotation orbits use validated dyadic
interval enclosures.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import gmpy2
import numpy as np

from .errors import (
    BadAlpha,
    BadDelta,
    BadParameter,
    BadRatio,
    PrecisionExhausted,
    TooLarge,
    UnsupportedObservable,
)
from .exact_core import (
    ApproxReal,
    Ordering,
    as_rational,
    const,
    dyadic,
    format_rational,
    lift,
    separate_within,
    sqrt_oracle,
)
from .isomorphism import binary_decode, expand_point
from .measures import (
    CantorCylinderMeasure,
    ComputableMeasure,
    DiscreteMeasure,
    FiniteMeasure,
    IntervalCdfMeasure,
    ZeroMeasureTrace,
    affine_map,
    bernoulli,
    find_zero_measure_point,
    lebesgue,
    pushforward,
)
from .spaces import CANTOR, INTERVAL, ApproxPoint, Space, as_point

EXACT_WORD_LIMIT = 24
MATERIALIZE_LIMIT = 22


# -- observables ----------------------------------------------------------------------

def _dyadic_exponent(q: Fraction) -> Optional[int]:
    d = q.denominator
    return d.bit_length() - 1 if d & (d - 1) == 0 else None


@dataclass(frozen=True)
class ObservableFn:
    """A bounded observable with an explicit bound ``M``.

    Forms: ``local`` (Cantor; depends on the first L coordinates through a
    value table, covering cylinder indicators), ``step`` (interval;
    piecewise constant on ``[c_i, c_{i+1})``) and ``identity`` (interval).
    """

    form: str
    space: Space
    data: Tuple
    bound: Fraction
    label: str = ""

    def table(self) -> Tuple[int, Tuple[Fraction, ...]]:
        """``(L, values)`` with f determined by the first L binary digits."""
        if self.form == "local":
            return self.data
        if self.form == "step":
            cuts, vals = self.data
            exps = [_dyadic_exponent(c) for c in cuts]
            if any(e is None for e in exps):
                raise UnsupportedObservable("step cut points must be dyadic for exact mode")
            L = max(max(exps), 1)
            table = []
            for k in range(1 << L):
                x = Fraction(k, 1 << L)
                table.append(self.value(x))
            return L, tuple(table)
        raise UnsupportedObservable(f"{self.form} observable has no cylinder form")

    def value(self, x) -> Fraction:
        """Exact value at an ideal point (word or rational)."""
        if self.form == "local":
            L, table = self.data
            w = x[:L].ljust(L, "0")
            return table[int(w, 2)]
        x = as_rational(x)
        if self.form == "identity":
            return x
        cuts, vals = self.data
        for i, v in enumerate(vals):
            if cuts[i] <= x < cuts[i + 1] or (i == len(vals) - 1 and x == cuts[-1]):
                return v
        raise BadParameter(f"{x} outside [0, 1]")

    def range_on(self, lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
        """Min and max of f over ``[lo, hi]`` (interval forms)."""
        if self.form == "identity":
            return lo, hi
        if self.form != "step":
            raise UnsupportedObservable("range_on needs an interval observable")
        cuts, vals = self.data
        hit = [v for i, v in enumerate(vals) if cuts[i] <= hi and (lo < cuts[i + 1] or i == len(vals) - 1)]
        return min(hit), max(hit)

    def mean(self, mu: ComputableMeasure) -> Fraction:
        """Exact ``∫ f dmu`` for the closed-form measures."""
        if self.form == "local":
            if not isinstance(mu, CantorCylinderMeasure):
                raise UnsupportedObservable("local observables need a cylinder measure")
            L, table = self.data
            return sum((v * mu.cylinder_mass(format(k, f"0{L}b")) for k, v in enumerate(table) if v),
                       Fraction(0))
        if not isinstance(mu, IntervalCdfMeasure):
            raise UnsupportedObservable("interval observables need a CDF measure")
        if self.form == "step":
            cuts, vals = self.data
            return sum((v * mu.interval_mass(a, b) for v, a, b in zip(vals, cuts, cuts[1:])), Fraction(0))
        # identity: integrate x dF exactly only for Lebesgue-like closed forms
        if mu.name == "lebesgue":
            return Fraction(1, 2)
        raise UnsupportedObservable("mean of the identity needs Lebesgue measure")

    def second_moment(self, mu: ComputableMeasure) -> Fraction:
        sq = ObservableFn(self.form, self.space, _square_data(self), self.bound ** 2)
        return sq.mean(mu)

    def centered_l2(self, mu: ComputableMeasure) -> Fraction:
        """``||f - ∫f||^2`` in ``L^2(mu)``."""
        m = self.mean(mu)
        return self.second_moment(mu) - m * m


def _square_data(f: ObservableFn):
    if f.form == "local":
        L, table = f.data
        return L, tuple(v * v for v in table)
    if f.form == "step":
        cuts, vals = f.data
        return cuts, tuple(v * v for v in vals)
    raise UnsupportedObservable("no exact square for the identity")


def cylinder(word: str) -> ObservableFn:
    """Indicator of the cylinder ``[word]``."""
    if any(ch not in "01" for ch in word):
        raise BadParameter("not a binary word")
    if not word:
        return local_function(1, [1, 1], label="1")
    L = len(word)
    table = [Fraction(0)] * (1 << L)
    table[int(word, 2)] = Fraction(1)
    return ObservableFn("local", CANTOR, (L, tuple(table)), Fraction(1), label=f"1[{word}]")


def local_function(L: int, values: Sequence, label: str = "") -> ObservableFn:
    vals = tuple(as_rational(v) for v in values)
    if L < 1 or len(vals) != 1 << L:
        raise BadParameter("need 2**L table values")
    return ObservableFn("local", CANTOR, (L, vals), max(abs(v) for v in vals), label=label or "local")


def step_function(cutpoints: Sequence, values: Sequence) -> ObservableFn:
    cuts = tuple(as_rational(c) for c in cutpoints)
    vals = tuple(as_rational(v) for v in values)
    if cuts[0] != 0 or cuts[-1] != 1 or len(cuts) != len(vals) + 1 or any(
            a >= b for a, b in zip(cuts, cuts[1:])):
        raise BadParameter("cut points must increase from 0 to 1, one more than values")
    return ObservableFn("step", INTERVAL, (cuts, vals), max(abs(v) for v in vals), label="step")


def dyadic_indicator(a, b) -> ObservableFn:
    """Indicator of ``[a, b)`` inside [0, 1]."""
    a, b = as_rational(a), as_rational(b)
    if not 0 <= a < b <= 1:
        raise BadParameter("need 0 <= a < b <= 1")
    cuts, vals = [Fraction(0)], []
    if a > 0:
        cuts.append(a)
        vals.append(Fraction(0))
    vals.append(Fraction(1))
    cuts.append(b)
    if b < 1:
        vals.append(Fraction(0))
        cuts.append(Fraction(1))
    f = step_function(cuts, vals)
    return ObservableFn("step", INTERVAL, f.data, Fraction(1), label=f"1[{a},{b})")


def identity_observable() -> ObservableFn:
    return ObservableFn("identity", INTERVAL, (), Fraction(1), label="x")


# -- systems --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationBound:
    """Claimed decay ``|C_n(E_i, E_j)| <= c(i, j) / n**alpha``."""

    alpha: Fraction
    c: Callable[[int, int], Fraction]

    def __post_init__(self):
        a = as_rational(self.alpha)
        if not 0 < a < 1:
            raise BadAlpha("alpha must lie in (0, 1)")
        object.__setattr__(self, "alpha", a)

    def allows(self, value: Fraction, i: int, j: int, n: int) -> bool:
        """Exact test of ``|value| * n**alpha <= c``."""
        p, q = self.alpha.numerator, self.alpha.denominator
        c = as_rational(self.c(i, j))
        return abs(value) ** q * n ** p <= c ** q


@dataclass(frozen=True)
class DynSystem:
    kind: str
    space: Space
    params: Tuple = ()
    measure: Optional[ComputableMeasure] = field(default=None, compare=False)
    mixing: Optional[CorrelationBound] = field(default=None, compare=False)

    @property
    def exact(self) -> bool:
        return self.kind in ("shift", "doubling")

    def cylinder_measure(self) -> CantorCylinderMeasure:
        """The shift-side measure for exact computations."""
        if self.kind == "shift":
            return self.measure
        if self.kind == "doubling":
            return bernoulli(Fraction(1, 2))
        raise UnsupportedObservable(f"{self.kind} has no cylinder model")


def shift(p=Fraction(1, 2)) -> DynSystem:
    return DynSystem("shift", CANTOR, (as_rational(p),), bernoulli(p))


def doubling() -> DynSystem:
    return DynSystem("doubling", INTERVAL, (), lebesgue())


def manneville_pomeau(s) -> DynSystem:
    """``T(x) = x + x**(1+s) mod 1`` for rational s > 0 with denominator at most 4."""
    s = as_rational(s)
    if s <= 0 or s.denominator > 4:
        raise BadParameter("s must be a positive rational with denominator <= 4")
    return DynSystem("manneville_pomeau", INTERVAL, (s,))


def rotation(theta) -> DynSystem:
    return DynSystem("rotation", INTERVAL, (lift(theta),), lebesgue())


def golden_rotation() -> DynSystem:
    """Rotation by ``(sqrt(5) - 1) / 2``."""
    root5 = sqrt_oracle(5)
    theta = ApproxReal(lambda n: (root5(n + 1) - 1) / 2, bound=Fraction(1), label="golden")
    return rotation(theta)


def _system_table(sys: DynSystem, f: ObservableFn):
    if not sys.exact:
        raise UnsupportedObservable(f"exact mode needs the shift or doubling map, not {sys.kind}")
    if f.space is not sys.space:
        raise UnsupportedObservable("observable lives on another space")
    return f.table()


# -- orbits ---------------------------------------------------------------------------

def _root_floor(n: int, q: int) -> int:
    return int(gmpy2.iroot(gmpy2.mpz(n), q)[0])


def _root_ceil(n: int, q: int) -> int:
    r, exact = gmpy2.iroot(gmpy2.mpz(n), q)
    return int(r) if exact else int(r) + 1


def mp_step_scaled(lo: int, hi: int, s: Fraction, bits: int) -> Tuple[int, int]:
    """One MP step on the dyadic enclosure ``[lo, hi] / 2**bits``, rounded outward."""
    p, q = s.numerator, s.denominator
    one = 1 << bits
    # 2**bits * x**(1+s) = (a**(p+q) / 2**(bits*p)) ** (1/q) for x = a / 2**bits
    num_lo = lo ** (p + q) >> (bits * p)
    den_mask = (1 << (bits * p)) - 1
    num_hi_raw = hi ** (p + q)
    num_hi = (num_hi_raw >> (bits * p)) + (1 if num_hi_raw & den_mask else 0)
    new_lo = lo + _root_floor(num_lo, q)
    new_hi = hi + _root_ceil(num_hi, q)
    if new_lo >= one:
        new_lo, new_hi = new_lo - one, new_hi - one
    elif new_hi >= one:
        raise PrecisionExhausted("enclosure straddles the branch point of the map")
    if new_hi - new_lo > one >> 1:
        raise PrecisionExhausted("enclosure wider than 1/2")
    return new_lo, new_hi


def mp_orbit_enclosure(s, x0, steps: int, bits: int = 256) -> List[Tuple[Fraction, Fraction]]:
    """Validated enclosures ``[lo_k, hi_k]`` of ``T^k(x0)`` for k = 0..steps.

    Raises PrecisionExhausted at the first step where the enclosure cannot
    be continued; the message carries the step index.
    """
    s = as_rational(s)
    x0 = as_rational(x0)
    scale = 1 << bits
    lo = math.floor(x0 * scale)
    hi = math.ceil(x0 * scale)
    out = [(Fraction(lo, scale), Fraction(hi, scale))]
    for k in range(1, steps + 1):
        try:
            lo, hi = mp_step_scaled(lo, hi, s, bits)
        except PrecisionExhausted as exc:
            raise PrecisionExhausted(f"step {k}: {exc}") from exc
        out.append((Fraction(lo, scale), Fraction(hi, scale)))
    return out


def rotation_orbit_enclosure(theta, x0, steps: int, bits: int = 64) -> List[Tuple[Fraction, Fraction]]:
    theta = lift(theta)
    x0 = as_rational(x0)
    m = bits + max(steps, 1).bit_length() + 1
    t, err = theta(m), dyadic(m)
    out = []
    for k in range(steps + 1):
        c = (x0 + k * t) % 1
        e = k * err
        lo, hi = c - e, c + e
        if hi - lo > Fraction(1, 2):
            raise PrecisionExhausted(f"step {k}: rotation enclosure wider than 1/2")
        out.append((lo, hi))
    return out


def _rational_digits(x: Fraction, k: int) -> str:
    """First k binary digits of ``x`` in [0, 1), greedy (doubling itinerary)."""
    p, q = x.numerator, x.denominator
    out = []
    for _ in range(k):
        p *= 2
        if p >= q:
            out.append("1")
            p -= q
        else:
            out.append("0")
    return "".join(out)


def itinerary(sys: DynSystem, x, k: int) -> str:
    """First k symbols of the shift-side coding of x."""
    if sys.kind == "shift":
        return as_point(CANTOR, x).prefix(k)
    if sys.kind == "doubling":
        if isinstance(x, ApproxPoint):
            return expand_point(x.as_real()).prefix(k)
        if isinstance(x, ApproxReal):
            return expand_point(x).prefix(k)
        x = as_rational(x)
        if x == 1:
            return "1" + _rational_digits(Fraction(0), k - 1) if k else ""
        return _rational_digits(x, k)
    raise UnsupportedObservable(f"{sys.kind} has no symbolic coding")


def iterate(sys: DynSystem, x, n: int, bits: int = 256):
    """``T^n(x)``.

    Shift: drops n symbols.  Doubling: exact on rationals, via the binary
    expansion otherwise.  MP and rotation: a validated enclosure
    ``(lo, hi)``.
    """
    if n < 0:
        raise BadParameter("n must be non-negative")
    if sys.kind == "shift":
        if isinstance(x, str):
            return x[n:]
        pt = as_point(CANTOR, x)
        return ApproxPoint.from_prefix(lambda k: pt.prefix(k + n)[n:], label=f"T^{n}")
    if sys.kind == "doubling":
        if isinstance(x, (ApproxPoint, ApproxReal)):
            real = x.as_real() if isinstance(x, ApproxPoint) else x
            bitsrc = expand_point(real)
            return binary_decode(ApproxPoint.from_prefix(lambda k: bitsrc.prefix(k + n)[n:]))
        x = as_rational(x)
        return (x * pow(2, n, x.denominator * (1 << n))) % 1 if n else x
    if sys.kind == "manneville_pomeau":
        return mp_orbit_enclosure(sys.params[0], x, n, bits)[-1]
    if sys.kind == "rotation":
        return rotation_orbit_enclosure(sys.params[0], x, n)[-1]
    raise BadParameter(f"unknown system {sys.kind}")


def mp_map(s, x) -> Fraction:
    """Exact ``x + x**(1+s) mod 1`` when the power is rational."""
    s, x = as_rational(s), as_rational(x)
    if s.denominator != 1:
        raise BadParameter("exact MP evaluation needs integer s")
    return (x + x ** (1 + s.numerator)) % 1 if x + x ** (1 + s.numerator) != 1 else Fraction(0)


# -- Birkhoff sums --------------------------------------------------------------------

@dataclass(frozen=True)
class Enclosure:
    lo: Fraction
    hi: Fraction

    def contains(self, v) -> bool:
        return self.lo <= as_rational(v) <= self.hi


def _common_table(table):
    den = math.lcm(*(v.denominator for v in table))
    return den, np.array([int(v * den) for v in table], dtype=object if den > 1 << 40 else np.int64)


def birkhoff_prefix_sums(sys: DynSystem, f: ObservableFn, x, n: int) -> Tuple[np.ndarray, int]:
    """``(cum, den)`` with ``S_k f(x) = cum[k-1] / den`` for k = 1..n (exact)."""
    L, table = _system_table(sys, f)
    word = itinerary(sys, x, n + L - 1)
    bits = np.frombuffer(word.encode("ascii"), dtype=np.uint8).astype(np.int64) - ord("0")
    window = np.zeros(n, dtype=np.int64)
    for j in range(L):
        window = window * 2 + bits[j:j + n]
    den, nums = _common_table(table)
    return np.cumsum(nums[window]), den


def birkhoff_average(sys: DynSystem, f: ObservableFn, x, n: int, bits: int = 256):
    """``S_n f(x) / n``: exact for shift/doubling, an :class:`Enclosure` otherwise."""
    if n < 1:
        raise BadParameter("n must be positive")
    if sys.exact:
        cum, den = birkhoff_prefix_sums(sys, f, x, n)
        return Fraction(int(cum[-1]), den * n)
    if sys.kind == "manneville_pomeau":
        orbit = mp_orbit_enclosure(sys.params[0], x, n - 1, bits)
    else:
        orbit = rotation_orbit_enclosure(sys.params[0], x, n - 1, bits)
    lo = hi = Fraction(0)
    for a, b in orbit:
        if sys.kind == "rotation" and (a < 0 or b >= 1):
            a, b = Fraction(0), Fraction(1)
        fl, fh = f.range_on(a % 1 if a >= 1 else a, b)
        lo += fl
        hi += fh
    return Enclosure(lo / n, hi / n)


# -- correlations ---------------------------------------------------------------------

def _constraint_mass(p: Fraction, assign: Dict[int, str]) -> Fraction:
    ones = sum(1 for v in assign.values() if v == "1")
    return p ** ones * (1 - p) ** (len(assign) - ones)


def correlation(sys: DynSystem, E: ObservableFn, F: ObservableFn, n: int):
    """``C_n(E, F) = mu((E∘T^n) F) - mu(E) mu(F)``.

    Exact for shift/doubling with cylinder-form observables (by merging
    the coordinate constraints of both windows); an :class:`Enclosure` for
    rotations with interval indicators.
    """
    if n < 0:
        raise BadParameter("n must be non-negative")
    if sys.kind == "rotation":
        return _rotation_correlation(sys, E, F, n)
    L1, t1 = _system_table(sys, E)
    L2, t2 = _system_table(sys, F)
    if n + max(L1, L2) > EXACT_WORD_LIMIT:
        raise TooLarge(f"n + word length exceeds {EXACT_WORD_LIMIT}")
    mu = sys.cylinder_measure()
    p = mu.cylinder_mass("1")
    joint = Fraction(0)
    for a, ea in enumerate(t1):
        if not ea:
            continue
        u = format(a, f"0{L1}b")
        for b, fb in enumerate(t2):
            if not fb:
                continue
            v = format(b, f"0{L2}b")
            assign = {i: ch for i, ch in enumerate(v)}
            if any(assign.get(n + i, ch) != ch for i, ch in enumerate(u)):
                continue
            assign.update({n + i: ch for i, ch in enumerate(u)})
            joint += ea * fb * _constraint_mass(p, assign)
    return joint - exact_mean(sys, E) * exact_mean(sys, F)


def _shift_side(f: ObservableFn) -> ObservableFn:
    if f.form == "local":
        return f
    L, table = f.table()
    return local_function(L, table, label=f.label)


def exact_mean(sys: DynSystem, f: ObservableFn) -> Fraction:
    if sys.kind == "doubling":
        return _shift_side(f).mean(sys.cylinder_measure())
    return f.mean(sys.measure)


def _arc_overlap(a, b, c, d, t) -> Fraction:
    """Length of ``[c, d) ∩ ([a, b) - t mod 1)`` on the circle."""
    lo, hi = (a - t) % 1, (a - t) % 1 + (b - a)
    pieces = [(lo, min(hi, Fraction(1)))]
    if hi > 1:
        pieces.append((Fraction(0), hi - 1))
    return sum((max(Fraction(0), min(d, y) - max(c, x)) for x, y in pieces), Fraction(0))


def _interval_of(f: ObservableFn) -> Tuple[Fraction, Fraction]:
    if f.form != "step" or sorted(set(f.data[1])) != [0, 1] or list(f.data[1]).count(1) != 1:
        raise UnsupportedObservable("rotation correlations need interval indicators")
    cuts, vals = f.data
    i = list(vals).index(1)
    return cuts[i], cuts[i + 1]


def _rotation_correlation(sys, E, F, n, precision: int = 40) -> Enclosure:
    a, b = _interval_of(E)
    c, d = _interval_of(F)
    theta = sys.params[0]
    m = precision + max(n, 1).bit_length() + 2
    t = (n * theta(m)) % 1
    err = 2 * n * dyadic(m)  # overlap is 2-Lipschitz in the shift
    mid = _arc_overlap(a, b, c, d, t) - (b - a) * (d - c)
    return Enclosure(mid - err, mid + err)


@dataclass
class MixingRow:
    pair: int
    n: int
    value: Union[Fraction, Enclosure]
    bound_ok: Optional[bool]
    zero_ok: Optional[bool] = None


def verify_mixing(sys: DynSystem, pairs: Sequence[Tuple[ObservableFn, ObservableFn]],
                  bound: Optional[CorrelationBound], n_range: Sequence[int]) -> List[MixingRow]:
    """Check ``|C_n| <= c/n^alpha`` on each pair and n; for the shift also the exact-zero horizon."""
    rows = []
    for idx, (E, F) in enumerate(pairs):
        for n in n_range:
            val = correlation(sys, E, F, n)
            ok = None
            if bound is not None and n >= 1:
                if isinstance(val, Enclosure):
                    worst, best = max(abs(val.lo), abs(val.hi)), (
                        Fraction(0) if val.lo <= 0 <= val.hi else min(abs(val.lo), abs(val.hi)))
                    if bound.allows(worst, idx, idx, n):
                        ok = True
                    elif not bound.allows(best, idx, idx, n):
                        ok = False
                else:
                    ok = bound.allows(val, idx, idx, n)
            zero = None
            if sys.kind in ("shift", "doubling") and sys.exact:
                horizon = _system_table(sys, F)[0]
                if n >= horizon:
                    zero = val == 0
            rows.append(MixingRow(idx, n, val, ok, zero))
    return rows


# -- deviation sets -------------------------------------------------------------------

def _deviation_exceeds(avg: Fraction, mean: Fraction, delta, budget: int = 64) -> bool:
    dev = abs(avg - mean)
    if isinstance(delta, Fraction):
        if dev == delta:
            raise BadDelta(f"delta {delta} equals an achievable deviation")
        return dev > delta
    verdict = separate_within(const(dev), delta, 4, budget)
    if verdict is Ordering.UNSEPARATED:
        raise BadDelta("delta cannot be separated from an achievable deviation")
    return verdict is Ordering.GREATER


def _as_delta(delta):
    if isinstance(delta, ApproxReal):
        return delta
    d = as_rational(delta)
    if d <= 0:
        raise BadParameter("delta must be positive")
    return d


def _sum_law(sys: DynSystem, f: ObservableFn, n: int) -> Tuple[List[int], List[int], int, int]:
    """``(sums, weights, den, scale)``: ``S_n f = sums[i] / den`` with probability ``weights[i] / scale``.

    One-symbol observables take the binomial shortcut.  Otherwise dynamic
    programming over (last L-1 symbols, scaled partial sum) with integer
    weights: for ``p = a/b`` every path of length m has weight
    ``a^ones (b-a)^zeros / b^m``.
    """
    L, table = _system_table(sys, f)
    p = sys.cylinder_measure().cylinder_mass("1")
    a, b = p.numerator, p.denominator
    den, nums = _common_table(table)
    nums = [int(v) for v in nums]
    if L == 1:
        return _binomial_law(nums, a, b, n) + (den, b ** n)
    lo = min(nums)
    span = max(nums) - lo
    width = n * span + 1
    states = 1 << (L - 1)
    mask = states - 1
    cur = np.zeros((states, width), dtype=object)
    for k in range(states):
        ones = bin(k).count("1")
        cur[k, 0] = a ** ones * (b - a) ** (L - 1 - ones)
    for step in range(n):
        used = step * span + 1
        nxt = np.zeros((states, width), dtype=object)
        for k in range(states):
            row = cur[k, :used]
            for bit, wb in ((0, b - a), (1, a)):
                if not wb:
                    continue
                w = (k << 1) | bit
                off = nums[w] - lo
                nxt[w & mask, off:off + used] += row * wb
        cur = nxt
    total = cur.sum(axis=0)
    pairs = [(i + n * lo, int(m)) for i, m in enumerate(total) if m]
    return [s for s, _ in pairs], [m for _, m in pairs], den, b ** (n + L - 1)


def _binomial_law(nums: List[int], a: int, b: int, n: int) -> Tuple[List[int], List[int]]:
    v0, v1 = nums
    if a == 0:
        return [n * v0], [b ** n]
    if a == b:
        return [n * v1], [b ** n]
    law: Dict[int, int] = {}
    # w_k = C(n, k) a^k (b-a)^(n-k), stepped by the exact ratio (n-k) a / ((k+1)(b-a))
    w = (b - a) ** n
    for k in range(n + 1):
        s = n * v0 + k * (v1 - v0)
        law[s] = law.get(s, 0) + w
        if k < n:
            w = w * (n - k) * a // ((k + 1) * (b - a))
    sums = sorted(law)
    return sums, [law[s] for s in sums]


def sum_distribution(sys: DynSystem, f: ObservableFn, n: int) -> Dict[Fraction, Fraction]:
    """Exact law of ``S_n f`` under the invariant measure."""
    sums, weights, den, scale = _sum_law(sys, f, n)
    return {Fraction(s, den): Fraction(w, scale) for s, w in zip(sums, weights)}


def deviation_measure(sys: DynSystem, f: ObservableFn, delta, n: int, mode: str = "exact") -> Fraction:
    """``mu{x : |S_n f(x)/n - ∫f| > delta}`` exactly, or its Chebyshev bound.

    The Chebyshev bound is ``(||f~||^2/n + (2/n) sum_{k=1}^{L-1} |C_k(f, f)|) / delta^2``:
    for cylinder observables of length L on the shift every correlation
    with lag >= L is exactly zero.  With a :class:`CorrelationBound` on the
    system the decay term ``2 c / ((1 - alpha) n^alpha)`` is used instead,
    rounded up to a rational.
    """
    if n < 1:
        raise BadParameter("n must be positive")
    delta = _as_delta(delta)
    if mode == "exact":
        return _exact_deviation(sys, f, delta, n)
    if mode != "chebyshev":
        raise BadParameter("mode is 'exact' or 'chebyshev'")
    if not isinstance(delta, Fraction):
        raise BadParameter("the Chebyshev bound needs a rational delta")
    return chebyshev_constant(sys, f, n) / (n * delta * delta)


def _exceed_cut(devs: List[Fraction], delta) -> Optional[Fraction]:
    """Least deviation exceeding delta (None if none does); raises BadDelta on a tie."""
    if isinstance(delta, Fraction) and delta in devs:
        raise BadDelta(f"delta {delta} equals an achievable deviation")
    # exceeding delta is monotone in the deviation: search the sorted values
    order = sorted(set(devs))
    lo, hi = 0, len(order)
    while lo < hi:
        mid = (lo + hi) // 2
        if _deviation_exceeds(order[mid], Fraction(0), delta):
            hi = mid
        else:
            lo = mid + 1
    return order[lo] if lo < len(order) else None


def _exact_deviation(sys: DynSystem, f: ObservableFn, delta, n: int) -> Fraction:
    mean = exact_mean(sys, f)
    L, table = _system_table(sys, f)
    p = sys.cylinder_measure().cylinder_mass("1")
    a, b = p.numerator, p.denominator
    den, nums = _common_table(table)
    if L == 1 and 0 < a < b:
        v0, v1 = (int(v) for v in nums)
        devs = [abs(Fraction(n * v0 + k * (v1 - v0), den * n) - mean) for k in range(n + 1)]
        cut = _exceed_cut(devs, delta)
        if cut is None:
            return Fraction(0)
        # the deviation is convex in k, so the exceeding k form the two ends of 0..n
        hit, w, k = 0, (b - a) ** n, 0
        while k <= n and devs[k] >= cut:
            hit += w
            w = w * (n - k) * a // ((k + 1) * (b - a))
            k += 1
        if k <= n:
            w, j = a ** n, n
            while j >= k and devs[j] >= cut:
                hit += w
                w = w * j * (b - a) // ((n - j + 1) * a)
                j -= 1
        return Fraction(hit, b ** n)
    sums, weights, den, scale = _sum_law(sys, f, n)
    devs = [abs(Fraction(s, den * n) - mean) for s in sums]
    cut = _exceed_cut(devs, delta)
    if cut is None:
        return Fraction(0)
    return Fraction(sum((w for d, w in zip(devs, weights) if d >= cut), 0), scale)


def chebyshev_constant(sys: DynSystem, f: ObservableFn, n: int) -> Fraction:
    """``K`` with ``Var(S_n/n) <= K / n``."""
    g = _shift_side(f) if sys.kind == "doubling" else f
    mu = sys.cylinder_measure()
    var = g.centered_l2(mu)
    if sys.mixing is not None:
        a = sys.mixing.alpha
        c = as_rational(sys.mixing.c(0, 0))
        # n^(1-alpha) >= 1, so 2c n^(1-alpha)/(1-alpha) / n^... folded into K / n with K = var + 2c n^(1-a)/(1-a)
        p, q = (1 - a).numerator, (1 - a).denominator
        root = _root_ceil(n ** p, q)
        return var + 2 * c * root / (1 - a)
    L = g.table()[0]
    corr = sum((abs(correlation(shift_for(mu), g, g, k)) for k in range(1, min(n, L))), Fraction(0))
    return var + 2 * corr


def shift_for(mu) -> DynSystem:
    return DynSystem("shift", CANTOR, (mu.cylinder_mass("1"),), mu)


def deviation_words(sys: DynSystem, f: ObservableFn, delta, n: int) -> Tuple[int, np.ndarray]:
    """``(m, ks)``: the words of length m = n + L - 1 (as integers) whose cylinders form ``A_n^f(delta)``."""
    L, table = _system_table(sys, f)
    m = n + L - 1
    if m > MATERIALIZE_LIMIT:
        raise TooLarge(f"deviation set has 2**{m} candidate cylinders")
    delta = _as_delta(delta)
    mean = exact_mean(sys, f)
    den, nums = _common_table(table)
    ks = np.arange(1 << m, dtype=np.int64)
    total = np.zeros(1 << m, dtype=np.int64)
    low = (1 << L) - 1
    for j in range(n):
        total += nums[(ks >> (m - L - j)) & low]
    outcome = {int(s): _deviation_exceeds(Fraction(int(s), den * n), mean, delta) for s in np.unique(total)}
    keep = np.array([outcome[int(s)] for s in total], dtype=bool) if len(outcome) > 1 else (
        np.full(1 << m, next(iter(outcome.values())), dtype=bool))
    return m, ks[keep]


def deviation_point_exceeds(sys: DynSystem, f: ObservableFn, delta, n: int, x) -> bool:
    """Whether x lies in ``A_n^f(delta)`` (decided from its first n + L - 1 symbols)."""
    cum, den = birkhoff_prefix_sums(sys, f, x, n)
    return _deviation_exceeds(Fraction(int(cum[-1]), den * n), exact_mean(sys, f), _as_delta(delta))


# -- schedules and the interpolation bound --------------------------------------------

def _pow_ceil(i: int, e: Fraction) -> int:
    """``ceil(i ** e)`` for rational e > 0."""
    p, q = e.numerator, e.denominator
    return _root_ceil(i ** p, q)


def power_tail(I: int, e: Fraction, guard_bits: int = 40) -> Fraction:
    """Rational upper bound of ``I^(1-e)/(e-1) + I^(-e)`` (dominates ``sum_{i>=I} i^-e``)."""
    e = as_rational(e)
    if e <= 1:
        raise BadAlpha("the tail exponent must exceed 1")
    p, q = e.numerator, e.denominator
    scale = 1 << guard_bits
    # I^e >= floor((I^p * scale^q)^(1/q)) / scale
    lower_pow = Fraction(_root_floor(I ** p * scale ** q, q), scale)
    return Fraction(I) / ((e - 1) * lower_pow) + 1 / lower_pow


@dataclass(frozen=True)
class SubsequenceSchedule:
    alpha: Fraction
    beta: Fraction

    def n(self, i: int) -> int:
        if i < 1:
            raise BadParameter("schedule indices start at 1")
        return _pow_ceil(i, self.beta)

    def indices(self, count: int) -> List[int]:
        return [self.n(i) for i in range(1, count + 1)]

    def ratio(self, i: int) -> Fraction:
        """``beta_i = n_i / n_{i+1}``."""
        return Fraction(self.n(i), self.n(i + 1))

    def tail_bound(self, I: int) -> Fraction:
        """Rational bound on ``sum_{i >= I} n_i^(-alpha)``."""
        return power_tail(I, self.alpha * self.beta)

    @property
    def monotone_from(self) -> int:
        """Index from which the ratios increase (1 for integer exponents)."""
        return 1 if self.beta.denominator == 1 else 2


def make_schedule(alpha, beta=None) -> SubsequenceSchedule:
    alpha = as_rational(alpha)
    if not 0 < alpha < 1:
        raise BadAlpha("alpha must lie in (0, 1)")
    if beta is None:
        beta = Fraction(math.floor(1 / alpha) + 1)
    beta = as_rational(beta)
    if alpha * beta <= 1:
        raise BadAlpha("need alpha * beta > 1")
    return SubsequenceSchedule(alpha, beta)


def interpolation_gap_check(values: Sequence, k: int, l: int, beta, M) -> bool:
    """Whether ``S_k/k - S_l/l <= 2 (1 - beta) M`` on the given stream."""
    beta, M = as_rational(beta), as_rational(M)
    if not (1 <= k <= l) or not beta <= Fraction(k, l) <= 1:
        raise BadRatio("need beta <= k/l <= 1")
    vals = [as_rational(v) for v in values[:l]]
    if len(vals) < l:
        raise BadParameter("stream shorter than l")
    if any(abs(v) > M for v in vals):
        raise BadParameter("stream exceeds the bound M")
    sk = sum(vals[:k], Fraction(0))
    sl = sk + sum(vals[k:], Fraction(0))
    return sk / k - sl / l <= 2 * (1 - beta) * M


# -- step approximation -----------------------------------------------------------------

@dataclass
class StepApproximation:
    """Levels ``-B = r_1 < ... < r_k = B`` with ``B > M`` and zero-mass interior levels."""

    levels: List[Union[Fraction, ApproxReal]]
    windows: List[Tuple[Fraction, Fraction]]
    traces: List[ZeroMeasureTrace]
    bound: Fraction
    epsilon: Fraction
    gap_bound: Fraction

    def level_value(self, i: int, n: int) -> Fraction:
        r = self.levels[i]
        return r if isinstance(r, Fraction) else r(n)

    def cell_of(self, v, budget: int = 64) -> int:
        """Index i with ``r_i < v < r_{i+1}``."""
        v = const(v)
        for i in range(len(self.levels) - 1):
            if separate_within(v, lift(self.levels[i + 1]), 4, budget) is Ordering.LESS:
                return i
        return len(self.levels) - 2

    def approx_value(self, v) -> Fraction:
        """``f_eps`` at a point where f takes the value v (levels evaluated exactly or at 2^-30)."""
        return self.level_value(self.cell_of(v), 30)


def observable_law(f: ObservableFn, mu: ComputableMeasure, B: Fraction) -> ComputableMeasure:
    """Law of f under mu, rescaled from ``[-B, B]`` to [0, 1]."""
    def rescale(v):
        return (v + B) / (2 * B)

    if f.form == "local":
        L, table = f.data
        atoms = [(rescale(v), mu.cylinder_mass(format(k, f"0{L}b"))) for k, v in enumerate(table)]
        return DiscreteMeasure(FiniteMeasure(INTERVAL, tuple(a for a in atoms if a[1])))
    if f.form == "step":
        cuts, vals = f.data
        atoms = [(rescale(v), mu.interval_mass(a, b)) for v, a, b in zip(vals, cuts, cuts[1:])]
        return DiscreteMeasure(FiniteMeasure(INTERVAL, tuple(a for a in atoms if a[1])))
    return pushforward(mu, affine_map(1 / (2 * B), Fraction(1, 2)))


def step_approx(f: ObservableFn, mu: ComputableMeasure, epsilon, depth: int = 20,
                budget: int = 64) -> StepApproximation:
    """Step function ``f_eps`` with levels carrying no mass under the law of f.

    The outer levels are ``±B`` with ``B = M + eta`` slightly beyond the
    range of f, so they carry no mass.  Interior levels are zero-mass
    points of the law of f inside windows ``g_j ± w/4`` around the grid
    ``g_j = -B + j w``; adjacent levels are then at most ``3w/2 < eps`` apart.
    """
    eps = as_rational(epsilon)
    if eps <= 0:
        raise BadParameter("epsilon must be positive")
    M = f.bound
    eta = eps / 8
    if eps > 2 * M:
        eta = min(eta, (eps - 2 * M) / 4)
    B = M + eta
    q = 1 if 2 * B < eps else math.floor(3 * B / eps) + 1
    w = 2 * B / q
    law = observable_law(f, mu, B)
    levels: List[Union[Fraction, ApproxReal]] = [-B]
    windows, traces = [], []
    for j in range(1, q):
        g = -B + j * w
        lo, hi = g - w / 4, g + w / 4
        y, trace = find_zero_measure_point(law, ((lo + B) / (2 * B), (hi + B) / (2 * B)), depth, budget)
        levels.append(ApproxReal(lambda n, y=y: 2 * B * y(n + 1 + max(B.numerator.bit_length(), 1)) - B,
                                 bound=B, label=f"r{j}"))
        windows.append((lo, hi))
        traces.append(trace)
    levels.append(B)
    gap = 2 * B if q == 1 else Fraction(3, 2) * w
    return StepApproximation(levels, windows, traces, B, eps, gap)


# -- typicality experiments -----------------------------------------------------------

@dataclass
class BirkhoffRow:
    n: int
    average: Fraction
    mean: Fraction
    on_schedule: bool

    @property
    def abs_dev(self) -> Fraction:
        return abs(self.average - self.mean)

    def csv(self) -> List[str]:
        return [str(self.n), format_rational(self.average), format_rational(self.mean),
                format_rational(self.abs_dev), "true" if self.on_schedule else "false"]


@dataclass
class BirkhoffReport:
    rows: List[BirkhoffRow]
    mean: Fraction
    window_start: int
    window_min: Fraction
    window_max: Fraction

    @property
    def oscillation(self) -> Fraction:
        return self.window_max - self.window_min

    def at(self, n: int) -> BirkhoffRow:
        return next(r for r in self.rows if r.n == n)


def typicality_experiment(sys: DynSystem, x, f: ObservableFn, schedule: SubsequenceSchedule,
                          max_i: int, dense_upto: int = 64, extra: Sequence[int] = (),
                          window_from: Optional[int] = None) -> BirkhoffReport:
    """Birkhoff averages along the schedule plus all n <= dense_upto.

    The oscillation window consists of the schedule samples with index
    ``i >= window_from`` (default ``max_i // 2``).
    """
    if max_i < 1:
        raise BadParameter("max_i must be positive")
    sched = schedule.indices(max_i)
    wanted = sorted(set(sched) | set(range(1, dense_upto + 1)) | set(extra))
    cum, den = birkhoff_prefix_sums(sys, f, x, wanted[-1])
    mean = exact_mean(sys, f)
    on = set(sched)
    rows = [BirkhoffRow(n, Fraction(int(cum[n - 1]), den * n), mean, n in on) for n in wanted]
    start = window_from if window_from is not None else max(max_i // 2, 1)
    window = [r.average for r in rows if r.on_schedule and r.n >= schedule.n(start)]
    return BirkhoffReport(rows, mean, schedule.n(start), min(window), max(window))


def pseudorandom_point(seed: int, length: int) -> ApproxPoint:
    """Cantor point whose first ``length`` bits come from a seeded generator (zeros after)."""
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=length, dtype=np.uint8)
    return ApproxPoint.from_word((bits + ord("0")).tobytes().decode("ascii"))


def preimage_mass(sys: DynSystem, f: ObservableFn) -> Fraction:
    """``mu(T^-1 E)`` for a cylinder-form indicator E, computed from the preimage cylinders."""
    L, table = _system_table(sys, f)
    mu = sys.cylinder_measure()
    total = Fraction(0)
    for k, v in enumerate(table):
        if v:
            w = format(k, f"0{L}b")
            total += v * (mu.cylinder_mass("0" + w) + mu.cylinder_mass("1" + w))
    return total
