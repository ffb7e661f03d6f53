"""Randomness tests as leveled r.e. open sets, their conversions and failure certificates.

A test is a sequence of :class:`EffectiveOpen` levels plus a measure.
Martin-Löf tests bound level masses by ``2**-n``; Schnorr tests also
carry an oracle for the exact level mass.  Borel-Cantelli tests have
summable level masses and are failed by points hit infinitely often.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .dynamics import (
    DynSystem,
    ObservableFn,
    SubsequenceSchedule,
    _deviation_exceeds,
    _system_table,
    birkhoff_prefix_sums,
    chebyshev_constant,
    deviation_measure,
    deviation_words,
    exact_mean,
    power_tail,
)
from .errors import BadConstant, BadParameter, BrokenWitnessChain, StageBudgetExceeded
from .exact_core import ApproxReal, as_rational, const, dyadic, format_rational
from .measures import ComputableMeasure, IntervalCdfMeasure, bernoulli, derive_bounds, lebesgue
from .spaces import (
    CANTOR,
    INTERVAL,
    ApproxPoint,
    EffectiveOpen,
    IdealBall,
    Space,
    Verdict,
    as_point,
    ball_membership,
    ball_within,
    cylinder_ball,
    cylinder_balls,
    cylinder_open,
    interval_ball,
    load_snapshot,
    witness_balls,
)


# -- test objects ---------------------------------------------------------------------

@dataclass
class MLTest:
    """Levels ``A_n`` (n >= 1) with ``mu(A_n) <= 2**-n``."""

    name: str
    space: Space
    level: Callable[[int], EffectiveOpen]
    measure: ComputableMeasure

    def bounds(self, n: int, stage: int, precision: int = 30) -> Tuple[Fraction, Fraction]:
        """``derive_bounds`` bracket of the stage-``stage`` part of ``A_n``."""
        return derive_bounds(self.measure, self.level(n).balls(stage), precision)


@dataclass
class SchnorrTest(MLTest):
    """An ML test whose level masses are computable: ``measure_oracle(n)`` is ``mu(A_n)``."""

    measure_oracle: Callable[[int], ApproxReal] = None


@dataclass
class BCTest:
    """Levels ``C_n`` (n >= 1) with ``sum mu(C_n) <= sum_upper < 2**c``."""

    name: str
    space: Space
    level: Callable[[int], EffectiveOpen]
    measure: ComputableMeasure
    sum_upper: Fraction
    c: Optional[int] = None

    def __post_init__(self):
        self.sum_upper = as_rational(self.sum_upper)
        if self.sum_upper < 0:
            raise BadParameter("sum_upper must be non-negative")
        least = least_constant(self.sum_upper)
        if self.c is None:
            self.c = least
        elif Fraction(2) ** self.c <= self.sum_upper:
            raise BadConstant(f"2**{self.c} does not exceed {self.sum_upper}")

    def level_lower(self, n: int, stage: int) -> Fraction:
        return self.measure.lower(self.level(n).balls(stage), stage)


@dataclass
class StrongBCTest(BCTest):
    """A BC test whose level-mass sum is a computable real."""

    sum_oracle: ApproxReal = None
    level_mass: Optional[Callable[[int], Fraction]] = None
    # first stage at which level n lists its balls
    listed_from: Optional[Callable[[int], int]] = None

    def level_lower(self, n: int, stage: int) -> Fraction:
        if self.listed_from is not None and stage < self.listed_from(n):
            return Fraction(0)
        if self.level_mass is not None:
            return self.level_mass(n)
        return super().level_lower(n, stage)


def least_constant(bound) -> int:
    """Least integer c with ``2**c > bound``."""
    bound = as_rational(bound)
    c = 0 if bound < 1 else math.floor(math.log2(bound)) - 1
    while Fraction(2) ** c <= bound:
        c += 1
    while c > 0 and Fraction(2) ** (c - 1) > bound:
        c -= 1
    return c


# -- certificates ---------------------------------------------------------------------

@dataclass(frozen=True)
class FailureCertificate:
    """``x`` lies in level ``level`` of ``test``: witnessed by ``ball`` at ``stage``."""

    test: str
    level: int
    stage: int
    ball: IdealBall

    def replay(self, x, test) -> bool:
        """Re-run the membership check and confirm the ball is enumerated at the stage."""
        if ball_membership(x, self.ball, self.stage) is not Verdict.YES:
            return False
        U = test.level(self.level)
        return U.witness(x, self.stage) is not None and (
            U._locate is not None or self.ball in U.balls(self.stage))

    def to_json(self) -> dict:
        return {"test": self.test, "level": self.level, "stage": self.stage, "ball": self.ball.to_json()}


@dataclass
class FailureReport:
    certificates: List[FailureCertificate]
    uncertified: List[int]

    @property
    def partial(self) -> bool:
        return bool(self.uncertified)

    def to_json(self) -> dict:
        return {"certificates": [c.to_json() for c in self.certificates],
                "uncertified": self.uncertified, "partial": self.partial}


def _least_stage(x, U: EffectiveOpen, budget: int) -> Optional[Tuple[int, IdealBall]]:
    # membership is monotone in the stage, so bisect for the first YES
    if U.witness(x, budget) is None:
        return None
    lo, hi = 0, budget
    while lo < hi:
        mid = (lo + hi) // 2
        if U.witness(x, mid) is not None:
            hi = mid
        else:
            lo = mid + 1
    return lo, U.witness(x, lo)


def verify_failure(x, test, upto_level: int, stage_budget: int = 64,
                   from_level: int = 1) -> FailureReport:
    """Certificates of ``x ∈ A_n`` for ``from_level <= n <= upto_level``.

    A semi-decision: a level missing from the certificates is merely
    uncertified within the budget.
    """
    x = as_point(test.space, x)
    certs, missing = [], []
    for n in range(from_level, upto_level + 1):
        hit = _least_stage(x, test.level(n), stage_budget)
        if hit is None:
            missing.append(n)
        else:
            certs.append(FailureCertificate(test.name, n, hit[0], hit[1]))
    return FailureReport(certs, missing)


def bc_hits(x, test: BCTest, upto: int, stage: int) -> List[int]:
    """Levels ``n <= upto`` with ``x ∈ C_n`` certified by ``stage``."""
    x = as_point(test.space, x)
    return [n for n in range(1, upto + 1) if test.level(n).witness(x, stage) is not None]


# -- conversions ----------------------------------------------------------------------

def _hit_level(test: BCTest, need: int) -> EffectiveOpen:
    """Points certified in at least ``need`` of ``C_1 .. C_t`` by stage t (cumulative)."""
    space = test.space
    cache: Dict[int, List[IdealBall]] = {}

    def found_at(s: int) -> List[IdealBall]:
        if s not in cache:
            families = [test.level(n).balls(s) for n in range(1, s + 1)]
            cache[s] = witness_balls(space, families, need, s)
        return cache[s]

    def enum(t: int) -> List[IdealBall]:
        out, seen = [], set()
        for s in range(t + 1):
            for b in found_at(s):
                if b not in seen:
                    seen.add(b)
                    out.append(b)
        return out

    return EffectiveOpen(space, enum, name=f"{test.name}>={need}")


def _finite_upper(mu: ComputableMeasure, balls: Sequence[IdealBall], n: int) -> Fraction:
    """Upper bound on the mass of a finite union of balls."""
    if isinstance(mu, IntervalCdfMeasure):
        # non-atomic: the boundary of a finite union is null
        return mu.lower(balls, n)
    return derive_bounds(mu, balls, n)[1]


def _conversion_bounds(test: StrongBCTest, need: int, level: EffectiveOpen, t: int,
                       precision: int) -> Tuple[Fraction, Fraction]:
    """Bracket of ``mu(A)`` from stage t.

    A point hit ``need`` times is either hit ``need`` times by the
    stage-t inner approximations of ``C_1 .. C_t`` or lies in the part of
    some C_n not yet enumerated (n <= t) or in a later C_n (n > t); the
    latter two have total mass at most ``sum - sum_{n<=t} lower(C_n)``.
    """
    mu = test.measure
    lo = mu.lower(level.balls(t), t)
    families = [test.level(n).balls(t) for n in range(1, t + 1)]
    region = witness_balls(test.space, families, need, t) if families else []
    inner = _finite_upper(mu, region, precision) if region else Fraction(0)
    seen = sum((test.level_lower(n, t) for n in range(1, t + 1)), Fraction(0))
    s = test.sum_oracle
    leak = s(precision) + dyadic(precision) - seen
    return lo, min(Fraction(1), inner + max(leak, Fraction(0)))


def strong_bc_to_schnorr(test: StrongBCTest, c: Optional[int] = None, stage_budget: int = 40) -> SchnorrTest:
    """Schnorr test ``A_k`` = points in at least ``2**(k+c)`` of the ``C_n``.

    ``mu(A_k) <= 2**-(k+c) * sum < 2**-k``.  The measure oracle brackets
    ``mu(A_k)`` between the inner witness mass and the hit region of the
    stage-t approximations plus the unseen mass of the sum.
    """
    if c is None:
        c = test.c
    elif Fraction(2) ** c <= test.sum_upper:
        raise BadConstant(f"2**{c} does not exceed {test.sum_upper}")
    if test.sum_oracle is None:
        raise BadParameter("a strong BC test needs its sum oracle")
    levels: Dict[int, EffectiveOpen] = {}

    def level(k: int) -> EffectiveOpen:
        if k < 0:
            raise BadParameter("levels start at 0")
        if k not in levels:
            levels[k] = _hit_level(test, 1 << (k + c))
        return levels[k]

    def measure_oracle(k: int) -> ApproxReal:
        need = 1 << (k + c)

        def oracle(n: int) -> Fraction:
            for t in range(1, need + stage_budget + n + 1):
                lo, hi = _conversion_bounds(test, need, level(k), t, n + 2)
                if hi - lo <= dyadic(n):
                    return (lo + hi) / 2
            raise StageBudgetExceeded(f"level {k} mass bracket did not close to 2^-{n}")

        return ApproxReal(oracle, bound=Fraction(1), label=f"mu(A_{k})")

    out = SchnorrTest(f"schnorr({test.name})", test.space, level, test.measure, measure_oracle)
    out.source = test
    out.need = lambda k: 1 << (k + c)
    out.certified = lambda k, t, n=30: _conversion_bounds(test, 1 << (k + c), level(k), t, n)
    return out


def bc_to_ml(test: BCTest, c: Optional[int] = None) -> MLTest:
    """ML test from a plain BC test via the same hit-count levels (only ``sum_upper`` is used)."""
    if c is None:
        c = test.c
    elif Fraction(2) ** c <= test.sum_upper:
        raise BadConstant(f"2**{c} does not exceed {test.sum_upper}")
    levels: Dict[int, EffectiveOpen] = {}

    def level(k: int) -> EffectiveOpen:
        if k not in levels:
            levels[k] = _hit_level(test, 1 << (k + c))
        return levels[k]

    return MLTest(f"ml({test.name})", test.space, level, test.measure)


# -- built-in tests -------------------------------------------------------------------

def halving_intervals() -> StrongBCTest:
    """``C_n = (0, 2**-n)`` on ([0, 1], Lebesgue); the sum is 1."""
    return StrongBCTest("halving-intervals", INTERVAL,
                        lambda n: EffectiveOpen.of(INTERVAL, [interval_ball(0, dyadic(n))], f"(0,2^-{n})"),
                        lebesgue(), Fraction(1), sum_oracle=const(1), level_mass=dyadic)


def cantor_ones() -> StrongBCTest:
    """``C_n = [1^n]`` on (Cantor, fair coin); the sum is 1."""
    return StrongBCTest("cantor-ones", CANTOR, lambda n: cylinder_open("1" * n), bernoulli(Fraction(1, 2)),
                        Fraction(1), sum_oracle=const(1), level_mass=dyadic)


def empty_test(space: Space = INTERVAL) -> StrongBCTest:
    mu = lebesgue() if space is INTERVAL else bernoulli(Fraction(1, 2))
    return StrongBCTest("empty", space, lambda n: EffectiveOpen.empty(space), mu, Fraction(0),
                        sum_oracle=const(0), level_mass=lambda n: Fraction(0))


def zeros_cylinders() -> SchnorrTest:
    """``A_n = [0^n]`` on (Cantor, fair coin): a Schnorr test with ``mu(A_n) = 2**-n``."""
    return SchnorrTest("zeros-cylinders", CANTOR, lambda n: cylinder_open("0" * n), bernoulli(Fraction(1, 2)),
                       lambda n: const(dyadic(n)))


def initial_segments() -> SchnorrTest:
    """``A_n = [0, 2**-n)`` on ([0, 1], Lebesgue)."""
    return SchnorrTest("initial-segments", INTERVAL,
                       lambda n: EffectiveOpen.of(INTERVAL, [IdealBall(INTERVAL, Fraction(0), dyadic(n))]),
                       lebesgue(), lambda n: const(dyadic(n)))


BUILTIN_TESTS = {
    "halving-intervals": halving_intervals,
    "cantor-ones": cantor_ones,
    "empty": empty_test,
    "zeros-cylinders": zeros_cylinders,
    "initial-segments": initial_segments,
}


def builtin_test(name: str):
    try:
        return BUILTIN_TESTS[name]()
    except KeyError:
        raise BadParameter(f"unknown test {name!r}; known: {', '.join(sorted(BUILTIN_TESTS))}") from None


# -- deviation tests ------------------------------------------------------------------

def _deviation_level(sys: DynSystem, f: ObservableFn, delta, n: int) -> EffectiveOpen:
    """``A_n^f(delta)`` as cylinders (shift) or merged dyadic intervals (doubling).

    The balls are listed from stage ``m = n + L - 1`` on, so a stage-t pass
    over levels never materializes words longer than t.
    """
    L, _ = _system_table(sys, f)
    m = n + L - 1
    cache = {}

    def words() -> np.ndarray:
        if "ks" not in cache:
            cache["ks"] = deviation_words(sys, f, delta, n)[1]
        return cache["ks"]

    if sys.kind == "shift":
        def enum(t):
            out = []
            if t < m:
                return out
            for k in words():
                out.extend(cylinder_balls(format(int(k), f"0{m}b")))
            return out

        def locate(x: ApproxPoint, stage: int):
            if stage < m:
                return None
            u = x.prefix(m)
            cum, den = birkhoff_prefix_sums(sys, f, u, n)
            if not _deviation_exceeds(Fraction(int(cum[-1]), den * n), exact_mean(sys, f), delta):
                return None
            for b in cylinder_balls(u):
                if ball_membership(x, b, stage) is Verdict.YES:
                    return b
            return None

        return EffectiveOpen(CANTOR, enum, name=f"A_{n}", locate=locate)

    def components():
        if "comps" not in cache:
            ks = words()
            comps = []
            for k in ks:
                lo, hi = Fraction(int(k), 1 << m), Fraction(int(k) + 1, 1 << m)
                if comps and comps[-1][1] == lo:
                    comps[-1][1] = hi
                else:
                    comps.append([lo, hi])
            cache["comps"] = [interval_ball(lo, hi) for lo, hi in comps]
        return cache["comps"]

    return EffectiveOpen(INTERVAL, lambda t: components() if t >= m else [], name=f"A_{n}")


def deviation_schnorr_test(sys: DynSystem, f: ObservableFn, delta, schedule: SubsequenceSchedule) -> StrongBCTest:
    """Strong BC test ``C_i = A_{n_i}^f(delta)`` along the schedule.

    Level masses are exact; the sum oracle adds them up to an index I and
    bounds the rest by Chebyshev: ``mu(A_n) <= K / (n delta^2)`` for an
    independent system (``K`` the variance constant), or
    ``<= (var + 2c/(1-alpha)) / (delta^2 n^alpha)`` under a polynomial
    mixing bound.
    """
    L = _system_table(sys, f)[0]
    delta_q = delta if isinstance(delta, ApproxReal) else as_rational(delta)
    if isinstance(delta_q, ApproxReal):
        tail_delta = delta_q(20) - dyadic(20)
    else:
        tail_delta = delta_q
    if tail_delta <= 0:
        raise BadParameter("delta must be positive")
    masses: Dict[int, Fraction] = {}

    def level_mass(i: int) -> Fraction:
        if i not in masses:
            masses[i] = deviation_measure(sys, f, delta_q, schedule.n(i))
        return masses[i]

    if sys.mixing is not None:
        a = sys.mixing.alpha
        var = chebyshev_constant(sys, f, 1) - 2 * as_rational(sys.mixing.c(0, 0))
        coeff = (var + 2 * as_rational(sys.mixing.c(0, 0)) / (1 - a)) / tail_delta ** 2

        def tail(I: int) -> Fraction:
            return coeff * schedule.tail_bound(I)
    else:
        K = chebyshev_constant(sys, f, max(L, 1) + 1)
        coeff = K / tail_delta ** 2

        def tail(I: int) -> Fraction:
            return coeff * power_tail(I, schedule.beta)

    def sum_oracle(n: int) -> Fraction:
        I = 1
        while tail(I) > dyadic(n + 1):
            I += 1
        # exact masses for i < I, tail bounded by 2^-(n+1): midpoint of the bracket
        head = sum((level_mass(i) for i in range(1, I)), Fraction(0))
        return head + tail(I) / 2

    upper = sum_upper_estimate(level_mass, tail)
    test = StrongBCTest(f"deviation({f.label},{format_delta(delta)})", sys.space,
                        lambda i: _deviation_level(sys, f, delta_q, schedule.n(i)),
                        system_measure(sys), upper,
                        sum_oracle=ApproxReal(sum_oracle, bound=upper, label="sum mu(C_i)"),
                        level_mass=level_mass,
                        listed_from=lambda i: schedule.n(i) + L - 1)
    test.schedule = schedule
    return test


def system_measure(sys: DynSystem) -> ComputableMeasure:
    return sys.measure if sys.measure is not None else sys.cylinder_measure()


def sum_upper_estimate(level_mass, tail, head: int = 4) -> Fraction:
    """A rational upper bound on the level sum, from a few exact masses and the tail bound."""
    return sum((level_mass(i) for i in range(1, head)), Fraction(0)) + tail(head)


def format_delta(delta) -> str:
    return format_rational(delta) if not isinstance(delta, ApproxReal) else (delta.label or "real")


# -- witnessed tests and constructed points -------------------------------------------

@dataclass
class WitnessedTest:
    """A test with a nested chain of witness balls ``B_n ⊆ A_n``."""

    test: MLTest
    witness: Callable[[int], IdealBall]
    stage: int = 64

    def validate(self, upto: int) -> None:
        """Certify ``radius(B_n) <= 2**-n``, ``B_{n+1} ⊆ B_n`` and ``B_n ⊆ A_n`` for n <= upto."""
        prev = None
        for n in range(1, upto + 2):
            b = self.witness(n)
            if b.space is not self.test.space:
                raise BrokenWitnessChain(f"B_{n} lives in another space")
            if b.radius > dyadic(n):
                raise BrokenWitnessChain(f"B_{n} has radius {b.radius} > 2^-{n}")
            if prev is not None and not ball_within(b, prev):
                raise BrokenWitnessChain(f"B_{n} is not inside B_{n - 1}")
            if n <= upto and not any(ball_within(b, a) for a in self.test.level(n).balls(self.stage)):
                raise BrokenWitnessChain(f"B_{n} is not inside a ball of A_{n}")
            prev = b


def construct_failing_point(wt: WitnessedTest, check_upto: int = 20) -> ApproxPoint:
    """The limit of the witness centers; it lies in every ``B_n ⊆ A_n``.

    Precision n (or the first n bits) is read from the center of ``B_{n+1}``.
    """
    wt.validate(check_upto)
    space = wt.test.space
    if space is CANTOR:
        def prefix(k: int) -> str:
            return wt.witness(k + 1).center.ljust(k, "0")[:k]
        return ApproxPoint.from_prefix(prefix, label=f"fails {wt.test.name}")
    return ApproxPoint(INTERVAL, lambda n: wt.witness(n + 1).center, label=f"fails {wt.test.name}")


def cylinder_witnesses(block: str) -> Callable[[int], IdealBall]:
    """``B_n`` = the cylinder ball of ``block^n``."""
    return lambda n: cylinder_ball(block * n)


def oscillating_point(base: int) -> ApproxPoint:
    """Concatenated constant blocks: block i has length ``base**i``, zeros for odd i, ones for even i."""
    if base < 2:
        raise BadParameter("block base must be at least 2")

    def prefix(k: int) -> str:
        parts, total, i = [], 0, 1
        while total < k:
            size = min(base ** i, k - total)
            parts.append(("0" if i % 2 else "1") * size)
            total += size
            i += 1
        return "".join(parts)

    return ApproxPoint.from_prefix(prefix, label=f"oscillating({base})")


def block_end(base: int, i: int) -> int:
    """Index of the last symbol of block i (total length of blocks 1..i)."""
    return sum(base ** j for j in range(1, i + 1))


def ones_average_at_block_end(base: int, i: int) -> Fraction:
    ones = sum(base ** j for j in range(2, i + 1, 2))
    return Fraction(ones, block_end(base, i))


# -- serialization --------------------------------------------------------------------

def describe_test(test, levels: Sequence[int], stage: int, precision: int = 20) -> dict:
    """JSON description with each level's enumerated balls and certified mass bracket."""
    out = {"name": test.name, "space": test.space.value, "stage": stage, "levels": []}
    for k in levels:
        balls = test.level(k).balls(stage)
        entry = {"level": k, "balls": [b.to_json() for b in balls]}
        if hasattr(test, "certified"):
            lo, hi = test.certified(k, stage, precision)
        else:
            lo, hi = derive_bounds(test.measure, balls, precision)
        entry.update({"mass_lower": format_rational(lo), "mass_upper": format_rational(hi),
                      "bound": format_rational(dyadic(k))})
        out["levels"].append(entry)
    return out


def load_test_description(data: dict) -> MLTest:
    """Reload a JSON test description as a test with fixed (snapshot) levels."""
    space = Space(data["space"])
    mu = lebesgue() if space is INTERVAL else bernoulli(Fraction(1, 2))
    snaps = {e["level"]: load_snapshot({"space": space.value, "stage": data["stage"], "balls": e["balls"]})
             for e in data["levels"]}

    def level(k: int) -> EffectiveOpen:
        if k not in snaps:
            raise BadParameter(f"level {k} not in the description")
        return snaps[k]

    return MLTest(data["name"], space, level, mu)
