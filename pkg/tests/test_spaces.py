from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cpsrand.errors import BadParameter, SpaceMismatch
from cpsrand.exact_core import dyadic, sqrt_oracle
from cpsrand.spaces import (
    CANTOR,
    INTERVAL,
    ApproxPoint,
    EffectiveOpen,
    IdealBall,
    Verdict,
    ball_membership,
    ball_within,
    cantor_distance,
    cylinder_ball,
    cylinder_balls,
    cylinder_open,
    distance,
    hit_region,
    interval_ball,
    load_snapshot,
    open_intersect,
    open_membership,
    open_union,
    point_from_index,
    point_index,
    witness_balls,
    word_from_index,
    word_index,
)

from oracles import cantor_dist

bitwords = st.text(alphabet="01", max_size=14)
unit = st.fractions(min_value=0, max_value=1, max_denominator=512)


def test_cantor_distance_examples():
    assert cantor_distance("0101", "0101") == 0
    assert cantor_distance(ApproxPoint.periodic("01"), ApproxPoint.periodic("01"), 30) == (0, dyadic(30))
    lo, hi = cantor_distance("", ApproxPoint.periodic("1"), 40)
    assert lo <= 1 <= hi and hi - lo == dyadic(40)
    assert cantor_distance("0110", "0010") == Fraction(1, 4)


def test_enclosure_needs_k():
    with pytest.raises(BadParameter):
        cantor_distance(ApproxPoint.periodic("1"), "0")


@given(bitwords, bitwords)
def test_cantor_distance_matches_summation(u, v):
    assert cantor_distance(u, v) == cantor_dist(u, v)


@given(bitwords, bitwords, bitwords)
def test_cantor_triangle_inequality(u, v, w):
    assert distance(CANTOR, u, w) <= distance(CANTOR, u, v) + distance(CANTOR, v, w)


@given(bitwords)
def test_trailing_zeros_name_the_same_point(u):
    assert distance(CANTOR, u, u + "000") == 0


@given(st.integers(0, 5000))
def test_word_numbering(n):
    assert word_index(word_from_index(n)) == n


@given(st.integers(0, 5000))
def test_ball_numbering_round_trip(n):
    for space in (CANTOR, INTERVAL):
        b = IdealBall.from_index(space, n)
        assert IdealBall.from_index(space, b.index) == b
        assert point_index(space, point_from_index(space, n)) == n


def test_ball_radius_must_be_positive():
    with pytest.raises(BadParameter):
        IdealBall(INTERVAL, Fraction(1, 2), Fraction(0))


def test_ball_membership_examples():
    assert ball_membership(ApproxPoint.from_word(""), IdealBall(CANTOR, "", Fraction(1, 2)), 3) is Verdict.YES
    edge = ApproxPoint.from_word("1")
    assert ball_membership(edge, IdealBall(CANTOR, "", Fraction(1, 2)), 20) is Verdict.NOT_YET
    assert ball_membership(Fraction(1, 4), IdealBall(INTERVAL, Fraction(0), Fraction(1, 2)), 4) is Verdict.YES


def test_membership_space_mismatch():
    with pytest.raises(SpaceMismatch):
        ball_membership(ApproxPoint.from_word("1"), IdealBall(INTERVAL, Fraction(0), Fraction(1, 2)), 4)


@given(unit, unit, st.fractions(min_value=Fraction(1, 256), max_value=1, max_denominator=256),
       st.integers(0, 20))
def test_interval_membership_monotone_and_sound(x, c, r, t):
    b = IdealBall(INTERVAL, c, r)
    if ball_membership(x, b, t) is Verdict.YES:
        assert abs(x - c) < r
        assert ball_membership(x, b, t + 5) is Verdict.YES


@given(bitwords, bitwords, st.integers(1, 10), st.integers(0, 20))
def test_cantor_membership_monotone_and_sound(x, c, j, t):
    b = IdealBall(CANTOR, c, dyadic(j))
    p = ApproxPoint.periodic(x + "1") if x else ApproxPoint.from_word(x)
    if ball_membership(p, b, t) is Verdict.YES:
        assert cantor_distance(p, c, 60)[1] <= b.radius
        assert ball_membership(p, b, t + 7) is Verdict.YES


def test_cylinder_balls_cover_both_edges():
    u = "0110"
    a, b = cylinder_balls(u)
    # u0^inf is in the first ball, u1^inf only in the second
    ones = ApproxPoint.from_prefix(lambda k: (u + "1" * k)[:k])
    assert ball_membership(ones, a, 30) is Verdict.NOT_YET
    assert ball_membership(ones, b, 30) is Verdict.YES
    assert ball_membership(ApproxPoint.from_word(u), a, 30) is Verdict.YES
    assert cylinder_ball(u) == a


def test_open_membership_examples():
    zero = ApproxPoint.from_word("")
    assert open_membership(zero, EffectiveOpen.of(CANTOR, [cylinder_ball("0")]), 2) is Verdict.YES
    empty = EffectiveOpen.empty(CANTOR)
    assert all(open_membership(zero, empty, t) is Verdict.NOT_YET for t in range(30))
    growing = EffectiveOpen.growing(INTERVAL, lambda s: {0: IdealBall(INTERVAL, Fraction(0), Fraction(1, 4)),
                                                          3: IdealBall(INTERVAL, Fraction(1, 2),
                                                                       Fraction(1, 4))}.get(s))
    assert open_membership(Fraction(3, 8), growing, 2) is Verdict.NOT_YET
    assert open_membership(Fraction(3, 8), growing, 6) is Verdict.YES


def test_enumeration_is_monotone():
    U = EffectiveOpen.growing(INTERVAL, lambda s: interval_ball(0, dyadic(s + 1)))
    for t in range(8):
        assert set(U.balls(t)) <= set(U.balls(t + 1))


def test_union_with_empty_lists_same_balls():
    U = EffectiveOpen.of(CANTOR, [cylinder_ball("01"), cylinder_ball("1")])
    assert open_union(U, EffectiveOpen.empty(CANTOR)).balls(3) == U.balls(3)


@given(st.lists(st.tuples(unit, st.fractions(min_value=Fraction(1, 64), max_value=Fraction(1, 2),
                                              max_denominator=64)), min_size=1, max_size=4), unit)
def test_union_membership_is_either(balls, x):
    bs = [IdealBall(INTERVAL, c, r) for c, r in balls]
    U, V = EffectiveOpen.of(INTERVAL, bs[::2]), EffectiveOpen.of(INTERVAL, bs[1::2])
    t = 12
    either = open_membership(x, U, t) is Verdict.YES or open_membership(x, V, t) is Verdict.YES
    assert (open_membership(x, open_union(U, V), t) is Verdict.YES) == either


def test_interval_intersection_certifies_three_eighths():
    U = EffectiveOpen.of(INTERVAL, [interval_ball(0, Fraction(1, 2))])
    V = EffectiveOpen.of(INTERVAL, [interval_ball(Fraction(1, 4), Fraction(3, 4))])
    W = open_intersect(U, V)
    assert open_membership(Fraction(3, 8), W, 10) is Verdict.YES
    for b in W.balls(3):
        lo, hi = b.interval()
        assert Fraction(1, 4) <= lo and hi <= Fraction(1, 2)


def test_disjoint_cylinders_never_intersect():
    W = open_intersect(cylinder_open("0"), cylinder_open("1"))
    assert W.balls(12) == ()


def test_cylinder_intersection_is_the_longer_cylinder():
    W = open_intersect(cylinder_open("0"), cylinder_open("01"))
    x = ApproxPoint.from_prefix(lambda k: ("01" + "1" * k)[:k])
    assert open_membership(x, W, 20) is Verdict.YES
    assert open_membership(ApproxPoint.from_word("00"), W, 20) is Verdict.NOT_YET


@given(st.lists(st.tuples(unit, unit), min_size=1, max_size=5), st.integers(1, 3))
def test_interval_witnesses_lie_in_enough_families(spans, need):
    families = [[interval_ball(min(a, b) - Fraction(1, 64), max(a, b) + Fraction(1, 64))] for a, b in spans]
    for w in witness_balls(INTERVAL, families, need, 8):
        hits = sum(1 for f in families if any(ball_within(w, b) for b in f))
        assert hits >= need


def test_hit_region_counts():
    sets = [EffectiveOpen.of(INTERVAL, [interval_ball(0, dyadic(n))]) for n in range(1, 6)]
    R = hit_region(INTERVAL, sets, 3)
    # 1/9 sits 1/72 below the edge of (0, 1/8), so the margin clears at stage 7
    assert open_membership(Fraction(1, 9), R, 6) is Verdict.NOT_YET
    assert open_membership(Fraction(1, 9), R, 7) is Verdict.YES
    assert open_membership(Fraction(3, 16), R, 6) is Verdict.NOT_YET


def test_interval_ball_outside_unit_interval_is_empty():
    with pytest.raises(BadParameter):
        interval_ball(1, Fraction(9, 8))


def test_interval_ball_endpoints():
    assert interval_ball(0, Fraction(1, 2)).interval() == (0, Fraction(1, 2))
    b = interval_ball(-1, Fraction(1, 2))
    assert b.center == 0 and b.contains_point(Fraction(0))


def test_snapshot_round_trip():
    U = EffectiveOpen.of(CANTOR, [cylinder_ball("0110"), IdealBall(CANTOR, "1", Fraction(1, 3))])
    assert load_snapshot(U.snapshot(4)).balls(0) == U.balls(4)


@given(st.integers(0, 40), st.integers(0, 40))
def test_point_oracle_cauchy(n, m):
    x = ApproxPoint.periodic("011")
    assert distance(CANTOR, x(n), x(m)) <= dyadic(n) + dyadic(m)
    y = ApproxPoint.from_real(sqrt_oracle(Fraction(1, 2)))
    assert abs(y(n) - y(m)) <= dyadic(n) + dyadic(m)
