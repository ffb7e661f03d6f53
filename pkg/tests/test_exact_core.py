from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cpsrand.errors import BadParameter, MissingBound, StageBudgetExceeded
from cpsrand.exact_core import (
    ApproxReal,
    Ordering,
    SemiReal,
    as_rational,
    combine,
    const,
    dyadic,
    eval_real,
    format_rational,
    geometric_series,
    pair,
    parse_rational,
    rational_from_index,
    rational_index,
    semis_to_computable,
    separate,
    sqrt_oracle,
    unpair,
)

from oracles import sqrt2_bisect

rationals = st.fractions(min_value=-50, max_value=50, max_denominator=1000)
SQRT2_LO, SQRT2_HI = sqrt2_bisect(200)


def noisy(x: Fraction) -> ApproxReal:
    """Adversarial oracle: always off by exactly 2^-n, alternating sides."""
    return ApproxReal(lambda n: x + (dyadic(n) if n % 2 else -dyadic(n)), bound=abs(x) + 1)


def within_sqrt2(q: Fraction, n: int, factor: int = 1) -> bool:
    lo, hi = factor * SQRT2_LO, factor * SQRT2_HI
    return q - dyadic(n) <= lo and hi <= q + dyadic(n)


def test_const_eval_is_exact():
    assert eval_real(const(Fraction(1, 3)), 10) == Fraction(1, 3)


def test_sqrt2_at_precision_4():
    assert within_sqrt2(sqrt_oracle(2)(4), 4)


@pytest.mark.parametrize("n", range(31))
def test_sqrt2_contract_up_to_30(n):
    assert within_sqrt2(sqrt_oracle(2)(n), n)


@pytest.mark.parametrize("n", range(31))
def test_geometric_series_contract(n):
    x = geometric_series(Fraction(1, 3), Fraction(2))
    assert abs(x(n) - 3) <= dyadic(n)


def test_precision_zero_contract():
    x = ApproxReal(lambda n: Fraction(7, 10))
    assert abs(x(0) - Fraction(7, 10)) <= 1


def test_oracle_is_repeatable():
    x = sqrt_oracle(3)
    assert x(17) == x(17)


def test_add_of_halves_is_one():
    s = combine("add", [Fraction(1, 2), Fraction(1, 2)])
    assert all(s(n) == 1 for n in range(10))


def test_mul_two_sqrt2():
    assert within_sqrt2(combine("mul", [const(2), sqrt_oracle(2)])(4), 4, factor=2)


def test_abs_of_negative_constant():
    assert combine("abs", [const(Fraction(-3, 4))])(8) == Fraction(3, 4)


def test_mul_without_bound_is_refused():
    unbounded = ApproxReal(lambda n: Fraction(1))
    with pytest.raises(MissingBound):
        combine("mul", [unbounded, const(2)])


def test_unknown_op():
    with pytest.raises(BadParameter):
        combine("div", [const(1)])


@given(rationals, rationals, st.integers(0, 40))
def test_add_error_with_adversarial_operands(x, y, n):
    assert abs(combine("add", [noisy(x), noisy(y)])(n) - (x + y)) <= dyadic(n)


@given(rationals, rationals, rationals, st.integers(0, 30))
def test_sub_and_minmax_error(x, y, z, n):
    xs = [noisy(x), noisy(y), noisy(z)]
    assert abs(combine("sub", xs)(n) - (x - y - z)) <= dyadic(n)
    assert abs(combine("max", xs)(n) - max(x, y, z)) <= dyadic(n)
    assert abs(combine("min", xs)(n) - min(x, y, z)) <= dyadic(n)


@given(rationals, rationals, st.integers(0, 30))
def test_mul_error_with_adversarial_operands(x, y, n):
    assert abs(combine("mul", [noisy(x), noisy(y)])(n) - x * y) <= dyadic(n)


@given(rationals, st.integers(0, 30))
def test_operators(x, n):
    a = noisy(x)
    assert abs((a + 1)(n) - (x + 1)) <= dyadic(n)
    assert abs((1 - a)(n) - (1 - x)) <= dyadic(n)
    assert abs((-a)(n) + x) <= dyadic(n)
    assert abs(abs(a)(n) - abs(x)) <= dyadic(n)


def test_semis_symmetric_brackets():
    lo = SemiReal("lower", lambda t: 1 - dyadic(t))
    hi = SemiReal("upper", lambda t: 1 + dyadic(t))
    assert abs(semis_to_computable(lo, hi)(3) - 1) <= Fraction(1, 8)


def test_semis_geometric_lower_stream():
    lo = SemiReal("lower", lambda t: sum((dyadic(i) for i in range(t + 1)), Fraction(0)))
    hi = SemiReal("upper", lambda t: Fraction(2))
    assert lo.is_monotone(range(20)) and hi.is_monotone(range(20))
    assert abs(semis_to_computable(lo, hi)(5) - 2) <= Fraction(1, 32)


def test_semis_that_never_meet():
    x = semis_to_computable(SemiReal("lower", lambda t: Fraction(0)), SemiReal("upper", lambda t: Fraction(1)),
                            max_stage=100)
    with pytest.raises(StageBudgetExceeded):
        x(1)


def test_semis_direction_checked():
    with pytest.raises(BadParameter):
        SemiReal("sideways", lambda t: 0)


def test_separate_examples():
    assert separate(const(0), const(1), 2) is Ordering.LESS
    assert separate(const(Fraction(1, 2)), const(Fraction(1, 2)), 20) is Ordering.UNSEPARATED
    assert separate(sqrt_oracle(2), const(Fraction(3, 2)), 6) is Ordering.LESS


@given(rationals, rationals, st.integers(0, 12))
def test_separate_is_sound(x, y, n):
    verdict = separate(noisy(x), noisy(y), n)
    if verdict is Ordering.LESS:
        assert noisy(x)(10 * n + 10) < noisy(y)(10 * n + 10) and x < y
    elif verdict is Ordering.GREATER:
        assert x > y
    if x == y:
        assert verdict is Ordering.UNSEPARATED


@given(st.fractions(min_value=-10 ** 6, max_value=10 ** 6, max_denominator=10 ** 6))
def test_rational_text_round_trip(q):
    assert parse_rational(format_rational(q)) == q
    assert as_rational(format_rational(q)) == q


def test_format_is_p_over_q():
    assert format_rational(Fraction(-3, 4)) == "-3/4"
    assert format_rational(2) == "2/1"


@pytest.mark.parametrize("bad", ["1/0", "x", "1.5", ""])
def test_parse_rejects_garbage(bad):
    with pytest.raises(BadParameter):
        parse_rational(bad)


def test_floats_are_not_rationals():
    with pytest.raises(BadParameter):
        as_rational(0.5)


@given(st.integers(0, 10 ** 6))
def test_pairing_bijection(n):
    assert pair(*unpair(n)) == n


def test_pairing_first_values():
    assert [unpair(n) for n in range(6)] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


@given(st.fractions(min_value=Fraction(1, 10 ** 4), max_value=10 ** 4, max_denominator=10 ** 4))
def test_rational_numbering_round_trip(q):
    assert rational_from_index(rational_index(q)) == q


def test_rational_numbering_starts_with_calkin_wilf():
    got = [rational_from_index(i) for i in range(1, 8)]
    assert got == [Fraction(1), Fraction(1, 2), Fraction(2), Fraction(1, 3), Fraction(3, 2),
                   Fraction(2, 3), Fraction(3)]
