import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cpsrand.dynamics import cylinder, doubling, dyadic_indicator, make_schedule, shift
from cpsrand.errors import BadConstant, BadDelta, BrokenWitnessChain
from cpsrand.exact_core import dyadic, sqrt_oracle
from cpsrand.measures import bernoulli
from cpsrand.randomness import (
    BCTest,
    WitnessedTest,
    bc_hits,
    bc_to_ml,
    block_end,
    builtin_test,
    cantor_ones,
    construct_failing_point,
    cylinder_witnesses,
    describe_test,
    deviation_schnorr_test,
    empty_test,
    halving_intervals,
    initial_segments,
    least_constant,
    load_test_description,
    ones_average_at_block_end,
    oscillating_point,
    strong_bc_to_schnorr,
    verify_failure,
    zeros_cylinders,
)
from cpsrand.spaces import CANTOR, INTERVAL, ApproxPoint, IdealBall, cylinder_ball, cylinder_open

HALF = Fraction(1, 2)
STRONG_BC = {"halving": halving_intervals, "cantor-ones": cantor_ones, "empty": empty_test}


ROOT2_MINUS_1 = sqrt_oracle(2) - 1


def deviation_test():
    return deviation_schnorr_test(shift(), cylinder("1"), ROOT2_MINUS_1, make_schedule(HALF))


# -- certificates -------------------------------------------------------------------

def test_zero_point_fails_every_zeros_level():
    rep = verify_failure(ApproxPoint.from_word(""), zeros_cylinders(), 12)
    assert not rep.partial and [c.level for c in rep.certificates] == list(range(1, 13))


def test_point_off_the_zeros_cylinder_is_partial():
    x = ApproxPoint.from_prefix(lambda k: ("0" + "1" * k)[:k])
    rep = verify_failure(x, zeros_cylinders(), 3)
    assert rep.partial and rep.uncertified == [2, 3]


@pytest.mark.parametrize("n", range(1, 10))
def test_interval_point_inside_initial_segment(n):
    rep = verify_failure(dyadic(n + 2), initial_segments(), n, from_level=n)
    assert rep.certificates and rep.certificates[0].level == n


@settings(max_examples=40)
@given(st.text(alphabet="01", max_size=10), st.integers(1, 8))
def test_certificates_replay(word, upto):
    test = zeros_cylinders()
    x = ApproxPoint.from_word(word)
    rep = verify_failure(x, test, upto)
    assert all(c.replay(x, test) for c in rep.certificates)
    assert sorted([c.level for c in rep.certificates] + rep.uncertified) == list(range(1, upto + 1))


def test_certificate_stage_is_least():
    test, x = zeros_cylinders(), ApproxPoint.from_word("")
    for c in verify_failure(x, test, 6).certificates:
        assert test.level(c.level).witness(x, c.stage) is not None
        assert c.stage == 0 or test.level(c.level).witness(x, c.stage - 1) is None


def test_report_json():
    rep = verify_failure(ApproxPoint.from_word(""), zeros_cylinders(), 2)
    data = json.loads(json.dumps(rep.to_json()))
    assert data["partial"] is False and data["certificates"][1]["level"] == 2


@given(st.integers(0, 6), st.integers(1, 20))
def test_bc_hits_monotone_in_stage(k, stage):
    x = dyadic(k) * Fraction(2, 3)
    test = halving_intervals()
    hits = bc_hits(x, test, 12, stage)
    assert set(hits) <= set(bc_hits(x, test, 12, stage + 3))


# -- constants ------------------------------------------------------------------------

@given(st.fractions(min_value=0, max_value=1000, max_denominator=100))
def test_least_constant(bound):
    c = least_constant(bound)
    assert Fraction(2) ** c > bound and (c == 0 or Fraction(2) ** (c - 1) <= bound)


def test_constant_too_small():
    with pytest.raises(BadConstant):
        BCTest("x", INTERVAL, lambda n: None, None, Fraction(2), c=1)
    with pytest.raises(BadConstant):
        strong_bc_to_schnorr(halving_intervals(), c=0)


# -- conversions ----------------------------------------------------------------------

@pytest.mark.parametrize("k", range(0, 4))
def test_halving_levels_are_tiny_intervals(k):
    S = strong_bc_to_schnorr(halving_intervals())
    lo, hi = S.certified(k, S.need(k) + 2)
    assert lo == Fraction(1, 2 ** (2 ** (k + 1))) and hi < dyadic(k)


@pytest.mark.parametrize("k", range(0, 4))
def test_cantor_ones_levels_are_long_cylinders(k):
    S = strong_bc_to_schnorr(cantor_ones())
    lo, hi = S.certified(k, S.need(k) + 2)
    assert lo == Fraction(1, 2 ** (2 ** (k + 1))) and hi < dyadic(k)
    inside = ApproxPoint.from_prefix(lambda m: "1" * m)
    assert S.level(k).witness(inside, S.need(k) + 2) is not None


def test_halving_level_one_example():
    S = strong_bc_to_schnorr(halving_intervals())
    assert S.need(1) == 4
    assert abs(S.measure_oracle(1)(12) - Fraction(1, 16)) <= dyadic(12)


def test_empty_test_converts_to_empty():
    S = strong_bc_to_schnorr(empty_test())
    assert S.level(2).balls(10) == () and S.measure_oracle(2)(10) <= dyadic(10)


@pytest.mark.parametrize("name", sorted(STRONG_BC))
@pytest.mark.parametrize("k", range(0, 7))
def test_converted_levels_below_two_to_minus_k(name, k):
    S = strong_bc_to_schnorr(STRONG_BC[name]())
    lo, hi = S.certified(k, k + 4)
    assert lo <= hi < dyadic(k)


@pytest.mark.parametrize("k", range(0, 3))
def test_converted_deviation_levels(k):
    S = strong_bc_to_schnorr(deviation_test())
    # the Chebyshev tail makes high precision costly: 2^-8 already needs n_i up to about 20^3
    lo, hi = S.certified(k, k + 3, 8)
    assert lo <= hi < dyadic(k)


def test_measure_oracle_agrees_with_brackets():
    S = strong_bc_to_schnorr(cantor_ones())
    v = S.measure_oracle(0)(8)
    lo, hi = S.certified(0, 12)
    assert lo - dyadic(8) <= v <= hi + dyadic(8)


def test_bc_to_ml_uses_same_levels():
    M = bc_to_ml(halving_intervals())
    # 1/12 lies in C_1, C_2, C_3 only
    x = Fraction(1, 12)
    assert M.level(0).witness(x, 8) is not None
    assert M.level(1).witness(x, 8) is None


# -- deviation tests -----------------------------------------------------------------

def test_deviation_level_masses():
    T = deviation_test()
    assert [T.level_mass(i) for i in (1, 2)] == [1, Fraction(1, 128)]
    assert 2 ** T.c > T.sum_upper >= T.sum_oracle(8)


def test_deviation_level_two_on_shift():
    T = deviation_schnorr_test(shift(), cylinder("1"), ROOT2_MINUS_1, make_schedule(HALF, Fraction(5, 2)))
    # n_2 = ceil(2^(5/2)) = 6: only the constant words deviate, listed from stage 6
    assert T.level(2).balls(5) == ()
    lo, hi = T.measure.lower(T.level(2).balls(6), 8), T.level_mass(2)
    assert lo == hi == Fraction(1, 32)


def test_prefix_deviation_set_at_n2():
    from cpsrand.randomness import _deviation_level
    U = _deviation_level(shift(), cylinder("1"), Fraction(2, 5), 2)
    assert bernoulli(HALF).lower(U.balls(2), 6) == HALF
    assert U.witness(ApproxPoint.from_word("11"), 10) is not None
    assert U.witness(ApproxPoint.from_word("10"), 10) is None


def test_doubling_deviation_set_at_n2():
    from cpsrand.randomness import _deviation_level
    U = _deviation_level(doubling(), dyadic_indicator(HALF, 1), Fraction(2, 5), 2)
    assert sum(b.radius * 2 for b in U.balls(2)) == HALF


def test_wide_delta_gives_empty_levels():
    T = deviation_schnorr_test(shift(), cylinder("1"), 2, make_schedule(HALF))
    assert all(len(T.level(i).balls(10)) == 0 for i in (1, 2))
    assert T.level_mass(3) == 0 and T.sum_upper < 1


def test_irrational_delta_test():
    T = deviation_schnorr_test(shift(), cylinder("1"), sqrt_oracle(2) - 1, make_schedule(HALF))
    assert T.level_mass(1) == 1


def test_bad_delta_at_construction():
    # n_1 = 1 already reaches deviation 1/2
    with pytest.raises(BadDelta):
        deviation_schnorr_test(shift(), cylinder("1"), HALF, make_schedule(HALF))


def test_bad_delta_detected_when_levels_are_used():
    T = deviation_schnorr_test(shift(), cylinder("1"), Fraction(2, 5), make_schedule(HALF))
    # n_10 = 1000 and 900/1000 - 1/2 = 2/5
    with pytest.raises(BadDelta):
        T.level_mass(10)


def test_deviation_levels_listed_late():
    T = deviation_test()
    assert T.level_lower(2, 7) == 0 and T.level_lower(2, 8) == Fraction(1, 128)


# -- witnessed tests -----------------------------------------------------------------

def test_zero_chain_gives_zero_point():
    wt = WitnessedTest(zeros_cylinders(), cylinder_witnesses("0"))
    x = construct_failing_point(wt)
    assert x.prefix(30) == "0" * 30


def test_alternating_chain_fails_twenty_levels():
    test = zeros_cylinders().__class__("alternating", CANTOR, lambda n: cylinder_open("01" * n),
                                       bernoulli(HALF), lambda n: None)
    wt = WitnessedTest(test, cylinder_witnesses("01"))
    x = construct_failing_point(wt)
    assert x.prefix(12) == "010101010101"
    assert not verify_failure(x, test, 20).partial


def test_broken_chain():
    def witness(n):
        return cylinder_ball("1") if n == 2 else cylinder_ball("0" * n)
    with pytest.raises(BrokenWitnessChain):
        WitnessedTest(zeros_cylinders(), witness).validate(3)


def test_witness_radius_checked():
    with pytest.raises(BrokenWitnessChain):
        WitnessedTest(zeros_cylinders(), lambda n: IdealBall(CANTOR, "0" * n, Fraction(1))).validate(2)


# -- oscillating point ---------------------------------------------------------------

def test_oscillating_block_ends():
    assert ones_average_at_block_end(10, 4) >= Fraction(9, 10)
    assert ones_average_at_block_end(10, 5) <= Fraction(13, 100)


def test_oscillating_prefix_matches_block_arithmetic():
    x = oscillating_point(10)
    for i in (3, 4):
        n = block_end(10, i)
        assert Fraction(x.prefix(n).count("1"), n) == ones_average_at_block_end(10, i)


def test_base_two_still_oscillates():
    highs = [ones_average_at_block_end(2, i) for i in range(2, 30, 2)]
    lows = [ones_average_at_block_end(2, i) for i in range(3, 31, 2)]
    assert min(highs[-5:]) - max(lows[-5:]) > 0


# -- serialization -------------------------------------------------------------------

def test_description_round_trip():
    S = strong_bc_to_schnorr(halving_intervals())
    desc = json.loads(json.dumps(describe_test(S, [0, 1], 6)))
    back = load_test_description(desc)
    assert back.level(1).balls(0) == S.level(1).balls(6)
    for e in desc["levels"]:
        assert Fraction(e["mass_upper"]) < Fraction(e["bound"]) or e["level"] == 0


def test_builtin_lookup():
    assert builtin_test("cantor-ones").name == "cantor-ones"
    with pytest.raises(ValueError):
        builtin_test("nope")
