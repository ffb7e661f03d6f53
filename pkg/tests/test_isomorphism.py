from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cpsrand.errors import AtomicMeasure, BadParameter, DyadicBoundary, StageBudgetExceeded
from cpsrand.exact_core import dyadic, sqrt_oracle
from cpsrand.isomorphism import (
    BinaryExpansionMap,
    CdfIsomorphism,
    binary_decode,
    binary_expand,
    cdf_forward,
    cdf_inverse,
    expand_point,
)
from cpsrand.measures import (
    FiniteMeasure,
    atomic_mixture,
    lebesgue,
    piecewise_density,
    prokhorov_bisect,
    quadratic_atoms,
)
from cpsrand.spaces import INTERVAL, ApproxPoint

from oracles import long_division_bits

PIECEWISE = piecewise_density([0, Fraction(1, 2), 1], [Fraction(3, 2), Fraction(1, 2)])
FLAT_MIDDLE = piecewise_density([0, Fraction(1, 3), Fraction(2, 3), 1],
                                [Fraction(3, 2), Fraction(0), Fraction(3, 2)])


def piecewise_cdf(x):
    return Fraction(3, 2) * x if x <= Fraction(1, 2) else Fraction(3, 4) + (x - Fraction(1, 2)) / 2


def piecewise_quantile(y):
    return Fraction(2, 3) * y if y <= Fraction(3, 4) else Fraction(1, 2) + 2 * (y - Fraction(3, 4))


non_dyadic = st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000),
                          max_denominator=1000).filter(lambda q: q.denominator & (q.denominator - 1) != 0)


def test_lebesgue_forward_is_identity():
    iso = CdfIsomorphism(lebesgue())
    x = Fraction(2, 7)
    assert abs(cdf_forward(iso, x)(10) - x) <= dyadic(10)


def test_quadratic_forward_at_half():
    iso = CdfIsomorphism(quadratic_atoms())
    assert abs(iso.forward(Fraction(1, 2))(6) - Fraction(1, 4)) <= dyadic(6)


def test_piecewise_forward_at_half():
    assert abs(CdfIsomorphism(PIECEWISE).forward(Fraction(1, 2))(20) - Fraction(3, 4)) <= dyadic(20)


def test_forward_of_irrational_point():
    x = sqrt_oracle(Fraction(1, 2))
    got = CdfIsomorphism(PIECEWISE).forward(x)(16)
    # sqrt(1/2) > 1/2, so F = 3/4 + (x - 1/2)/2
    assert abs(got - (Fraction(3, 4) + (x(40) - Fraction(1, 2)) / 2)) <= dyadic(15)


def test_atomic_measure_refused():
    with pytest.raises(AtomicMeasure):
        CdfIsomorphism(atomic_mixture([(Fraction(1, 2), 1)], lebesgue(), Fraction(1, 2)))


@pytest.mark.parametrize("n", [0, 5, 17])
def test_lebesgue_inverse_is_identity(n):
    assert abs(cdf_inverse(CdfIsomorphism(lebesgue()), Fraction(3, 7))(n) - Fraction(3, 7)) <= dyadic(n)


def test_piecewise_inverse_at_three_quarters():
    assert abs(CdfIsomorphism(PIECEWISE).inverse(Fraction(3, 4))(16) - Fraction(1, 2)) <= dyadic(16)


def test_flat_level_exhausts_budget():
    iso = CdfIsomorphism(FLAT_MIDDLE)
    with pytest.raises(StageBudgetExceeded):
        iso.inverse(Fraction(1, 2), budget=20)(10)


def test_flat_level_envelopes_stay_apart():
    iso = CdfIsomorphism(FLAT_MIDDLE)
    lo, hi = iso.inverse_envelopes(Fraction(1, 2), 8)
    assert lo <= Fraction(1, 3) and hi >= Fraction(2, 3)


@settings(max_examples=100)
@given(non_dyadic)
def test_round_trip_through_piecewise(x):
    iso = CdfIsomorphism(PIECEWISE)
    assert abs(iso.inverse(iso.forward(x))(12) - x) <= dyadic(12)


@given(non_dyadic)
def test_inverse_matches_quantile(y):
    assert abs(CdfIsomorphism(PIECEWISE).inverse(y)(14) - piecewise_quantile(y)) <= dyadic(14)


@given(st.lists(st.tuples(st.fractions(min_value=0, max_value=1, max_denominator=64), st.integers(0, 14)),
                min_size=2, max_size=8))
def test_envelopes_never_cross(queries):
    for mu in (PIECEWISE, lebesgue()):
        iso = CdfIsomorphism(mu)
        seen = [(q, *iso.bounds_at(q, t)) for q, t in queries]
        for q1, lo1, hi1 in seen:
            assert lo1 <= hi1
            for q2, lo2, hi2 in seen:
                if q1 <= q2:
                    assert lo1 <= hi2


@pytest.mark.parametrize("n", range(1, 7))
def test_cdf_transport_gives_lebesgue(n):
    mu_n = PIECEWISE.approx(n)
    moved = FiniteMeasure(INTERVAL, tuple((piecewise_cdf(p), w) for p, w in mu_n.atoms))
    lo, _ = prokhorov_bisect(moved, lebesgue().approx(n), n + 3)
    # F is 3/2-Lipschitz: 3/2 * 2^-n from mu_n, 2^-n from the Lebesgue approximant
    assert lo <= Fraction(5, 2) * dyadic(n)


def test_expand_examples():
    assert binary_expand(Fraction(1, 3), 6) == "010101"
    assert binary_expand(Fraction(2, 3), 4) == "1010"


def test_dyadic_point_is_refused():
    with pytest.raises(DyadicBoundary):
        binary_expand(Fraction(1, 2), 3, budget=30)


def test_expand_needs_nonnegative_count():
    with pytest.raises(BadParameter):
        binary_expand(Fraction(1, 3), -1)


@given(non_dyadic, st.integers(1, 40))
def test_expand_matches_long_division(x, k):
    bits = binary_expand(x, k)
    assert bits == long_division_bits(x, k)
    low = sum((Fraction(int(b), 2 ** (i + 1)) for i, b in enumerate(bits)), Fraction(0))
    assert low <= x <= low + dyadic(k)


def test_decode_examples():
    assert binary_decode(ApproxPoint.from_word("1"))(10) == Fraction(1, 2)
    assert binary_decode(ApproxPoint.from_word(""))(10) == 0
    assert abs(binary_decode(ApproxPoint.periodic("01"))(30) - Fraction(1, 3)) <= dyadic(30)


@settings(max_examples=100)
@given(non_dyadic, st.integers(1, 48))
def test_decode_undoes_expand(x, k):
    assert abs(binary_decode(expand_point(x))(k) - x) <= dyadic(k)


def test_expansion_map_directions():
    x = BinaryExpansionMap("expand")(sqrt_oracle(Fraction(1, 2)))
    assert x.prefix(8) == "10110101"
    assert abs(BinaryExpansionMap("decode")(x)(20) - sqrt_oracle(Fraction(1, 2))(40)) <= dyadic(19)
    with pytest.raises(BadParameter):
        BinaryExpansionMap("sideways")
