"""
Prokhorov distances and points of measure zero
==============================================
"""
from fractions import Fraction as F

from cpsrand.measures import (
    FiniteMeasure,
    atomic_mixture,
    find_zero_measure_point,
    lebesgue,
    prokhorov,
    prokhorov_bisect,
)
from cpsrand.spaces import INTERVAL

mu = FiniteMeasure.from_pairs(INTERVAL, [(F(0), F(1, 3)), (F(1, 2), F(1, 3)), (F(1), F(1, 3))])
nu = FiniteMeasure.from_pairs(INTERVAL, [(F(1, 4), F(1, 2)), (F(3, 4), F(1, 4)), (F(1), F(1, 4))])
print("exact distance:", prokhorov(mu, nu))
print("bisection bracket:", prokhorov_bisect(mu, nu, 12))

# Lebesgue approximants approach Lebesgue itself
for n in (2, 4, 6):
    lo, hi = prokhorov_bisect(lebesgue().approx(n), lebesgue().approx(n + 2), n + 4)
    print(f"n={n}: d(mu_n, mu_(n+2)) in [{lo}, {hi}]")

# nested thirds steer around the atom at 1/2
half_atom = atomic_mixture([(F(1, 2), 1)], lebesgue(), F(1, 2))
x, trace = find_zero_measure_point(half_atom, (0, 1), depth=12)
for row in trace.rows()[:5]:
    print(row)
print("point ~", float(x(30)), " trace valid:", trace.check())
