"""
CDF and binary-expansion isomorphisms
=====================================

A non-atomic measure on [0,1] is carried to Lebesgue by its CDF, and
Lebesgue is carried to the fair coin by binary expansion.
"""
from fractions import Fraction as F

from cpsrand.errors import DyadicBoundary
from cpsrand.isomorphism import CdfIsomorphism, binary_decode, binary_expand, expand_point
from cpsrand.measures import piecewise_density

mu = piecewise_density([0, F(1, 2), 1], [F(3, 2), F(1, 2)])
iso = CdfIsomorphism(mu)
for x in (F(1, 3), F(1, 2), F(5, 7)):
    y = iso.forward(x)
    print(f"F({x}) ~ {float(y(20)):.6f}   G(F(x)) ~ {float(iso.inverse(y)(20)):.6f}")

print("1/3 ->", binary_expand(F(1, 3), 24))
print("decode(expand(5/7)) ~", float(binary_decode(expand_point(F(5, 7)))(30)))
try:
    binary_expand(F(3, 8), 8, budget=30)
except DyadicBoundary as exc:
    print("3/8 refused:", exc)
