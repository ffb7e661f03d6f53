"""
Deviation sets, Chebyshev and a Schnorr test
============================================

Exact masses of the sets where the running average of the first symbol
strays from 1/2, the Chebyshev bound that dominates them, and the
Borel-Cantelli test built from them along n_i = i^3.
"""
from fractions import Fraction

from cpsrand.dynamics import cylinder, deviation_measure, make_schedule, shift
from cpsrand.exact_core import sqrt_oracle
from cpsrand.randomness import deviation_schnorr_test, strong_bc_to_schnorr

T, ones = shift(), cylinder("1")
delta = Fraction(2, 5)
for n in (2, 4, 8, 16):
    exact = deviation_measure(T, ones, delta, n)
    cheb = deviation_measure(T, ones, delta, n, mode="chebyshev")
    print(f"n={n:>2}  exact {str(exact):>12}  chebyshev {str(cheb):>8}")

# a rational delta is eventually hit exactly by some k/n - 1/2; an irrational one never is
delta = sqrt_oracle(2) - 1
test = deviation_schnorr_test(T, ones, delta, make_schedule(Fraction(1, 2)))
print("level masses:", [test.level_mass(i) for i in (1, 2, 3)])
print("sum of level masses ~", float(test.sum_oracle(8)), " constant c =", test.c)

schnorr = strong_bc_to_schnorr(test)
for k in range(3):
    lo, hi = schnorr.certified(k, k + 3, 8)
    print(f"mu(A_{k}) in [{float(lo):.3g}, {float(hi):.3g}]  (needs < 2^-{k})")
