"""
Birkhoff averages of typical and atypical points
================================================

A seeded pseudorandom bit string settles at average 1/2 under the shift,
while the block-oscillating point keeps swinging between long runs of
ones and long runs of zeros.
"""
from fractions import Fraction

from cpsrand.dynamics import cylinder, make_schedule, pseudorandom_point, shift, typicality_experiment
from cpsrand.randomness import block_end, oscillating_point

ones = cylinder("1")
schedule = make_schedule(Fraction(1, 2))   # n_i = i^3

n = 1 << 20
typical = typicality_experiment(shift(), pseudorandom_point(42, n), ones, schedule, 40, extra=[n])
print("pseudorandom point, |S_n/n - 1/2| at n = 2^20:", float(typical.at(n).abs_dev))

# sample the oscillating point along the schedule and at its block ends
ends = [block_end(10, i) for i in range(1, 6)]
wild = typicality_experiment(shift(), oscillating_point(10), ones, schedule, 49, extra=ends, window_from=20)
for row in wild.rows:
    if row.n in ends:
        print(f"block end n={row.n:>6}  S_n/n = {float(row.average):.4f}")
print("oscillation over the schedule window:", float(wild.oscillation))
