"""Equidistribution of k_n theta and the joint orbit check.

Fractional parts are computed exactly from the dyadic form of theta, so the
star discrepancy is exact for the points used.
"""
import math

import numpy as np

from shiftcover import FiniteVector, SequenceSpec
from shiftcover.torus import circle_density_check, discrepancy_curve, joint_density_check

golden = (math.sqrt(5) - 1) / 2
seq = SequenceSpec.linear(horizon=100_000)
for n, d in discrepancy_curve(seq, golden, [10, 100, 1000, 10_000, 100_000]):
    print(f"N={n:>6}  D*={d:.3g}  N*D*={n * d:.2f}")

targets = np.exp(2j * np.pi * np.arange(8) / 8)
print("first hits:", circle_density_check(seq, golden, 1000, targets, 0.05))

# a vector whose shifts revisit e_1: x has 2^{-k} at position k+1 for each term k
x = {1: 1.0}
for k in SequenceSpec.linear(horizon=30).terms(1, 30):
    x[int(k) + 1] = 2.0 ** -int(k)
short = SequenceSpec.linear(horizon=30)
rep = joint_density_check(FiniteVector.from_dict(x), short, 2.0, golden, [FiniteVector.basis(1)], targets, 2, 30)
print("pairs witnessed:", rep.witnessed, "of", len(rep.pairs))
