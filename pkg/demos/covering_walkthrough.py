"""Covering an interval of scalars with powers of a sequence.

For each lambda in [lo, hi] we want some k_n and a multiplier beta_n with
|lambda^{k_n} beta_n - 1| < eps.  The breakpoints grow like
lo * (1+eps)^{sum 1/k_n}, so a divergent reciprocal sum reaches any hi.
"""
import numpy as np

from shiftcover import Interval, SequenceSpec, build_covering, verify_covering
from shiftcover.errors import InsufficientHorizon

seq = SequenceSpec.linear(horizon=100)
plan = build_covering(Interval(2, 4), 0.5, seq, start_index=1)
print("blocks used:", plan.block_count)
print("breakpoints:", np.round(plan.breakpoints, 4))

# every lambda on a fine grid falls in a block whose power error is below eps
report = verify_covering(plan, grid_size=10_000)
print("max error on the grid:", report.max_error, "passed:", report.passed)

# the same interval with squares needs reciprocals that add up too slowly
try:
    build_covering(Interval(2, 40), 0.1, SequenceSpec.polynomial(2, horizon=10_000))
except InsufficientHorizon as exc:
    print("squares cannot cover [2, 40]:", exc)
