"""Building one vector whose scaled shifts approximate a target for many lambda.

The vector is a center plus blocks placed far out, one block per covering
interval.  Truncating the covering keeps the blocks within reach of a
modest horizon.
"""
from shiftcover import (
    EpsilonCondition,
    FiniteVector,
    Interval,
    SequenceSpec,
    build_common_vector,
    construct_block_vector,
)

seq = SequenceSpec.linear(horizon=2**20)
cond = EpsilonCondition(FiniteVector.basis(1), Interval(1.5, 1.52), 0.1)
cert = construct_block_vector(cond, FiniteVector.from_dict({1: 0.001}), 0.5, seq)
print("support size:", len(cert.vector.support))
print("worst grid error:", cert.grid_report.max_error, "passed:", cert.passed)

# several conditions at once, each stage perturbing the previous vector a little
conditions = [
    EpsilonCondition(FiniteVector.basis(1), Interval(2, 3), 0.2),
    EpsilonCondition(FiniteVector.basis(2), Interval(1.5, 4), 0.2),
    EpsilonCondition(FiniteVector.from_dict({1: 1, 2: 1}), Interval(1 + 1 / 3, 5), 0.2),
]
res = build_common_vector(conditions, SequenceSpec.linear(horizon=20_000), stage_growth=1.5)
for c, r in zip(res.certificates, res.reports):
    iv = c.condition.interval
    print(f"[{iv.lo:.4f}, {iv.hi:.4f}]  max error {r.max_error:.4f}")
