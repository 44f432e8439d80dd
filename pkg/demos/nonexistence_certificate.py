"""Why a summable reciprocal sum rules out a common approximating vector.

The certificate bounds the total length of the lambda set that any single
vector can serve.  A bound strictly below the interval width means some
lambda is always missed.
"""
import numpy as np

from shiftcover import Interval, SequenceSpec, nonexistence_certificate
from shiftcover.covering import empirical_coverage, random_probe_vector

seq = SequenceSpec.geometric(2, horizon=60)
cert = nonexistence_certificate(Interval(2, 3), seq)
print("eps_0 =", cert.epsilon_0, " N_0 =", cert.N_0)
print("bound on the covered measure:", cert.bound_sum, " slack:", cert.slack)

# random sparse vectors cover much less than the bound
rng = np.random.default_rng(0)
vs = range(cert.N_0, seq.horizon + 1)
for _ in range(5):
    x = random_probe_vector(rng, seq, cert.interval, vs, density=1.0)
    print("covered measure:", round(empirical_coverage(x, seq, cert.interval, cert.epsilon_1, vs), 4))
