"""
A sequence that never concentrates, seen through finite prefixes
================================================================

p(j) = 1/log(j+2) has T = infinity.  On finite prefixes the exact expected
deviation grows with the prefix length, but only like a double logarithm.
"""

from localgc import LogInverse, exact_delta_n
from localgc.experiments import LGC_FLOOR

p = LogInverse(2)
n = 100
for J in (10, 100, 1000, 10000, 100000):
    print(f"J={J:>6}  Delta_n={exact_delta_n(p.prefix(J), n):.4f}")
print(f"asymptotic floor {LGC_FLOOR:.4f}")
