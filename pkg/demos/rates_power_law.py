"""
How fast does the maximal deviation shrink?
===========================================

For p(j) = (j+1)^(-1/T) the expected sup-norm gap between empirical and true
means decays like sqrt(S/n).  We simulate it and look at the ratio.
"""

import math

from localgc import PowerLaw, SimConfig, s_functional, simulate_delta
from localgc.ineq import theorem_upper
from localgc.seq import t_functional

p = PowerLaw(2)

# S and T are suprema over all indices; the family supplies the tail.
S = s_functional(p, 10 ** 5).value
T = t_functional(p, 10 ** 5).value
print(f"S = {S:.4f}  T = {T:g}")

print(f"{'n':>6} {'Delta':>9} {'ci':>8} {'sqrt(n)D/sqrt(S)':>17} {'upper':>8}")
for k in range(4, 13, 2):
    n = 2 ** k
    est = simulate_delta(p, SimConfig(n, 2000, seed=1), workers=4)
    ratio = math.sqrt(n) * est.mean / math.sqrt(S)
    up = theorem_upper(S, T, n) if n >= 21 else float("nan")
    print(f"{n:>6} {est.mean:>9.5f} {est.ci_halfwidth:>8.5f} {ratio:>17.4f} {up:>8.3f}")

# The ratio hardly moves while n grows by a factor 256; the upper bound with
# its explicit constants is loose by an order of magnitude.
