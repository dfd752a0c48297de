"""
A bound you can compute from data
=================================

Two independent samples: the second decides which coordinates to reflect,
the first supplies the means.  We check coverage against the exact value.
"""

from localgc import PowerLaw, exact_delta_n
from localgc.estimator import draw_sample, empirical_bound
from localgc.rng import TAG_SAMPLE_A, TAG_SAMPLE_B

pvec = PowerLaw(2).prefix(50)
n, delta = 200, 0.1
exact = exact_delta_n(pvec, n)

reports = []
for r in range(200):
    s1 = draw_sample(pvec, n, seed=3, pair=r, tag=TAG_SAMPLE_A)
    s2 = draw_sample(pvec, n, seed=3, pair=r, tag=TAG_SAMPLE_B)
    reports.append(empirical_bound(s1, s2, delta))

bounds = [rep.bound for rep in reports]
print(f"exact Delta_n     = {exact:.4f}")
print(f"bound: min {min(bounds):.4f}  max {max(bounds):.4f}")
print(f"coverage          = {sum(b >= exact for b in bounds) / len(bounds):.3f}")

# The bound is conservative; the first few sorted reoriented means show why.
print("p_tilde sorted head:", reports[0].tilde_p_sorted[:5].round(3))
