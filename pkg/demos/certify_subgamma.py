"""
Checking an MGF inequality point by point
=========================================

The shifted Bernoulli MGF against its sub-gamma majorant on a grid, with
margins kept so that near-misses are visible.
"""

from localgc.experiments import certify_grid

certs = certify_grid("subgamma")
worst = min(certs, key=lambda c: c.rel_margin)
print(f"{len(certs)} points, {sum(not c.passed for c in certs)} failures")
print("tightest (relative):", worst.inputs, f"lhs={worst.lhs:.6g} rhs={worst.rhs:.6g}")

# Away from t = 0 the slack is comfortable:
inner = [c for c in certs if c.inputs["t"] > 0]
print("smallest margin with t > 0:", min(c.margin for c in inner))
