"""Numerics for uniform deviations of empirical means under Bernoulli product measures.

Modules:

* ``seq``: decreasing mean sequences and the functionals S, T, H, sigma^2, (B)
* ``exact``: binomial tables and the exact expected maximal deviation
* ``mc``: seeded Monte Carlo for infinite sequences with truncation brackets
* ``ineq``: bounds with explicit constants and numeric certificates
* ``estimator``: the two-sample empirical bound and a Rademacher diagnostic
* ``vc``: shattering construction and brute-force VC dimension
* ``experiments`` / ``cli``: declarative experiment runner
"""

__version__ = "0.1.0"

from .exact import binomial_table, exact_delta_n, exact_mad, mgf_shifted_bernoulli
from .mc import SimConfig, DeltaEstimate, choose_truncation, simulate_delta, sup_deviation_samples
from .seq import (Finite, Geometric, LogInverse, PowerLaw, Custom, s_functional,
                  t_functional, entropy, condition_b_partial, sigma2_proxy, sort_decreasing)

__all__ = [
    "binomial_table", "exact_delta_n", "exact_mad", "mgf_shifted_bernoulli",
    "SimConfig", "DeltaEstimate", "choose_truncation", "simulate_delta",
    "sup_deviation_samples", "Finite", "Geometric", "LogInverse", "PowerLaw",
    "Custom", "s_functional", "t_functional", "entropy", "condition_b_partial",
    "sigma2_proxy", "sort_decreasing",
]
