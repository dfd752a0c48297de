"""Exact finite-dimensional oracles.

``exact_delta_n`` integrates the tail of ``max_j |B_j/n - p(j)|`` exactly:

    E max_j |B_j/n - p(j)| = int_0^1 (1 - prod_j F_j(t)) dt,

where ``F_j(t) = P(|B_j/n - p(j)| <= t)`` is a right-continuous step function
whose jumps sit at ``|k/n - p(j)|``.  Sorting all jumps once and sweeping
left to right evaluates the integral as a finite sum over half-open
intervals ``[t_i, t_{i+1})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from ._binomial import (compensated_cumsum, compensated_sum, log_pmf_range,
                        support_window)

__all__ = ["BinomialTable", "binomial_table", "exact_delta_n", "exact_mad",
           "mgf_shifted_bernoulli", "brute_force_delta_n"]

# pmf terms below this are dropped from the breakpoint sweep; their total
# effect on the integral is below d * (n + 1) * 1e-300.
NEGLIGIBLE_MASS = 1e-300


@dataclass(frozen=True)
class BinomialTable:
    n: int
    q: float
    log_pmf: np.ndarray
    cdf: np.ndarray

    @property
    def pmf(self) -> np.ndarray:
        return np.exp(self.log_pmf)

    def upper_tail(self, k: int) -> float:
        """``P(X >= k)``, summed directly so tiny tails keep full precision."""
        if k <= 0:
            return 1.0
        if k > self.n:
            return 0.0
        return float(compensated_sum(self.pmf[k:]))

    def lower_tail(self, k: int) -> float:
        """``P(X <= k)``."""
        if k < 0:
            return 0.0
        if k >= self.n:
            return 1.0
        return float(compensated_sum(self.pmf[: k + 1]))


def binomial_table(n: int, q: float) -> BinomialTable:
    n = int(n)
    q = float(q)
    if n < 1:
        raise ValueError("binomial_table needs n >= 1")
    if not 0.0 <= q <= 1.0:
        raise ValueError("binomial_table needs q in [0, 1]")
    lp = log_pmf_range(n, q, 0, n)
    cdf = compensated_cumsum(np.exp(lp))
    lp.setflags(write=False)
    cdf.setflags(write=False)
    return BinomialTable(n, q, lp, cdf)


def exact_mad(n: int, q: float) -> float:
    """``E|X - nq|`` for ``X ~ Binomial(n, q)``."""
    n = int(n)
    if n < 1:
        raise ValueError("exact_mad needs n >= 1")
    k = np.arange(n + 1, dtype=np.float64)
    pmf = np.exp(log_pmf_range(n, float(q), 0, n))
    return float(compensated_sum(pmf * np.abs(k - n * q)))


def mgf_shifted_bernoulli(q: float, s: float, t: float) -> float:
    """``E exp(t (X - s))`` for ``X ~ Bernoulli(q)``."""
    return (1.0 - q) * math.exp(-t * s) + q * math.exp(t * (1.0 - s))


def _check_pvec(pvec) -> np.ndarray:
    p = np.asarray(pvec, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("pvec must have at least one coordinate")
    if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 0.5):
        raise ValueError("pvec entries must lie in [0, 1/2]")
    if np.any(np.diff(p) > 0):
        raise ValueError("pvec must be nonincreasing; sort it first")
    return p


def _coordinate_events(n, pj):
    lo, hi = support_window(n, pj, NEGLIGIBLE_MASS)
    pmf = np.exp(log_pmf_range(n, pj, lo, hi))
    dev = np.abs(np.arange(lo, hi + 1, dtype=np.float64) / n - pj)
    keep = pmf > 0
    pmf, dev = pmf[keep], dev[keep]
    order = np.argsort(dev, kind="stable")
    dev = dev[order]
    F = compensated_cumsum(pmf[order])
    np.minimum(F, 1.0, out=F)
    # drop jumps that do not move F in double precision
    moved = np.empty(F.size, dtype=bool)
    moved[0] = True
    moved[1:] = F[1:] > F[:-1]
    return dev[moved], F[moved]


@njit(cache=True)
def _sweep(t, coord, F, d):
    fcur = np.zeros(d)
    started = 0
    ls = 0.0
    lc = 0.0
    acc = 0.0
    ac = 0.0
    prev = 0.0
    one_minus_P = 1.0
    for i in range(t.shape[0]):
        w = t[i] - prev
        if w > 0.0:
            v = one_minus_P * w
            s = acc + v
            if abs(acc) >= abs(v):
                ac += (acc - s) + v
            else:
                ac += (v - s) + acc
            acc = s
            prev = t[i]
        c = coord[i]
        fo = fcur[c]
        fn = F[i]
        if fo == 0.0:
            started += 1
            v = math.log(fn)
        else:
            v = math.log1p((fn - fo) / fo)
        fcur[c] = fn
        s = ls + v
        if abs(ls) >= abs(v):
            lc += (ls - s) + v
        else:
            lc += (v - s) + ls
        ls = s
        if started == d:
            one_minus_P = -math.expm1(ls + lc)
    v = one_minus_P * (1.0 - prev)
    return acc + ac + v


def exact_delta_n(pvec, n: int) -> float:
    """Exact ``E max_j |B_j/n - p(j)|`` for independent ``B_j ~ Binomial(n, p(j))``.

    ``pvec`` must be nonincreasing with entries in [0, 1/2].  Cost is
    O(m log m) in the number m of non-negligible (coordinate, k) pairs, at
    most ``d (n+1)``.
    """
    p = _check_pvec(pvec)
    n = int(n)
    if n < 1:
        raise ValueError("exact_delta_n needs n >= 1")
    ts, Fs, cs = [], [], []
    for j, pj in enumerate(p):
        dev, F = _coordinate_events(n, float(pj))
        ts.append(dev)
        Fs.append(F)
        cs.append(np.full(dev.size, j, dtype=np.int64))
    t = np.concatenate(ts)
    F = np.concatenate(Fs)
    c = np.concatenate(cs)
    order = np.argsort(t, kind="stable")
    val = _sweep(t[order], c[order], F[order], p.size)
    return min(1.0, max(0.0, val))


def brute_force_delta_n(pvec, n: int) -> float:
    """Enumerate all (n+1)^d outcomes.  Test oracle for tiny d and n."""
    import itertools

    p = np.asarray(pvec, dtype=np.float64)
    tables = [np.exp(log_pmf_range(int(n), float(pj), 0, int(n))) for pj in p]
    terms = []
    for ks in itertools.product(range(n + 1), repeat=p.size):
        w = 1.0
        dev = 0.0
        for j, k in enumerate(ks):
            w *= tables[j][k]
            dev = max(dev, abs(k / n - p[j]))
        terms.append(w * dev)
    return math.fsum(terms)
