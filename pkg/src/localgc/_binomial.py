"""Low-level binomial numerics shared by the exact oracles and the simulator.

The log-pmf follows Loader's saddle-point formulation (the one behind R's
``dbinom``): it stays accurate to a few ulps in log space for n up to 1e7 and
for success probabilities down to the subnormal range, where the plain
log-gamma expression loses ~1e-10 relative accuracy at n = 1e5.
"""

import math

import numpy as np
from numba import njit

_LN_2PI = math.log(2.0 * math.pi)


def _stirlerr_table(kmax=15):
    out = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        log_fact = math.fsum(math.log(i) for i in range(1, k + 1))
        out[k] = math.fsum([log_fact, -(k + 0.5) * math.log(k), float(k), -0.5 * _LN_2PI])
    return out


_STIRLERR_SMALL = _stirlerr_table()


@njit(cache=True)
def _stirlerr(n):
    # log(n!) - log(sqrt(2 pi n) (n/e)^n) for integer-valued n >= 0
    if n <= 15.0:
        return _STIRLERR_SMALL[int(n)]
    s0 = 1.0 / 12.0
    s1 = 1.0 / 360.0
    s2 = 1.0 / 1260.0
    s3 = 1.0 / 1680.0
    s4 = 1.0 / 1188.0
    nn = n * n
    if n > 500.0:
        return (s0 - s1 / nn) / n
    if n > 80.0:
        return (s0 - (s1 - s2 / nn) / nn) / n
    if n > 35.0:
        return (s0 - (s1 - (s2 - s3 / nn) / nn) / nn) / n
    return (s0 - (s1 - (s2 - (s3 - s4 / nn) / nn) / nn) / nn) / n


@njit(cache=True)
def _bd0(x, m):
    # x log(x/m) + m - x, accurate when x is close to m
    if abs(x - m) < 0.1 * (x + m):
        v = (x - m) / (x + m)
        s = (x - m) * v
        ej = 2.0 * x * v
        v2 = v * v
        for j in range(1, 1000):
            ej *= v2
            s1 = s + ej / (2 * j + 1)
            if s1 == s:
                return s1
            s = s1
        return s
    return x * math.log(x / m) + m - x


@njit(cache=True)
def log_pmf_scalar(k, n, p):
    q = 1.0 - p
    if p == 0.0:
        return 0.0 if k == 0 else -np.inf
    if q == 0.0:
        return 0.0 if k == n else -np.inf
    if k < 0 or k > n:
        return -np.inf
    fn = float(n)
    if k == 0:
        if n == 0:
            return 0.0
        if p < 0.1:
            return -_bd0(fn, fn * q) - fn * p
        return fn * math.log1p(-p)
    if k == n:
        if q < 0.1:
            return -_bd0(fn, fn * p) - fn * q
        return fn * math.log(p)
    fk = float(k)
    lc = (_stirlerr(fn) - _stirlerr(fk) - _stirlerr(fn - fk)
          - _bd0(fk, fn * p) - _bd0(fn - fk, fn * q))
    lf = _LN_2PI + math.log(fk) + math.log1p(-fk / fn)
    return lc - 0.5 * lf


@njit(cache=True)
def log_pmf_range(n, p, k_lo, k_hi):
    out = np.empty(k_hi - k_lo + 1)
    for i in range(k_hi - k_lo + 1):
        out[i] = log_pmf_scalar(k_lo + i, n, p)
    return out


@njit(cache=True)
def compensated_cumsum(x):
    """Running sums with Neumaier compensation."""
    out = np.empty(x.shape[0])
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
        out[i] = s + c
    return out


@njit(cache=True)
def compensated_sum(x):
    s = 0.0
    c = 0.0
    for i in range(x.shape[0]):
        v = x[i]
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


def support_window(n, p, tail=1e-300, log_tail=None):
    """Index range [lo, hi] outside of which every pmf term is below ``tail``.

    Walks outward from the mode; pmf terms are unimodal in k so the first term
    below ``tail`` on each side bounds the rest of that side.  ``log_tail``
    overrides ``tail`` for thresholds below the double range.
    """
    if p <= 0.0:
        return 0, 0
    if p >= 1.0:
        return n, n
    mode = min(n, int(math.floor((n + 1) * p)))
    if log_tail is None:
        log_tail = math.log(tail)
    sd = math.sqrt(n * p * (1.0 - p)) + 1.0
    step = max(1, int(4 * sd))
    lo = mode
    while lo > 0 and log_pmf_scalar(lo, n, p) > log_tail:
        lo = max(0, lo - step)
    hi = mode
    while hi < n and log_pmf_scalar(hi, n, p) > log_tail:
        hi = min(n, hi + step)
    return lo, hi


def cdf_window(n, p, tail=1e-300):
    """Truncated CDF table ``(k_lo, cdf)`` with ``cdf[i] = P(X <= k_lo + i)``.

    Mass below ``k_lo`` is folded in as a leading constant so the table is a
    faithful CDF at double precision; the last entry is clamped to one.
    """
    lo, hi = support_window(n, p, tail)
    pmf = np.exp(log_pmf_range(n, p, lo, hi))
    below = 0.0
    if lo > 0:
        below = float(np.exp(log_pmf_range(n, p, 0, lo - 1)).sum())
    pmf[0] += below
    cdf = compensated_cumsum(pmf)
    np.minimum(cdf, 1.0, out=cdf)
    cdf[-1] = 1.0
    return lo, cdf


def two_sided_window(n, p, k_hi, log_tail):
    """pmf-derived tables on k = 0..k_hi: ``(cdf, sf)`` with ``sf[k] = P(X > k)``.

    Both tails are summed directly, so values far below machine epsilon keep
    their relative accuracy.  Mass beyond the point where log-pmf drops under
    ``log_tail`` is ignored.
    """
    _, top = support_window(n, p, log_tail=log_tail)
    top = max(top, k_hi)
    pmf = np.exp(log_pmf_range(n, p, 0, top))
    cdf = compensated_cumsum(pmf)[: k_hi + 1]
    rev = compensated_cumsum(pmf[::-1])[::-1]
    sf = np.empty(k_hi + 1)
    sf[:k_hi + 1] = np.append(rev[1:], 0.0)[: k_hi + 1]
    np.minimum(cdf, 1.0, out=cdf)
    return cdf, sf
