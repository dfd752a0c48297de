"""Seeded Monte Carlo estimation of Delta_n = E max_j |B_j/n - p(j)|.

Three sampling paths, picked from the family:

* ``exact-head``: finite sequences.  Every coordinate is drawn by inversion
  from its binomial CDF table.
* ``truncated``: the one-ones criterion holds with a short prefix J.  Head
  coordinates are drawn, and the tail contributes exactly ``p(J+1)`` on the
  event that no tail coordinate sees a one (probability >= 1 - eps_tail).
* ``blocks``: heavy tails.  Coordinates past the head are grouped into runs
  [a, b] where p drops by at most a factor ``1 + block_ratio``.  Inside a run
  every B_j is sandwiched, through a common uniform, between binomials with
  the run's largest and smallest mean.  That gives one random variable that
  dominates the run's maximal deviation and one that is dominated by it, both
  with closed-form CDFs, so a whole run costs a single uniform per replicate.
  Far out, an m-ones event bound (at most m-1 ones per coordinate, failure
  probability <= eps_tail) caps deviations at (m-1)/n.

Randomness is drawn from ``rng.uniforms`` keyed by (seed, replicate,
coordinate or run index), so results do not depend on how replicates are
split across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from ._binomial import cdf_window, support_window, two_sided_window
from .rng import TAG_BLOCK, TAG_HEAD, replicate_coordinate_uniforms
from .seq import MeanSequence

__all__ = ["SimConfig", "DeltaEstimate", "Truncation", "TruncationError",
           "choose_truncation", "simulate_delta", "sup_deviation_samples",
           "replicate_bounds"]

CHUNK = 2048          # replicates per work unit; fixed so merges never depend on workers
COLUMN_GROUP = 256    # coordinates per uniform matrix inside a work unit
MAX_ONES = 40         # highest m tried for the far-tail event bound
FAR_LIMIT = 10 ** 30  # largest index a far-tail cut may sit at
MAX_BLOCKS = 50_000
TABLE_TAIL = 1e-300


class TruncationError(RuntimeError):
    """No admissible truncation exists under the configured limits."""


@dataclass(frozen=True)
class SimConfig:
    n: int
    replicates: int
    seed: int
    tail_tolerance: float = 1e-3
    max_truncation: int = 10 ** 6
    head_size: int = 4096
    block_ratio: float = 0.01
    confidence: float = 0.95

    def __post_init__(self):
        if self.n < 1 or self.replicates < 1:
            raise ValueError("n and replicates must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if not 0 < self.tail_tolerance <= 1:
            raise ValueError("tail_tolerance must lie in (0, 1]")
        if self.max_truncation < 1 or self.head_size < 1:
            raise ValueError("max_truncation and head_size must be positive")
        if not 0 < self.block_ratio < 1:
            raise ValueError("block_ratio must lie in (0, 1)")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class DeltaEstimate:
    """Monte Carlo estimate of Delta_n.

    ``[bracket_lo, bracket_hi]`` contains Delta_n up to Monte Carlo error of
    at most ``ci_halfwidth`` on each side.  On the ``exact-head`` and
    ``truncated`` paths ``bracket_lo == mean``.
    """
    mean: float
    ci_halfwidth: float
    bracket_lo: float
    bracket_hi: float
    J_used: int
    tail_event_bound: float
    method: str
    ones_level: int
    n_blocks: int = 0

    def to_record(self, p: Optional[MeanSequence] = None, cfg: Optional[SimConfig] = None) -> dict:
        rec = {}
        if p is not None:
            try:
                rec.update(p.to_dict())
            except TypeError:
                rec["family"] = p.family
        if cfg is not None:
            rec.update(n=cfg.n, R=cfg.replicates, seed=cfg.seed)
        rec.update(J=self.J_used, mean=self.mean, ci=self.ci_halfwidth,
                   bracket_lo=self.bracket_lo, bracket_hi=self.bracket_hi,
                   tail_event_bound=self.tail_event_bound, method=self.method,
                   ones_level=self.ones_level, n_blocks=self.n_blocks)
        return rec


@dataclass(frozen=True)
class Truncation:
    J: int
    tail_event_bound: float
    ones_level: int


def _event_bound(p, n, m, J):
    if m > n:
        return 0.0
    return math.comb(n, m) * p.tail_power_sum(J, m)[1]


def _smallest_cut(p, n, m, eps, lo, limit):
    """Smallest J in [lo, limit] with C(n, m) * sum_{j>J} p(j)^m <= eps, or None."""
    if _event_bound(p, n, m, limit) > eps:
        return None
    if _event_bound(p, n, m, lo) <= eps:
        return lo
    step = 1
    while lo + step < limit and _event_bound(p, n, m, lo + step) > eps:
        step *= 2
    a, b = lo + step // 2, min(lo + step, limit)
    while b - a > 1:
        mid = (a + b) // 2
        if _event_bound(p, n, m, mid) <= eps:
            b = mid
        else:
            a = mid
    return b


def choose_truncation(p: MeanSequence, n: int, eps_tail: float,
                      max_truncation: int = 10 ** 6, max_ones: int = 3) -> Truncation:
    """Smallest prefix J whose tail sees at most m-1 ones with probability >= 1 - eps_tail.

    Tries m = 1, 2, ..., max_ones in turn.  Finite sequences return their
    length with a zero bound.
    """
    if p.length is not None:
        return Truncation(p.length, 0.0, 1)
    for m in range(1, max_ones + 1):
        J = _smallest_cut(p, n, m, eps_tail, 1, max_truncation)
        if J is not None:
            return Truncation(J, _event_bound(p, n, m, J), m)
    raise TruncationError(
        f"no J <= {max_truncation} meets the {max_ones}-ones criterion at n={n}, eps={eps_tail}")


# -- sampling kernels ----------------------------------------------------------

@njit(cache=True, nogil=True)
def _table_max(u, vals, cdf, starts, lengths, out):
    """out[r] = max(out[r], vals[inverse-cdf(u[r, c])]) for every table c."""
    R, C = u.shape
    for c in range(C):
        s = starts[c]
        m = lengths[c]
        for r in range(R):
            x = u[r, c]
            lo = 0
            hi = m - 1
            # first index with cdf > x
            while lo < hi:
                mid = (lo + hi) >> 1
                if cdf[s + mid] > x:
                    hi = mid
                else:
                    lo = mid + 1
            v = vals[s + lo]
            if v > out[r]:
                out[r] = v


@njit(cache=True, nogil=True)
def _pair_table_max(u, lo_vals, hi_vals, cdf_lo, cdf_hi, s_lo, n_lo, s_hi, n_hi,
                    out_lo, out_mid, out_hi):
    R, C = u.shape
    for c in range(C):
        for r in range(R):
            x = u[r, c]
            a = 0
            b = n_lo[c] - 1
            while a < b:
                mid = (a + b) >> 1
                if cdf_lo[s_lo[c] + mid] > x:
                    b = mid
                else:
                    a = mid + 1
            w = lo_vals[s_lo[c] + a]
            a = 0
            b = n_hi[c] - 1
            while a < b:
                mid = (a + b) >> 1
                if cdf_hi[s_hi[c] + mid] > x:
                    b = mid
                else:
                    a = mid + 1
            v = hi_vals[s_hi[c] + a]
            if w > out_lo[r]:
                out_lo[r] = w
            if v > out_hi[r]:
                out_hi[r] = v
            m = 0.5 * (v + w)
            if m > out_mid[r]:
                out_mid[r] = m


def _reachable(vals, cdf):
    """Drop entries that no 53-bit uniform can select.

    Inversion returns the first index with ``cdf > u`` and ``u`` is a multiple
    of 2^-53, so entry i is reachable iff ``[cdf[i-1], cdf[i])`` contains such
    a multiple.  Removing the others leaves every draw unchanged.
    """
    scale = 9007199254740992.0
    prev = np.concatenate([[0.0], cdf[:-1]])
    keep = np.ceil(prev * scale) < cdf * scale
    return vals[keep], cdf[keep]


def _flatten(tables):
    lengths = np.array([t[0].size for t in tables], dtype=np.int64)
    starts = np.zeros(len(tables), dtype=np.int64)
    if len(tables) > 1:
        starts[1:] = np.cumsum(lengths)[:-1]
    vals = np.concatenate([t[0] for t in tables]) if tables else np.zeros(0)
    cdf = np.concatenate([t[1] for t in tables]) if tables else np.zeros(0)
    return vals, cdf, starts, lengths


def _head_table(n, pj):
    k_lo, cdf = cdf_window(n, pj, TABLE_TAIL)
    vals = np.abs(np.arange(k_lo, k_lo + cdf.size, dtype=np.float64) / n - pj)
    return _reachable(vals, cdf)


def _run_table(n, pa, c1, pb, c2, L):
    """Law of G = max over L coupled pairs of max(A/n - c1, c2 - B/n).

    A ~ Bin(n, pa) and B ~ Bin(n, pb) are driven by one uniform per pair, so
    P(A <= x, B >= y) = max(0, F_a(x) - F_b(y - 1)).
    """
    log_tail = math.log(TABLE_TAIL) - math.log(L)
    ka = support_window(n, pa, log_tail=log_tail)[1]
    kb = support_window(n, pb, log_tail=log_tail)[1]
    cdf_a, sf_a = two_sided_window(n, pa, ka, log_tail)
    cdf_b, _ = two_sided_window(n, pb, kb, log_tail)
    up = np.arange(ka + 1, dtype=np.float64) / n - c1
    down = c2 - np.arange(kb + 1, dtype=np.float64) / n
    cand = np.unique(np.concatenate([up, down]))
    x = np.searchsorted(up, cand, side="right") - 1
    # y(v) = min{k : c2 - k/n <= v} = number of k with down[k] > v
    y = np.searchsorted(-down, -cand, side="left")
    y = np.minimum(y, kb + 1)
    Fb_prev = np.where(y >= 1, cdf_b[np.maximum(y - 1, 0)], 0.0)
    Fb_prev = np.where(y > kb, 1.0, Fb_prev)
    Fa = np.where(x >= 0, cdf_a[np.maximum(x, 0)], 0.0)
    sfa = np.where(x >= 0, sf_a[np.maximum(x, 0)], 1.0)
    miss = sfa + Fb_prev
    with np.errstate(divide="ignore"):
        log_pi = np.where(miss < 0.5, np.log1p(-np.minimum(miss, 0.5)),
                          np.log(np.maximum(Fa - Fb_prev, 0.0)))
    cdf = np.exp(L * log_pi)
    cdf = np.maximum.accumulate(cdf)
    cdf[-1] = 1.0
    return _reachable(cand, cdf)


# -- planning ------------------------------------------------------------------

@dataclass
class _Plan:
    n: int
    method: str
    head: np.ndarray
    floor: float            # constant added to every replicate max (truncated path)
    far_cap: float          # M_hi extra term (blocks path)
    tail_event_bound: float
    J_used: int
    ones_level: int
    runs_lo: tuple = ()
    runs_hi: tuple = ()
    n_runs: int = 0
    range_hi: float = 1.0
    head_tables: tuple = ()

    def __post_init__(self):
        self.head_tables = _flatten([_head_table(self.n, float(q)) for q in self.head])


def _p_at(p, j):
    return float(p(np.array(float(j))))


def _tail_runs(p, start, stop, ratio):
    runs = []
    a = start
    while a <= stop:
        pa = _p_at(p, a)
        target = pa / (1.0 + ratio)
        if _p_at(p, stop) >= target:
            b = stop
        else:
            s = 1
            while _p_at(p, a + s) >= target:
                s *= 2
            lo, hi = a + s // 2, a + s
            if s == 1:
                lo = a
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _p_at(p, mid) >= target:
                    lo = mid
                else:
                    hi = mid
            b = lo
        runs.append((a, b, pa, _p_at(p, b)))
        if len(runs) > MAX_BLOCKS:
            raise TruncationError("tail needs more than MAX_BLOCKS runs; raise block_ratio")
        a = b + 1
    return runs


def _plan(p: MeanSequence, cfg: SimConfig) -> _Plan:
    n = cfg.n
    if p.length is not None:
        head = p.prefix(p.length)
        p.check_monotone(p.length)
        return _Plan(n, "exact-head", head, 0.0, 0.0, 0.0, p.length, 1,
                     range_hi=float(np.max(1.0 - head)))
    limit = min(cfg.head_size, cfg.max_truncation)
    J = _smallest_cut(p, n, 1, cfg.tail_tolerance, 1, limit)
    if J is not None:
        p.check_monotone(J + 1)
        return _Plan(n, "truncated", p.prefix(J), _p_at(p, J + 1), 0.0,
                     _event_bound(p, n, 1, J), J, 1)
    J_h = min(cfg.head_size, cfg.max_truncation)
    p.check_monotone(J_h + 1)
    for m in range(1, MAX_ONES + 1):
        J_far = _smallest_cut(p, n, m, cfg.tail_tolerance, J_h, FAR_LIMIT)
        if J_far is not None:
            break
    else:
        raise TruncationError(
            f"{p!r}: no m <= {MAX_ONES} gives a far-tail cut below {FAR_LIMIT:.0e} at n={n}")
    tail_bound = _event_bound(p, n, m, J_far)
    runs = _tail_runs(p, J_h + 1, J_far, cfg.block_ratio) if J_far > J_h else []
    lo_tables, hi_tables = [], []
    for a, b, p_hi, p_lo in runs:
        L = float(b - a + 1)
        hi_tables.append(_run_table(n, p_hi, p_lo, p_lo, p_hi, L))
        lo_tables.append(_run_table(n, p_lo, p_hi, p_hi, p_lo, L))
    far_cap = max((m - 1) / n, _p_at(p, J_far + 1))
    return _Plan(n, "blocks", p.prefix(J_h), 0.0, far_cap, tail_bound, int(J_far), m,
                 tuple(_flatten(lo_tables)), tuple(_flatten(hi_tables)), len(runs))


def _chunk_values(plan: _Plan, cfg: SimConfig, r0: int, r1: int):
    reps = np.arange(r0, r1, dtype=np.uint64)
    R = reps.size
    head_max = np.zeros(R)
    vals, cdf, starts, lengths = plan.head_tables
    for c0 in range(0, plan.head.size, COLUMN_GROUP):
        cols = np.arange(c0, min(c0 + COLUMN_GROUP, plan.head.size))
        u = replicate_coordinate_uniforms(cfg.seed, TAG_HEAD, reps, cols + 1)
        _table_max(u, vals, cdf, starts[cols], lengths[cols], head_max)
    head_max = np.maximum(head_max, plan.floor)
    if plan.method != "blocks" or plan.n_runs == 0:
        hi = np.maximum(head_max, plan.far_cap)
        return head_max, head_max.copy(), hi
    lo_vals, lo_cdf, lo_s, lo_n = plan.runs_lo
    hi_vals, hi_cdf, hi_s, hi_n = plan.runs_hi
    out_lo = head_max.copy()
    out_mid = head_max.copy()
    out_hi = head_max.copy()
    for b0 in range(0, plan.n_runs, COLUMN_GROUP):
        b1 = min(b0 + COLUMN_GROUP, plan.n_runs)
        idx = np.arange(b0, b1)
        u = replicate_coordinate_uniforms(cfg.seed, TAG_BLOCK, reps, idx + 1)
        _pair_table_max(u, lo_vals, hi_vals, lo_cdf, hi_cdf,
                        lo_s[idx], lo_n[idx], hi_s[idx], hi_n[idx], out_lo, out_mid, out_hi)
    np.maximum(out_hi, plan.far_cap, out=out_hi)
    return out_lo, out_mid, out_hi


def replicate_bounds(p: MeanSequence, cfg: SimConfig, workers: int = 1):
    """Per-replicate ``(lower, estimate, upper)`` arrays and the sampling plan."""
    plan = _plan(p, cfg)
    chunks = [(r, min(r + CHUNK, cfg.replicates)) for r in range(0, cfg.replicates, CHUNK)]
    if workers <= 1 or len(chunks) == 1:
        parts = [_chunk_values(plan, cfg, a, b) for a, b in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda ab: _chunk_values(plan, cfg, *ab), chunks))
    lo = np.concatenate([q[0] for q in parts])
    mid = np.concatenate([q[1] for q in parts])
    hi = np.concatenate([q[2] for q in parts])
    return lo, mid, hi, plan


def _value_floor(head, n):
    # every replicate max is at least the smallest attainable deviation of each head coordinate
    if head.size == 0:
        return 0.0
    k = np.floor(head * n)
    return float(np.max(np.minimum(head - k / n, (k + 1) / n - head)))


def _halfwidth(values, mean, span, confidence):
    """Two-sided interval half-width for a mean of values in a range of length ``span``.

    The smaller of Hoeffding and the empirical Bernstein bound of Maurer and
    Pontil, each at half the error budget so the minimum keeps the level.
    """
    R = values.size
    alpha = 1.0 - confidence
    hoeffding = span * math.sqrt(math.log(4.0 / alpha) / (2.0 * R))
    if R < 2 or span == 0.0:
        return hoeffding
    var = math.fsum((values - mean) ** 2) / (R - 1)
    log_term = math.log(8.0 / alpha)
    bernstein = math.sqrt(2.0 * var * log_term / R) + 7.0 * span * log_term / (3.0 * (R - 1))
    return min(hoeffding, bernstein)


def simulate_delta(p: MeanSequence, cfg: SimConfig, workers: int = 1) -> DeltaEstimate:
    """Estimate Delta_n with a confidence interval and a truncation bracket.

    Replicate values are known a priori to lie in ``[a, b]`` (``a`` the largest
    unavoidable head deviation, ``b`` at most 1); the interval is scaled by
    ``b - a``, so a deterministic maximum gets half-width 0.  The result is
    bitwise identical for any ``workers``.
    """
    lo, mid, hi, plan = replicate_bounds(p, cfg, workers)
    R = cfg.replicates
    mean = math.fsum(mid) / R
    a = _value_floor(plan.head, cfg.n)
    span = max(0.0, plan.range_hi - a)
    ci = _halfwidth(mid, mean, span, cfg.confidence)
    if plan.method == "blocks":
        b_lo = math.fsum(lo) / R
        b_hi = math.fsum(hi) / R + plan.tail_event_bound
    else:
        b_lo = mean
        b_hi = mean + plan.tail_event_bound
    return DeltaEstimate(mean, ci, b_lo, b_hi, plan.J_used, plan.tail_event_bound,
                         plan.method, plan.ones_level, plan.n_runs)


def sup_deviation_samples(p: MeanSequence, cfg: SimConfig, workers: int = 1) -> np.ndarray:
    """The R replicate values behind ``simulate_delta(p, cfg).mean``."""
    return replicate_bounds(p, cfg, workers)[1]
