import math

import numpy as np
import pytest

from localgc._binomial import log_pmf_range
from localgc.exact import exact_delta_n
from localgc.mc import (CHUNK, SimConfig, Truncation, TruncationError, _run_table, choose_truncation,
                        replicate_bounds, simulate_delta, sup_deviation_samples)
from localgc.seq import Custom, Finite, Geometric, LogInverse, PowerLaw


def test_single_fair_coin_is_deterministic():
    est = simulate_delta(Finite([0.5]), SimConfig(1, 10 ** 5, 123))
    assert est.mean == 0.5 and est.ci_halfwidth == 0.0
    assert est.bracket_lo == est.bracket_hi == 0.5


def test_agrees_with_exact_on_small_vector():
    p = Finite([0.5, 0.5, 0.3, 0.2, 0.1])
    est = simulate_delta(p, SimConfig(20, 10 ** 5, 2024))
    assert abs(est.mean - exact_delta_n(p.values, 20)) <= 3 * est.ci_halfwidth
    # the Hoeffding interval is conservative; the empirical error is far smaller
    assert abs(est.mean - exact_delta_n(p.values, 20)) <= 3e-3


def test_choose_truncation_examples():
    assert choose_truncation(Finite([0.3, 0.2, 0.1]), 50, 1e-3) == Truncation(3, 0.0, 1)
    t = choose_truncation(PowerLaw(0.5), 100, 1e-3)
    # n / (J + 1) <= 1e-3  =>  J = 99999
    assert t.J == 99999 and t.ones_level == 1 and t.tail_event_bound <= 1e-3
    with pytest.raises(TruncationError):
        choose_truncation(PowerLaw(2), 100, 1e-3)
    with pytest.raises(TruncationError):
        choose_truncation(LogInverse(2), 100, 1e-3)


def test_choose_truncation_escalates_to_two_ones():
    t = choose_truncation(PowerLaw(0.8), 100, 1e-3)
    # C(100,2) (J+1)^(-3/2) / (3/2) <= 1e-3
    expected = math.ceil((4950 / 1.5e-3) ** (2 / 3)) - 1
    assert t.ones_level == 2 and abs(t.J - expected) <= 1


def test_power_law_half_bracket_width():
    est = simulate_delta(PowerLaw(0.5), SimConfig(100, 2000, 5))
    assert est.bracket_lo <= est.mean <= est.bracket_hi
    assert est.bracket_hi - est.bracket_lo <= 1e-3 + est.ci_halfwidth


def test_spec_ladder_path_when_head_allows():
    cfg = SimConfig(100, 500, 5, head_size=200_000)
    est = simulate_delta(PowerLaw(0.5), cfg)
    assert est.method == "truncated" and est.J_used == 99999
    assert est.bracket_lo == est.mean and est.bracket_hi == est.mean + est.tail_event_bound


def test_geometric_uses_truncated_path():
    est = simulate_delta(Geometric(0.5, 0.5), SimConfig(50, 1000, 1))
    assert est.method == "truncated" and est.J_used < 40


def test_sup_deviation_samples_examples():
    v = sup_deviation_samples(PowerLaw(1), SimConfig(30, 1, 9))
    assert v.shape == (1,) and 0 <= v[0] <= 1
    v = sup_deviation_samples(Finite([0.5]), SimConfig(2, 20000, 4))
    assert set(np.unique(v)) <= {0.0, 0.5}
    frac = np.mean(v == 0.5)
    assert abs(frac - 0.5) < 5 * math.sqrt(0.25 / v.size)


def test_mcdiarmid_tail_fraction():
    p = Finite(PowerLaw(1).prefix(500))
    cfg = SimConfig(100, 20000, 77)
    v = sup_deviation_samples(p, cfg)
    frac = np.mean(v >= v.mean() + 0.1)
    assert frac <= math.exp(-2 * 100 * 0.01) + 3 * math.sqrt(0.25 / v.size)


@pytest.mark.parametrize("p", [Finite(PowerLaw(1).prefix(300)), PowerLaw(2), PowerLaw(0.5)])
def test_bitwise_deterministic_across_workers(p):
    cfg = SimConfig(64, 2 * CHUNK + 17, 99)
    a = simulate_delta(p, cfg, workers=1)
    b = simulate_delta(p, cfg, workers=4)
    assert a == b
    va = replicate_bounds(p, cfg, 1)
    vb = replicate_bounds(p, cfg, 3)
    for x, y in zip(va[:3], vb[:3]):
        assert np.array_equal(x, y)


def test_replicate_values_bounded_and_ordered():
    for p in (PowerLaw(2), PowerLaw(0.5), Finite([0.4, 0.1])):
        lo, mid, hi, _ = replicate_bounds(p, SimConfig(40, 3000, 3))
        assert np.all((0 <= lo) & (lo <= mid) & (mid <= hi) & (hi <= 1))
        est = simulate_delta(p, SimConfig(40, 3000, 3))
        assert est.bracket_lo <= est.mean <= est.bracket_hi


def test_oracle_agreement_over_seeds():
    rng = np.random.default_rng(0)
    hits = 0
    trials = 40
    for s in range(trials):
        d = int(rng.integers(1, 9))
        n = int(rng.integers(1, 51))
        p = np.sort(rng.uniform(0.01, 0.5, d))[::-1]
        est = simulate_delta(Finite(p), SimConfig(n, 20000, s))
        hits += abs(est.mean - exact_delta_n(p, n)) <= 3 * est.ci_halfwidth
    assert hits >= 0.99 * trials


def test_monotone_truncation_on_paired_streams():
    base = PowerLaw(1.5).prefix(400)
    cfg = SimConfig(50, 3000, 17)
    prev = None
    for J in (10, 50, 200, 400):
        v = sup_deviation_samples(Finite(base[:J]), cfg)
        if prev is not None:
            assert np.all(v >= prev)
        prev = v


def _run_cdf_by_partition(n, pa, c1, pb, c2, L, grid):
    """Law of the run surrogate from the partition of the coupling uniform."""
    Fa = np.cumsum(np.exp(log_pmf_range(n, pa, 0, n)))
    Fb = np.cumsum(np.exp(log_pmf_range(n, pb, 0, n)))
    cuts = np.unique(np.concatenate([[0.0, 1.0], np.minimum(Fa, 1.0), np.minimum(Fb, 1.0)]))
    out = []
    for v in grid:
        mass = 0.0
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            u = 0.5 * (lo + hi)
            A = int(np.searchsorted(Fa, u, side="right"))
            B = int(np.searchsorted(Fb, u, side="right"))
            if max(A / n - c1, c2 - B / n) <= v:
                mass += hi - lo
        out.append(mass ** L)
    return np.array(out)


@pytest.mark.parametrize("n,p_hi,p_lo,L", [(10, 0.3, 0.25, 1), (25, 0.1, 0.09, 4), (40, 0.02, 0.019, 30)])
def test_run_table_matches_partition_oracle(n, p_hi, p_lo, L):
    for args in ((n, p_hi, p_lo, p_lo, p_hi, float(L)), (n, p_lo, p_hi, p_hi, p_lo, float(L))):
        vals, cdf = _run_table(*args)
        grid = np.linspace(-0.5, 1.0, 301)
        idx = np.searchsorted(vals, grid, side="right") - 1
        ours = np.where(idx >= 0, cdf[np.maximum(idx, 0)], 0.0)
        ref = _run_cdf_by_partition(*args[:5], L, grid)
        assert np.max(np.abs(ours - ref)) < 1e-12


def test_run_surrogates_bracket_the_run_maximum():
    # a run of L coordinates with means between p_lo and p_hi; the surrogate
    # from the larger-mean side dominates, the other is dominated
    n, p_hi, p_lo, L = 30, 0.2, 0.18, 5
    means = np.linspace(p_hi, p_lo, L)
    Fs = [np.cumsum(np.exp(log_pmf_range(n, q, 0, n))) for q in means]
    hi_vals, hi_cdf = _run_table(n, p_hi, p_lo, p_lo, p_hi, float(L))
    lo_vals, lo_cdf = _run_table(n, p_lo, p_hi, p_hi, p_lo, float(L))
    rng = np.random.default_rng(1)
    u = rng.random((50000, L))
    dev = np.max(np.abs(np.stack([np.searchsorted(F, u[:, i], side="right") for i, F in enumerate(Fs)], 1) / n
                        - means), axis=1)
    for v in np.linspace(0, 0.4, 41):
        emp = np.mean(dev <= v)
        up = hi_cdf[np.searchsorted(hi_vals, v, side="right") - 1] if v >= hi_vals[0] else 0.0
        low = lo_cdf[np.searchsorted(lo_vals, v, side="right") - 1] if v >= lo_vals[0] else 0.0
        slack = 4 * math.sqrt(0.25 / u.shape[0])
        assert up <= emp + slack and emp <= low + slack


def test_block_path_matches_exact_on_long_prefix():
    K = 20000
    n = 64

    def fn(j):
        return np.where(j <= K, 0.5 * (j + 1.0) ** -0.5, 1e-30 * (j + 1.0) ** -2.0)

    head = 0.5 * (np.arange(1, K + 1, dtype=np.float64) + 1.0) ** -0.5

    def tail_power_sum(J, k):
        far = 1e-30 ** k * (max(J, K) + 1.0) ** (1 - 2 * k) / (2 * k - 1)
        near = math.fsum(head[J:] ** k) if J < K else 0.0
        return near, near + far

    p = Custom(fn, tail_power_sum=tail_power_sum)
    cfg = SimConfig(n, 20000, 8, head_size=128)
    lo, mid, hi, plan = replicate_bounds(p, cfg)
    assert plan.method == "blocks" and plan.n_runs > 100
    est = simulate_delta(p, cfg)
    exact = exact_delta_n(head, n)
    se = 4 * np.std(mid) / math.sqrt(mid.size)
    assert est.bracket_lo - se <= exact <= est.bracket_hi + se
    assert abs(est.mean - exact) <= est.bracket_hi - est.bracket_lo + se


def test_infinite_non_summable_family_fails_cleanly():
    with pytest.raises(TruncationError):
        simulate_delta(LogInverse(2), SimConfig(100, 10, 1))


def test_record_fields():
    est = simulate_delta(PowerLaw(1), SimConfig(30, 100, 1))
    rec = est.to_record(PowerLaw(1), SimConfig(30, 100, 1))
    for key in ("family", "n", "R", "seed", "J", "mean", "ci", "bracket_lo", "bracket_hi"):
        assert key in rec


def test_config_validation():
    for bad in (dict(n=0, replicates=1, seed=0), dict(n=1, replicates=0, seed=0),
                dict(n=1, replicates=1, seed=-1), dict(n=1, replicates=1, seed=0, tail_tolerance=2.0)):
        with pytest.raises(ValueError):
            SimConfig(**bad)


def test_interval_coverage_over_seeds():
    p = np.array([0.5, 0.3, 0.3, 0.1])
    n = 12
    exact = exact_delta_n(p, n)
    covered = 0
    trials = 300
    for s in range(trials):
        est = simulate_delta(Finite(p), SimConfig(n, 300, 10_000 + s))
        covered += abs(est.mean - exact) <= est.ci_halfwidth
    assert covered / trials >= 0.95 - 3 * math.sqrt(0.05 * 0.95 / trials)


def test_interval_shrinks_with_replicates():
    p = Finite(PowerLaw(1).prefix(50))
    w = [simulate_delta(p, SimConfig(100, R, 1)).ci_halfwidth for R in (100, 1000, 10000)]
    assert w[0] > w[1] > w[2] > 0
