import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from localgc.estimator import (Sample, draw_sample, empirical_bound, empirical_rademacher,
                               load_dense_csv, load_sparse, orientation, rademacher_exhaustive,
                               reoriented_mean, save_dense_csv, save_sparse, split_sample)
from localgc.rng import TAG_SAMPLE_B
from localgc.seq import PowerLaw


def binary(n, d):
    return arrays(np.uint8, (n, d), elements=st.integers(0, 1))


def test_orientation_examples():
    assert np.array_equal(orientation(Sample(np.zeros((4, 3)))), [0, 0, 0])
    x = np.array([[1, 1, 1], [1, 1, 0], [1, 0, 0]])
    assert np.array_equal(orientation(Sample(x)), [1, 1, 0])
    assert np.array_equal(orientation(Sample(np.array([[1], [0]]))), [0])


def test_reoriented_mean_examples():
    x = np.array([[1, 0]] * 9 + [[0, 1]])
    s = Sample(x)
    assert np.allclose(reoriented_mean(s, [0, 0]), [0.9, 0.1])
    assert np.allclose(reoriented_mean(s, [1, 0]), [0.1, 0.1])
    assert np.array_equal(reoriented_mean(Sample(np.ones((3, 4))), np.ones(4)), np.zeros(4))
    with pytest.raises(ValueError):
        reoriented_mean(s, [1])


def test_bound_examples():
    z = Sample(np.zeros((100, 7)))
    r = empirical_bound(z, z, 0.05)
    assert r.s_value == 0.0
    assert r.bound == pytest.approx(math.sqrt(8 * math.log(20) / 100))
    assert r.bound == pytest.approx(0.4896, abs=1e-4)
    s1 = draw_sample(PowerLaw(1).prefix(20), 50, 1)
    s2 = draw_sample(PowerLaw(1).prefix(20), 50, 1, tag=TAG_SAMPLE_B)
    r = empirical_bound(s1, s2, 1 - 1e-16)
    assert r.bound == pytest.approx(16 * math.sqrt(r.s_value / 50), rel=1e-6)
    for bad in (0.0, 1.0):
        with pytest.raises(ValueError):
            empirical_bound(s1, s2, bad)
    with pytest.raises(ValueError):
        empirical_bound(s1, Sample(np.zeros((50, 3))), 0.1)


def test_bound_report_invariant_and_json():
    s1 = draw_sample(PowerLaw(0.5).prefix(30), 40, 3)
    s2 = draw_sample(PowerLaw(0.5).prefix(30), 40, 3, tag=TAG_SAMPLE_B)
    r = empirical_bound(s1, s2, 0.1)
    assert np.all(np.diff(r.tilde_p_sorted) <= 0)
    lg = np.log(np.arange(2, 32))
    assert r.s_value == pytest.approx(np.max(r.tilde_p_sorted * lg))
    assert r.bound == 16 * math.sqrt(r.s_value / 40) + math.sqrt(8 * math.log(10) / 40)
    rec = json.loads(json.dumps(r.to_dict()))
    assert rec["bound"] == r.bound and len(rec["a"]) == 30


@settings(max_examples=60, deadline=None)
@given(binary(9, 6), binary(9, 6), st.permutations(range(6)))
def test_bound_column_permutation_invariant(x1, x2, perm):
    a = empirical_bound(Sample(x1), Sample(x2), 0.1)
    b = empirical_bound(Sample(x1[:, perm]), Sample(x2[:, perm]), 0.1)
    assert a.bound == b.bound and a.s_value == b.s_value


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10).flatmap(lambda n: st.tuples(binary(n, 5), binary(n, 5))))
def test_joint_bit_flip_leaves_tilde_p(pair):
    x1, x2 = pair
    n = x1.shape[0]
    a = orientation(Sample(x2))
    af = orientation(Sample(1 - x2))
    p = reoriented_mean(Sample(x1), a)
    pf = reoriented_mean(Sample(1 - x1), af)
    untied = 2 * x2.sum(axis=0) != n
    assert np.allclose(p[untied], pf[untied], rtol=0, atol=1e-15)
    assert np.all(a[untied] != af[untied])


def test_bound_monotone_in_s_value():
    # larger reoriented means in the head raise s_value and the bound
    base = np.zeros((20, 4), dtype=np.uint8)
    prev = -1.0
    for k in range(0, 11):
        x = base.copy()
        x[:k, 0] = 1
        r = empirical_bound(Sample(x), Sample(base), 0.1)
        assert r.bound >= prev
        prev = r.bound


def test_bound_monotone_in_delta_through_api():
    s1 = draw_sample(PowerLaw(1).prefix(10), 30, 5)
    s2 = draw_sample(PowerLaw(1).prefix(10), 30, 5, tag=TAG_SAMPLE_B)
    b = [empirical_bound(s1, s2, d).bound for d in (0.5, 0.1, 0.01, 1e-6)]
    assert all(x < y for x, y in zip(b, b[1:]))


def test_custom_orientation_accepted():
    s1 = draw_sample([0.4, 0.3], 20, 2)
    r0 = empirical_bound(s1, s1, 0.1, a=np.array([0, 0]))
    r1 = empirical_bound(s1, s1, 0.1, a=np.array([1, 1]))
    assert np.array_equal(r0.a, [0, 0]) and np.array_equal(r1.a, [1, 1])
    assert r1.s_value >= r0.s_value


def test_rademacher_examples():
    z = Sample(np.zeros((5, 3)))
    for R in (1, 10, 100):
        assert empirical_rademacher(z, np.zeros(3), R, 0) == 0.0
    assert empirical_rademacher(Sample(np.array([[1]])), [0], 50, 0) == 1.0


def test_rademacher_matches_exhaustive():
    rng = np.random.default_rng(4)
    x = Sample(rng.integers(0, 2, (10, 3)))
    a = np.array([0, 1, 0])
    exact = rademacher_exhaustive(x, a)
    R = 20000
    est = empirical_rademacher(x, a, R, 7)
    assert abs(est - exact) <= 4 * math.sqrt(0.25 / R)
    assert empirical_rademacher(x, a, R, 7) == est


def test_symmetrization_bound_statistically():
    p = PowerLaw(1).prefix(40)
    n = 60
    dev, rad = [], []
    for r in range(300):
        s = draw_sample(p, n, 21, pair=r)
        dev.append(np.max(np.abs(s.data.mean(axis=0) - p)))
        rad.append(empirical_rademacher(s, np.zeros(p.size), 20, 1000 + r))
    dev, rad = np.array(dev), np.array(rad)
    slack = 3 * math.sqrt(dev.var() / dev.size + 4 * rad.var() / rad.size)
    assert dev.mean() <= 2 * rad.mean() + slack


def test_split_sample():
    x = np.arange(12).reshape(6, 2) % 2
    a, b = split_sample(Sample(x))
    assert np.array_equal(a.data, x[:3]) and np.array_equal(b.data, x[3:])
    with pytest.raises(ValueError):
        split_sample(Sample(x[:5]))


def test_sample_validation():
    with pytest.raises(ValueError):
        Sample(np.array([[0, 2]]))
    with pytest.raises(ValueError):
        Sample(np.zeros((0, 3)))
    s = Sample(np.ones((2, 2)))
    assert s.n == 2 and s.d == 2 and not s.data.flags.writeable


def test_draw_sample_marginals_and_keys():
    p = np.array([0.5, 0.2, 0.01])
    s = draw_sample(p, 20000, 9)
    assert np.all(np.abs(s.data.mean(axis=0) - p) <= 4 * np.sqrt(p * (1 - p) / 20000))
    assert np.array_equal(draw_sample(p, 50, 9).data, s.data[:50])
    assert not np.array_equal(draw_sample(p, 50, 9, pair=1).data, s.data[:50])


def test_file_roundtrips(tmp_path):
    s = draw_sample(PowerLaw(1).prefix(7), 13, 4)
    save_dense_csv(s, tmp_path / "s.csv")
    assert np.array_equal(load_dense_csv(tmp_path / "s.csv").data, s.data)
    save_sparse(s, tmp_path / "s.txt")
    assert np.array_equal(load_sparse(tmp_path / "s.txt").data, s.data)
    (tmp_path / "h.txt").write_text("0 2\n3,1\n\n")
    t = load_sparse(tmp_path / "h.txt")
    assert t.data.shape == (4, 3) and t.data.sum() == 2
    (tmp_path / "bad.txt").write_text("0 1 2\n")
    with pytest.raises(ValueError, match="bad.txt:1"):
        load_sparse(tmp_path / "bad.txt")
