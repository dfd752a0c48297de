"""Fully empirical upper bound on Delta_n from two independent samples.

The second sample votes on an orientation ``a(j) = 1{column sum > n/2}``;
the first sample's column means are reflected where ``a(j) = 1``, sorted in
decreasing order, and fed to the S functional.  With probability at least
``1 - delta``,

    Delta_n <= 16 sqrt(S(p_tilde sorted) / n) + sqrt(8 log(1/delta) / n).

Sample files come in two formats:

* dense CSV: one row per draw, one 0/1 field per coordinate, no header;
* sparse text: one ``row col`` pair (0-based) per line for each entry equal
  to one; an optional first line ``# n d`` fixes the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import TAG_RADEMACHER, TAG_SAMPLE_A, uniforms
from .seq import sort_decreasing

__all__ = ["Sample", "BoundReport", "orientation", "reoriented_mean",
           "empirical_bound", "empirical_rademacher", "rademacher_exhaustive",
           "split_sample", "draw_sample", "load_dense_csv", "load_sparse",
           "save_dense_csv", "save_sparse"]


@dataclass(frozen=True)
class Sample:
    """n x d binary matrix; rows are draws, columns are coordinates."""
    data: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.data)
        if x.ndim != 2:
            raise ValueError("sample must be a 2-d matrix")
        if x.shape[0] < 1:
            raise ValueError("sample needs at least one row")
        if x.size and not np.all((x == 0) | (x == 1)):
            raise ValueError("sample entries must be 0 or 1")
        x = x.astype(np.uint8)
        x.setflags(write=False)
        object.__setattr__(self, "data", x)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class BoundReport:
    delta: float
    s_value: float
    bound: float
    a: np.ndarray
    tilde_p_sorted: np.ndarray

    def to_dict(self) -> dict:
        return {"delta": self.delta, "s_value": self.s_value, "bound": self.bound,
                "a": self.a.tolist(), "tilde_p_sorted": self.tilde_p_sorted.tolist()}


def orientation(sample2: Sample) -> np.ndarray:
    """Majority vote per column; a tie (sum exactly n/2) gives 0."""
    sums = sample2.data.sum(axis=0, dtype=np.int64)
    return (2 * sums > sample2.n).astype(np.uint8)


def reoriented_mean(sample1: Sample, a) -> np.ndarray:
    a = np.asarray(a).ravel()
    if a.size != sample1.d:
        raise ValueError(f"orientation has length {a.size}, sample has {sample1.d} columns")
    p_hat = sample1.data.mean(axis=0, dtype=np.float64)
    return np.where(a == 1, 1.0 - p_hat, p_hat)


def empirical_bound(sample1: Sample, sample2: Sample, delta: float,
                    a: Optional[np.ndarray] = None) -> BoundReport:
    """High-probability bound on Delta_n; ``a`` overrides the majority vote."""
    if sample1.data.shape != sample2.data.shape:
        raise ValueError("samples must have equal shapes")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if a is None:
        a = orientation(sample2)
    a = np.asarray(a, dtype=np.uint8)
    tp = sort_decreasing(reoriented_mean(sample1, a))
    if tp.size:
        s_value = float(np.max(tp * np.log(np.arange(2, tp.size + 2, dtype=np.float64))))
    else:
        s_value = 0.0
    n = sample1.n
    bound = 16.0 * math.sqrt(s_value / n) + math.sqrt(8.0 * math.log(1.0 / delta) / n)
    return BoundReport(float(delta), s_value, bound, a, tp)


def _features(sample: Sample, a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64).ravel()
    x = sample.data.astype(np.float64)
    return x * (1.0 - a) + (1.0 - x) * a


def empirical_rademacher(sample: Sample, a, R: int, seed: int, chunk: int = 1024) -> float:
    """Monte Carlo average of ``sup_j |n^-1 sum_i eps_i f_j(X_i)|`` over R sign vectors."""
    if R < 1:
        raise ValueError("R must be >= 1")
    f = _features(sample, a)
    rows = np.arange(sample.n, dtype=np.uint64)
    vals = []
    for r0 in range(0, R, chunk):
        reps = np.arange(r0, min(r0 + chunk, R), dtype=np.uint64)
        signs = np.where(uniforms(seed, TAG_RADEMACHER, reps[:, None], rows[None, :]) < 0.5, -1.0, 1.0)
        vals.append(np.max(np.abs(signs @ f), axis=1) / sample.n)
    return math.fsum(np.concatenate(vals)) / R


def rademacher_exhaustive(sample: Sample, a) -> float:
    """Exact average over all 2^n sign vectors.  Oracle for n <= 20."""
    n = sample.n
    if n > 20:
        raise ValueError("exhaustive Rademacher average limited to n <= 20")
    f = _features(sample, a)
    codes = np.arange(2 ** n, dtype=np.int64)[:, None]
    signs = np.where((codes >> np.arange(n)) & 1, 1.0, -1.0)
    return math.fsum(np.max(np.abs(signs @ f), axis=1) / n) / 2 ** n


def split_sample(sample: Sample) -> tuple[Sample, Sample]:
    """First half and second half of a sample with an even number of rows."""
    if sample.n % 2:
        raise ValueError("splitting needs an even number of rows")
    h = sample.n // 2
    return Sample(sample.data[:h]), Sample(sample.data[h:])


def draw_sample(pvec, n: int, seed: int, pair: int = 0, tag: int = TAG_SAMPLE_A) -> Sample:
    """n iid draws from the product of Bernoulli(p(j)), keyed by (seed, tag, pair)."""
    p = np.asarray(pvec, dtype=np.float64).ravel()
    cols = np.arange(1, p.size + 1, dtype=np.uint64)[None, :]
    rows = np.arange(n, dtype=np.uint64)[:, None]
    u = uniforms(seed, tag, pair, cols, rows)
    return Sample((u < p[None, :]).astype(np.uint8))


def load_dense_csv(path) -> Sample:
    data = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    return Sample(data)


def save_dense_csv(sample: Sample, path) -> None:
    np.savetxt(path, sample.data, fmt="%d", delimiter=",")


def load_sparse(path, n: Optional[int] = None, d: Optional[int] = None) -> Sample:
    entries = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and n is None and d is None:
                    n, d = int(parts[0]), int(parts[1])
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'row col', got {line!r}")
            entries.append((int(parts[0]), int(parts[1])))
    idx = np.array(entries, dtype=np.int64).reshape(-1, 2)
    if n is None:
        n = int(idx[:, 0].max()) + 1 if idx.size else 1
    if d is None:
        d = int(idx[:, 1].max()) + 1 if idx.size else 0
    data = np.zeros((n, d), dtype=np.uint8)
    data[idx[:, 0], idx[:, 1]] = 1
    return Sample(data)


def save_sparse(sample: Sample, path) -> None:
    rows, cols = np.nonzero(sample.data)
    with open(path, "w") as fh:
        fh.write(f"# {sample.n} {sample.d}\n")
        for r, c in zip(rows, cols):
            fh.write(f"{r} {c}\n")
