"""Decreasing mean sequences and the functionals S, T, H, sigma^2 and (B).

A mean sequence ``p`` is indexed from ``j = 1`` and takes values in (0, 1/2].
Each family carries closed-form tail information so that suprema and sums
over the infinite tail can be certified from a finite prefix.

>>> p = PowerLaw(T=2)
>>> float(p(3))
0.5
>>> round(s_functional(p, 100).value, 4)
0.7355
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from ._binomial import compensated_sum

__all__ = [
    "MeanSequence", "PowerLaw", "Geometric", "Finite", "LogInverse", "Custom",
    "FunctionalValue", "evaluate", "s_functional", "t_functional", "entropy",
    "condition_b_partial", "sigma2_proxy", "sort_decreasing", "from_dict",
    "from_json",
]


class TailSup(NamedTuple):
    """Upper bound on a supremum over ``j > J``.

    ``exact`` means ``bound`` *is* the tail supremum; ``argmax`` is the index
    attaining it, or None when it is only approached.
    """
    bound: float
    exact: bool = False
    argmax: Optional[int] = None
    divergent: bool = False


@dataclass(frozen=True)
class FunctionalValue:
    value: float
    argmax_index: Optional[int]
    prefix_J: int
    tail_certified: bool
    divergent: bool = False


def _indices(j):
    j = np.asarray(j)
    if np.any(j < 1):
        raise ValueError("sequence indices start at 1")
    return j.astype(np.float64)


class MeanSequence:
    """Base class.  Subclasses implement ``_values`` and the tail hooks."""

    family: str = ""

    @property
    def length(self) -> Optional[int]:
        """Number of coordinates, or None for an infinite sequence."""
        return None

    def __call__(self, j):
        out = self._values(_indices(j))
        return out[()] if out.ndim == 0 else out

    def _values(self, j: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prefix(self, J: int) -> np.ndarray:
        """Values ``p(1), ..., p(min(J, length))``."""
        if J < 0:
            raise ValueError("prefix length must be nonnegative")
        if self.length is not None:
            J = min(J, self.length)
        return self._values(np.arange(1, J + 1, dtype=np.float64))

    def check_monotone(self, J: int) -> None:
        v = self.prefix(J)
        if v.size and (np.any(v <= 0) or np.any(v > 0.5)):
            raise ValueError(f"{self.family}: values outside (0, 1/2] in prefix {J}")
        if np.any(np.diff(v) > 0):
            raise ValueError(f"{self.family}: prefix {J} is not nonincreasing")

    # -- tail information ----------------------------------------------------
    def tail_power_sum(self, J: int, k: float = 1) -> tuple[float, float]:
        """Bracket ``(lo, hi)`` on ``sum_{j>J} p(j)**k``."""
        return 0.0, math.inf

    def tail_sum_bound(self, J: int) -> float:
        return self.tail_power_sum(J, 1)[1]

    def tail_sup_bound(self, J: int) -> float:
        if self.length is not None and J >= self.length:
            return 0.0
        return float(self(J + 1))

    def _s_tail(self, J: int) -> TailSup:
        return TailSup(math.inf)

    def _t_tail(self, J: int) -> TailSup:
        return TailSup(math.inf)

    def _entropy_tail(self, J: int) -> float:
        return math.inf

    def _t_terms(self, v: np.ndarray, j: np.ndarray) -> np.ndarray:
        return np.log(j + 1.0) / np.log(1.0 / v)

    def truncated(self, J: int) -> "Finite":
        return Finite(self.prefix(J))

    def to_dict(self) -> dict:
        raise TypeError(f"{type(self).__name__} is not serializable")

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _power_tail_integrals(start: int, alpha: float) -> tuple[float, float]:
    # sum_{j > start} (j+1)^-alpha  lies in  [int_{start+2}^inf, int_{start+1}^inf]
    if alpha <= 1.0:
        return math.inf, math.inf
    lo = (start + 2.0) ** (1.0 - alpha) / (alpha - 1.0)
    hi = (start + 1.0) ** (1.0 - alpha) / (alpha - 1.0)
    return lo, hi


@dataclass(frozen=True)
class PowerLaw(MeanSequence):
    """``p(j) = min(1/2, (j+1)**(-1/T))``.

    The cap only engages for ``T > 1`` at indices ``j + 1 < 2**T``; it keeps the
    sequence inside (0, 1/2] without changing T(p).
    """

    T: float
    family = "power_law"

    def __post_init__(self):
        if not self.T > 0 or not math.isfinite(self.T):
            raise ValueError("PowerLaw needs a finite T > 0")

    @property
    def first_uncapped(self) -> int:
        """Smallest j with ``(j+1)**(-1/T) <= 1/2``."""
        return max(1, math.ceil(2.0 ** self.T) - 1)

    def _values(self, j):
        return np.minimum(0.5, np.power(j + 1.0, -1.0 / self.T))

    def tail_power_sum(self, J, k=1):
        jc = self.first_uncapped
        explicit = 0.0
        start = J
        if J + 1 < jc:
            idx = np.arange(J + 1, jc, dtype=np.float64)
            explicit = math.fsum(self._values(idx) ** k)
            start = jc - 1
        lo, hi = _power_tail_integrals(start, k / self.T)
        return explicit + lo, explicit + hi

    def _s_tail(self, J):
        x = J + 2.0
        if x >= math.exp(self.T):
            # x^{-1/T} log x decreases beyond e^T
            return TailSup(float(self(J + 1)) * math.log(x), True, J + 1)
        return TailSup(self.T / math.e)

    def _t_terms(self, v, j):
        # exactly T on uncapped indices; evaluating the ratio in floating point
        # would return T plus rounding
        capped = j + 1.0 < 2.0 ** self.T
        return np.where(capped, np.log(j + 1.0) / math.log(2.0), self.T)

    def _t_tail(self, J):
        # log(j+1)/log(1/p(j)) == T on every uncapped index
        return TailSup(float(self.T), True, max(J + 1, self.first_uncapped))

    def _entropy_tail(self, J):
        alpha = 1.0 / self.T
        if alpha <= 1.0:
            return math.inf
        jc = self.first_uncapped
        explicit = 0.0
        start = J
        if J + 1 < jc:
            explicit = _binary_entropy(self._values(np.arange(J + 1, jc, dtype=np.float64)))
            start = jc - 1
        # h(p) <= p (1 + log 1/p) = x^-a (1 + a log x), decreasing in x = j+1
        a = start + 1.0
        e1 = alpha - 1.0
        tail = a ** (-e1) * (1.0 / e1 + alpha * (math.log(a) / e1 + 1.0 / e1 ** 2))
        return explicit + tail

    def to_dict(self):
        return {"family": self.family, "params": {"T": self.T}}


@dataclass(frozen=True)
class Geometric(MeanSequence):
    """``p(j) = c * rho**(j-1)``."""

    c: float
    rho: float
    family = "geometric"

    def __post_init__(self):
        if not 0 < self.c <= 0.5:
            raise ValueError("Geometric needs c in (0, 1/2]")
        if not 0 < self.rho < 1:
            raise ValueError("Geometric needs rho in (0, 1)")

    def _values(self, j):
        return self.c * np.power(self.rho, j - 1.0)

    def tail_power_sum(self, J, k=1):
        s = self.c ** k * self.rho ** (k * J) / (1.0 - self.rho ** k)
        return s, s

    def _s_tail(self, J):
        lr = math.log(self.rho)

        def slope(x):
            return lr + 1.0 / ((x + 1.0) * math.log(x + 1.0))

        x0 = J + 1.0
        if slope(x0) <= 0:
            return TailSup(float(self(J + 1)) * math.log(J + 2.0), True, J + 1)
        hi = x0
        while slope(hi) > 0:
            hi *= 2.0
        xs = brentq(slope, x0, hi)
        return TailSup(self.c * self.rho ** (xs - 1.0) * math.log(xs + 1.0))

    def _t_tail(self, J):
        A = -math.log(self.c)
        B = -math.log(self.rho)

        def h(x):
            return (A + B * (x - 1.0)) / (x + 1.0) - B * math.log(x + 1.0)

        def ratio(x):
            return math.log(x + 1.0) / (A + B * (x - 1.0))

        x0 = J + 1.0
        if h(x0) <= 0:
            return TailSup(ratio(x0), True, J + 1)
        hi = x0
        while h(hi) > 0:
            hi *= 2.0
        return TailSup(ratio(brentq(h, x0, hi)))

    def _entropy_tail(self, J):
        c, r = self.c, self.rho
        A = -math.log(c)
        B = -math.log(r)
        rj = r ** J
        return c * ((1.0 + A) * rj / (1.0 - r) + B * rj * (J * (1.0 - r) + r) / (1.0 - r) ** 2)

    def to_dict(self):
        return {"family": self.family, "params": {"c": self.c, "rho": self.rho}}


class Finite(MeanSequence):
    """A finite nonincreasing vector.  Entries in (1/2, 1) are reflected."""

    family = "finite"

    def __init__(self, values: Sequence[float]):
        v = np.array(values, dtype=np.float64).ravel()
        if v.size == 0:
            raise ValueError("Finite sequence needs at least one value")
        if np.any(~np.isfinite(v)) or np.any(v <= 0) or np.any(v >= 1):
            raise ValueError("Finite values must lie in (0, 1)")
        v = np.where(v > 0.5, 1.0 - v, v)
        if np.any(np.diff(v) > 0):
            raise ValueError("Finite values must be nonincreasing (use sort_decreasing)")
        v.setflags(write=False)
        self.values = v

    def __repr__(self):
        return f"Finite({self.values.tolist()!r})"

    def __eq__(self, other):
        return isinstance(other, Finite) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    @property
    def length(self):
        return self.values.size

    def _values(self, j):
        idx = j.astype(np.int64) - 1
        if np.any(idx >= self.values.size):
            raise IndexError("index beyond the end of a finite sequence")
        return self.values[idx]

    def tail_power_sum(self, J, k=1):
        s = math.fsum(self.values[J:] ** k) if J < self.length else 0.0
        return s, s

    def _tail_max(self, J, f):
        if J >= self.length:
            return TailSup(0.0, True, None)
        vals = f(self.values[J:], np.arange(J + 1, self.length + 1, dtype=np.float64))
        i = int(np.argmax(vals))
        return TailSup(float(vals[i]), True, J + 1 + i)

    def _s_tail(self, J):
        return self._tail_max(J, lambda v, j: v * np.log(j + 1.0))

    def _t_tail(self, J):
        return self._tail_max(J, lambda v, j: np.log(j + 1.0) / np.log(1.0 / v))

    def _entropy_tail(self, J):
        return _binary_entropy(self.values[J:]) if J < self.length else 0.0

    def truncated(self, J):
        return Finite(self.values[:J])

    def to_dict(self):
        return {"family": self.family, "params": {"values": self.values.tolist()}}


@dataclass(frozen=True)
class LogInverse(MeanSequence):
    """``p(j) = min(1/2, 1/log(j + offset))``; T(p) is infinite."""

    offset: int = 2
    family = "log_inverse"

    def __post_init__(self):
        if int(self.offset) != self.offset or self.offset < 2:
            raise ValueError("LogInverse needs an integer offset >= 2")

    def _values(self, j):
        return np.minimum(0.5, 1.0 / np.log(j + self.offset))

    def tail_power_sum(self, J, k=1):
        return math.inf, math.inf

    def _s_tail(self, J):
        # p(j) log(j+1) increases to 1 without attaining it
        return TailSup(1.0, True, None)

    def _t_tail(self, J):
        return TailSup(math.inf, False, None, divergent=True)

    def to_dict(self):
        return {"family": self.family, "params": {"offset": int(self.offset)}}


class Custom(MeanSequence):
    """User-supplied sequence.

    ``fn`` maps a float array of indices to values.  Without the optional
    tail hooks every functional reports an uncertified prefix and the
    simulator refuses infinite truncation.
    """

    family = "custom"

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], *,
                 length: Optional[int] = None,
                 tail_power_sum: Optional[Callable[[int, float], tuple]] = None,
                 s_tail: Optional[Callable[[int], float]] = None,
                 t_tail: Optional[Callable[[int], float]] = None,
                 name: str = "custom"):
        self.fn = fn
        self._length = length
        self._tail_power_sum = tail_power_sum
        self._s_tail_fn = s_tail
        self._t_tail_fn = t_tail
        self.name = name

    @property
    def length(self):
        return self._length

    def _values(self, j):
        return np.asarray(self.fn(j), dtype=np.float64)

    def tail_power_sum(self, J, k=1):
        if self._tail_power_sum is None:
            return 0.0, math.inf
        lo, hi = self._tail_power_sum(J, k)
        return float(lo), float(hi)

    def _s_tail(self, J):
        return TailSup(math.inf) if self._s_tail_fn is None else TailSup(float(self._s_tail_fn(J)))

    def _t_tail(self, J):
        return TailSup(math.inf) if self._t_tail_fn is None else TailSup(float(self._t_tail_fn(J)))


_FAMILIES = {
    "power_law": lambda q: PowerLaw(T=float(q["T"])),
    "geometric": lambda q: Geometric(c=float(q["c"]), rho=float(q["rho"])),
    "finite": lambda q: Finite(q["values"]),
    "log_inverse": lambda q: LogInverse(offset=int(q.get("offset", 2))),
}


def from_dict(d: dict) -> MeanSequence:
    """Inverse of ``MeanSequence.to_dict``: ``{"family": ..., "params": {...}}``."""
    try:
        make = _FAMILIES[d["family"]]
    except KeyError:
        raise ValueError(f"unknown family descriptor: {d!r}") from None
    return make(d.get("params", {}))


def from_json(s: str) -> MeanSequence:
    return from_dict(json.loads(s))


def evaluate(p: MeanSequence, j):
    return p(j)


def _binary_entropy(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    h = -xlogy(v, v) - xlogy(1.0 - v, 1.0 - v)
    return float(compensated_sum(h))


def _functional(p, J, terms, tail: TailSup) -> FunctionalValue:
    if J < 1:
        raise ValueError("prefix length J must be >= 1")
    vals = terms(p.prefix(J), np.arange(1, (J if p.length is None else min(J, p.length)) + 1))
    J_used = vals.size
    i = int(np.argmax(vals))
    best = float(vals[i])
    if tail.bound <= best:
        return FunctionalValue(best, i + 1, J_used, True)
    if tail.exact:
        return FunctionalValue(tail.bound, tail.argmax, J_used, True)
    if tail.divergent:
        return FunctionalValue(math.inf, None, J_used, False, divergent=True)
    return FunctionalValue(best, i + 1, J_used, False)


def s_functional(p: MeanSequence, J: int) -> FunctionalValue:
    """``S(p) = sup_j p(j) log(j+1)`` from a prefix of length J plus tail info."""
    return _functional(p, J, lambda v, j: v * np.log(j + 1.0), p._s_tail(J))


def t_functional(p: MeanSequence, J: int) -> FunctionalValue:
    """``T(p) = sup_j log(j+1) / log(1/p(j))``."""
    return _functional(p, J, p._t_terms, p._t_tail(J))


def entropy(p: MeanSequence, J: int) -> tuple[float, float]:
    """Partial product-measure entropy over ``j <= J`` and an upper bound on the rest."""
    return _binary_entropy(p.prefix(J)), float(p._entropy_tail(J))


def condition_b_partial(p, k: int, J: int) -> tuple[float, tuple[float, float]]:
    """Partial sum of ``p(j)**k`` over ``j <= J`` and a bracket on the tail.

    ``p`` may also be a plain vector, in any order.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not isinstance(p, MeanSequence):
        v = np.asarray(p, dtype=np.float64)
        head = v[:J] ** k
        rest = math.fsum(v[J:] ** k)
        return math.fsum(head), (rest, rest)
    return math.fsum(p.prefix(J) ** k), p.tail_power_sum(J, k)


def sigma2_proxy(q: float) -> float:
    """Optimal sub-Gaussian variance proxy of Bernoulli(q).

    Near q = 1/2 it is evaluated as ``x / (4 artanh x)`` with ``x = 1 - 2q``,
    which removes the 0/0 (limit 1/4); away from 1/2 the log form with
    ``log1p`` keeps full precision for tiny q.
    """
    q = float(q)
    if not 0.0 < q < 1.0:
        raise ValueError("sigma2_proxy needs q in (0, 1)")
    q = min(q, 1.0 - q)
    x = 1.0 - 2.0 * q
    if x == 0.0:
        return 0.25
    if x < 0.5:
        return x / (4.0 * math.atanh(x))
    return x / (2.0 * (math.log1p(-q) - math.log(q)))


def sort_decreasing(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    return v[np.argsort(-v, kind="stable")]
