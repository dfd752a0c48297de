"""VC dimension of the coordinate projections ``f_j(x) = x(j)`` on {0,1}^d.

Points are rows of a binary matrix and functions are its columns, so k
points are shattered exactly when the columns, read as k-bit labelings,
cover all of {0,1}^k.  Hence vc = floor(log2 d).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

__all__ = ["BinaryMatrix", "shattered_set", "verify_shatter", "vc_bruteforce",
           "vc_naive", "to_rows"]


@dataclass(frozen=True)
class BinaryMatrix:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise ValueError("BinaryMatrix needs a 2-d array")
        if b.size and not np.all((b == 0) | (b == 1)):
            raise ValueError("entries must be 0 or 1")
        b = b.astype(np.uint8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    @property
    def rows(self) -> int:
        return self.bits.shape[0]

    @property
    def cols(self) -> int:
        return self.bits.shape[1]

    def __str__(self):
        return "\n".join(to_rows(self))


def to_rows(m: BinaryMatrix) -> list[str]:
    return ["".join(str(int(b)) for b in row) for row in m.bits]


def shattered_set(k: int) -> BinaryMatrix:
    """k x 2^k matrix whose column i is i-1 in binary, most significant bit in row 1."""
    if not 1 <= k <= 20:
        raise ValueError("k must lie in 1..20")
    cols = np.arange(2 ** k)
    shifts = np.arange(k - 1, -1, -1)
    return BinaryMatrix((cols[None, :] >> shifts[:, None]) & 1)


def verify_shatter(points: BinaryMatrix) -> bool:
    """True iff the column projections realize all 2^k labelings of the k rows."""
    k = points.rows
    if k == 0:
        return True
    weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
    codes = weights @ points.bits.astype(np.int64)
    return np.unique(codes).size == 2 ** k


def _splits(state):
    # every way to split each part c >= 2 into two positive parts
    options = [[(a, c - a) for a in range(1, c)] for c in state]
    for choice in itertools.product(*options):
        yield tuple(x for pair in choice for x in pair)


def vc_bruteforce(d: int) -> int:
    """Largest k such that some k points of {0,1}^d are shattered.

    Search space: a configuration of r points, up to permuting the d columns,
    is the vector of multiplicities of each r-bit column pattern.  Shattered
    configurations of r+1 points restrict to shattered configurations of r
    points, so level r+1 is generated by splitting every part of every level-r
    state into two positive parts.  All states are enumerated; the answer is
    the last nonempty level.
    """
    if not 1 <= d <= 16:
        raise ValueError("d must lie in 1..16")
    level = {(d,)}
    k = 0
    while True:
        nxt = set()
        for state in level:
            nxt.update(_splits(state))
        if not nxt:
            return k
        level = nxt
        k += 1


def vc_naive(d: int) -> int:
    """Try every subset of cube points directly.  Oracle for d <= 5."""
    if not 1 <= d <= 5:
        raise ValueError("naive search limited to d <= 5")
    cube = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.uint8)
    best = 0
    for k in range(1, cube.shape[0] + 1):
        found = any(verify_shatter(BinaryMatrix(cube[list(idx)]))
                    for idx in itertools.combinations(range(cube.shape[0]), k))
        if not found:
            break
        best = k
    return best
