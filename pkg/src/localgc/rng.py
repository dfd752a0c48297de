"""Counter-based uniforms keyed by (seed, replicate, coordinate).

Philox4x32-10 (Salmon et al., SC'11) evaluated elementwise with numpy, so a
uniform for any key can be produced in isolation.  The Monte Carlo layers use
this to make results independent of how replicates are split over workers:
the variate for replicate ``r`` and coordinate ``j`` is the same no matter
which chunk computes it.

Counter layout (four 32-bit words)::

    w0 = j & 0xffffffff
    w1 = (j >> 32) & 0xffff | tag << 16
    w2 = r
    w3 = aux

The key is the 64-bit seed split into two words.
"""

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# Stream tags; keep distinct per consumer.
TAG_HEAD = 0
TAG_BLOCK = 1
TAG_SAMPLE_A = 2
TAG_SAMPLE_B = 3
TAG_RADEMACHER = 4
TAG_CASES = 5


def philox4x32(c0, c1, c2, c3, k0, k1, rounds=10):
    """Philox4x32 block function on broadcastable uint32 arrays.

    Returns four uint32 arrays.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint32) for c in (c0, c1, c2, c3))
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    c0, c1, c2, c3 = (c.astype(np.uint32) for c in (c0, c1, c2, c3))
    k0 = np.uint32(k0)
    k1 = np.uint32(k1)
    with np.errstate(over="ignore"):
        for i in range(rounds):
            if i:
                k0 = np.uint32(k0 + _W0)
                k1 = np.uint32(k1 + _W1)
            p0 = c0.astype(np.uint64) * _M0
            p1 = c2.astype(np.uint64) * _M1
            hi0 = (p0 >> _SHIFT32).astype(np.uint32)
            lo0 = (p0 & _MASK32).astype(np.uint32)
            hi1 = (p1 >> _SHIFT32).astype(np.uint32)
            lo1 = (p1 & _MASK32).astype(np.uint32)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _split_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed, tag, replicate, coordinate, aux=0):
    """Uniform doubles in [0, 1) for broadcast (replicate, coordinate, aux) keys.

    Each double uses 53 random bits.  ``coordinate`` may be up to 2**48.
    """
    k0, k1 = _split_seed(seed)
    j = np.asarray(coordinate, dtype=np.uint64)
    r = np.asarray(replicate, dtype=np.uint64)
    a = np.asarray(aux, dtype=np.uint64)
    w0 = (j & _MASK32).astype(np.uint32)
    w1 = (((j >> _SHIFT32) & np.uint64(0xFFFF)) | (np.uint64(tag) << np.uint64(16))).astype(np.uint32)
    w2 = (r & _MASK32).astype(np.uint32)
    w3 = (a & _MASK32).astype(np.uint32)
    x0, x1, _, _ = philox4x32(w0, w1, w2, w3, k0, k1)
    hi = (x0 >> np.uint32(5)).astype(np.float64)
    lo = (x1 >> np.uint32(6)).astype(np.float64)
    return (hi * 67108864.0 + lo) / 9007199254740992.0


@njit(cache=True, nogil=True)
def _grid_kernel(k0, k1, tag, reps, coords, aux, out):
    m32 = np.uint64(0xFFFFFFFF)
    for a in range(reps.shape[0]):
        r = np.uint64(reps[a]) & m32
        for b in range(coords.shape[0]):
            j = np.uint64(coords[b])
            c0 = j & m32
            c1 = ((j >> np.uint64(32)) & np.uint64(0xFFFF)) | (np.uint64(tag) << np.uint64(16))
            c2 = r
            c3 = np.uint64(aux) & m32
            key0 = np.uint64(k0)
            key1 = np.uint64(k1)
            for i in range(10):
                if i:
                    key0 = (key0 + np.uint64(0x9E3779B9)) & m32
                    key1 = (key1 + np.uint64(0xBB67AE85)) & m32
                p0 = c0 * np.uint64(0xD2511F53)
                p1 = c2 * np.uint64(0xCD9E8D57)
                n0 = (p1 >> np.uint64(32)) ^ c1 ^ key0
                n2 = (p0 >> np.uint64(32)) ^ c3 ^ key1
                c1 = p1 & m32
                c3 = p0 & m32
                c0 = n0
                c2 = n2
            hi = float(c0 >> np.uint64(5))
            lo = float(c1 >> np.uint64(6))
            out[a, b] = (hi * 67108864.0 + lo) / 9007199254740992.0


def replicate_coordinate_uniforms(seed, tag, replicates, coordinates, aux=0):
    """Uniform matrix of shape (len(replicates), len(coordinates)).

    Compiled path; equal bit for bit to ``uniforms`` on the same keys.
    """
    k0, k1 = _split_seed(seed)
    reps = np.ascontiguousarray(replicates, dtype=np.uint64).ravel()
    cols = np.ascontiguousarray(coordinates, dtype=np.uint64).ravel()
    out = np.empty((reps.size, cols.size))
    _grid_kernel(k0, k1, int(tag), reps, cols, int(aux), out)
    return out
