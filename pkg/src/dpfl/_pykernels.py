"""Pure-numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` that must return
bit-identical results; ``tests/test_kernels.py`` enforces this.
"""
import numpy as np

_M64 = (1 << 64) - 1
_SEED_TAG = np.uint64(0x6A09E667F3BCC909)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0 ** -53


def _mix(z):
    # splitmix64 finalizer; bijective on uint64
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


def uniforms(seed, counters, stream):
    """Counter-based uniforms in [0, 1), one per entry of ``counters``."""
    counters = np.ascontiguousarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = _mix(np.uint64(int(seed) & _M64) ^ _SEED_TAG)
        h = _mix(key ^ counters)
        h = _mix(h + (np.uint64(int(stream) & _M64) + np.uint64(1)) * _GOLDEN)
    return (h >> np.uint64(11)).astype(np.float64) * _TWO_M53


def sample_pieces(cdf, lo, width, u1, u2):
    """Two-stage draw: piece by inverse CDF on ``u1``, then uniform within it."""
    cdf = np.asarray(cdf, dtype=np.float64)
    idx = np.searchsorted(cdf, u1, side="right")
    np.minimum(idx, cdf.size - 1, out=idx)
    return lo[idx] + u2 * width[idx]


def shifted_score(left, right, zero_lo, zero_hi, c, ells):
    """Widened percentile loss at each point of ``ells``.

    ``left``/``right`` are the sorted agent locations shifted by -w and +w;
    ``[zero_lo, zero_hi]`` is the zero band around the median and ``c`` the
    1-based median rank.
    """
    ells = np.asarray(ells, dtype=np.float64)
    n = left.size
    out = np.zeros(ells.shape, dtype=np.int64)
    lmask = ells < zero_lo
    rmask = ells > zero_hi
    out[lmask] = c - np.searchsorted(left, ells[lmask], side="right")
    cnt = np.searchsorted(right, ells[rmask], side="left")
    out[rmask] = np.where(cnt >= n, c, cnt + 1 - c)
    return out
