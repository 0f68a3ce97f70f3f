# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t _SEED_TAG = 0x6A09E667F3BCC909ULL
cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _TWO_M53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline Py_ssize_t _bisect_right(const double[::1] a, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline Py_ssize_t _bisect_left(const double[::1] a, double x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


def uniforms(seed, counters, stream):
    cdef const uint64_t[::1] ctr = np.ascontiguousarray(counters, dtype=np.uint64)
    cdef Py_ssize_t i, n = ctr.shape[0]
    cdef uint64_t key = _mix((<uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)) ^ _SEED_TAG)
    cdef uint64_t step = ((<uint64_t>(int(stream) & 0xFFFFFFFFFFFFFFFF)) + 1) * _GOLDEN
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef uint64_t h
    with nogil:
        for i in range(n):
            h = _mix(key ^ ctr[i])
            h = _mix(h + step)
            o[i] = <double>(h >> 11) * _TWO_M53
    return out


def sample_pieces(cdf, lo, width, u1, u2):
    cdef const double[::1] c = np.ascontiguousarray(cdf, dtype=np.float64)
    cdef const double[::1] l = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(width, dtype=np.float64)
    cdef const double[::1] a = np.ascontiguousarray(u1, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(u2, dtype=np.float64)
    cdef Py_ssize_t i, k, n = a.shape[0], last = c.shape[0] - 1
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            k = _bisect_right(c, a[i])
            if k > last:
                k = last
            o[i] = l[k] + b[i] * w[k]
    return out


def shifted_score(left, right, double zero_lo, double zero_hi, int64_t c, ells):
    cdef const double[::1] L = np.ascontiguousarray(left, dtype=np.float64)
    cdef const double[::1] R = np.ascontiguousarray(right, dtype=np.float64)
    arr = np.asarray(ells, dtype=np.float64)
    shape = arr.shape
    cdef const double[::1] e = np.ascontiguousarray(arr.ravel())
    cdef Py_ssize_t i, cnt, m = e.shape[0], n = L.shape[0]
    out = np.empty(m, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef double x
    with nogil:
        for i in range(m):
            x = e[i]
            if x < zero_lo:
                o[i] = c - _bisect_right(L, x)
            elif x > zero_hi:
                cnt = _bisect_left(R, x)
                o[i] = c if cnt >= n else cnt + 1 - c
            else:
                o[i] = 0
    return out.reshape(shape)
