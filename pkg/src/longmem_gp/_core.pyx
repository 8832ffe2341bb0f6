# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: regularized incomplete beta and the Philox stream.

Same API as :mod:`longmem_gp._fallback`.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, exp, log, log1p, fabs
from libc.stdint cimport uint64_t

cnp.import_array()

cdef extern from *:
    ctypedef unsigned long long uint128 "unsigned __int128"

cdef double TINY = 1e-300
cdef double EPS = 1e-16
cdef int MAXIT = 2000

cdef uint64_t M0 = 0xD2E7470EE14C6C93ULL
cdef uint64_t M1 = 0xCA5A826395121157ULL
cdef uint64_t W0 = 0x9E3779B97F4A7C15ULL
cdef uint64_t W1 = 0xBB67AE8584CAA73BULL


cdef int _betacf(double x, double p, double q, double *out) noexcept nogil:
    cdef double qab = p + q, qap = p + 1.0, qam = p - 1.0
    cdef double c = 1.0, d, h, aa, delta
    cdef int m, m2
    d = 1.0 - qab * x / qap
    if fabs(d) < TINY:
        d = TINY
    d = 1.0 / d
    h = d
    for m in range(1, MAXIT + 1):
        m2 = 2 * m
        aa = m * (q - m) * x / ((qam + m2) * (p + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        h *= d * c
        aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2))
        d = 1.0 + aa * d
        if fabs(d) < TINY:
            d = TINY
        c = 1.0 + aa / c
        if fabs(c) < TINY:
            c = TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if fabs(delta - 1.0) < EPS:
            out[0] = h
            return 0
    out[0] = h
    return 1


cdef int _pair(double x, double p, double q, double *lo, double *up) noexcept nogil:
    cdef double xs, ps, qs, front, cf, direct
    cdef bint swap
    cdef int bad
    if x <= 0.0:
        lo[0] = 0.0
        up[0] = 1.0
        return 0
    if x >= 1.0:
        lo[0] = 1.0
        up[0] = 0.0
        return 0
    swap = x > p / (p + q)
    if swap:
        xs, ps, qs = 1.0 - x, q, p
    else:
        xs, ps, qs = x, p, q
    front = exp(ps * log(xs) + qs * log1p(-xs)
                - (lgamma(ps) + lgamma(qs) - lgamma(ps + qs))) / ps
    bad = _betacf(xs, ps, qs, &cf)
    direct = front * cf
    if swap:
        lo[0] = 1.0 - direct
        up[0] = direct
    else:
        lo[0] = direct
        up[0] = 1.0 - direct
    return bad


def betainc_pair(x, p, q):
    """Return ``(I_x(p, q), 1 - I_x(p, q))``, both to full relative precision."""
    bx, bp, bq = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                     np.asarray(p, dtype=np.float64),
                                     np.asarray(q, dtype=np.float64))
    shape = bx.shape
    cdef double[::1] xv = np.array(bx, order="C").ravel()
    cdef double[::1] pv = np.array(bp, order="C").ravel()
    cdef double[::1] qv = np.array(bq, order="C").ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    lower = np.empty(n)
    upper = np.empty(n)
    cdef double[::1] lv = lower
    cdef double[::1] uv = upper
    cdef int bad = 0
    with nogil:
        for i in range(n):
            bad |= _pair(xv[i], pv[i], qv[i], &lv[i], &uv[i])
    if bad:
        raise ArithmeticError("incomplete beta continued fraction did not converge")
    return lower.reshape(shape), upper.reshape(shape)


cdef inline void _mulhilo(uint64_t a, uint64_t b, uint64_t *hi, uint64_t *lo) noexcept nogil:
    cdef uint128 prod = (<uint128>a) * b
    hi[0] = <uint64_t>(prod >> 64)
    lo[0] = <uint64_t>prod


cdef void _block(uint64_t k0, uint64_t k1, uint64_t *c) noexcept nogil:
    cdef uint64_t hi0, lo0, hi1, lo1, t0, t1, t2, t3
    cdef int rnd
    for rnd in range(10):
        if rnd:
            k0 += W0
            k1 += W1
        _mulhilo(M0, c[0], &hi0, &lo0)
        _mulhilo(M1, c[2], &hi1, &lo1)
        t0 = hi1 ^ c[1] ^ k0
        t1 = lo1
        t2 = hi0 ^ c[3] ^ k1
        t3 = lo0
        c[0] = t0
        c[1] = t1
        c[2] = t2
        c[3] = t3


def philox4x64(key0, key1, counters):
    """Philox4x64-10 block function over a ``(k, 4)`` uint64 counter array."""
    out = np.array(counters, dtype=np.uint64, copy=True, order="C")
    cdef cnp.uint64_t[:, ::1] cv = out
    cdef uint64_t k0 = <uint64_t>int(key0), k1 = <uint64_t>int(key1)
    cdef Py_ssize_t i
    with nogil:
        for i in range(cv.shape[0]):
            _block(k0, k1, &cv[i, 0])
    return out


def uniform_stream(key0, key1, Py_ssize_t count):
    """First ``count`` doubles in (0, 1) from the stream keyed by (key0, key1)."""
    out = np.empty(count)
    cdef double[::1] ov = out
    cdef uint64_t k0 = <uint64_t>int(key0), k1 = <uint64_t>int(key1)
    cdef uint64_t c[4]
    cdef Py_ssize_t j = 0, w
    cdef double scale = 2.0 ** -53
    with nogil:
        while j < count:
            c[0] = <uint64_t>(j // 4)
            c[1] = 0
            c[2] = 0
            c[3] = 0
            _block(k0, k1, c)
            for w in range(4):
                if j >= count:
                    break
                ov[j] = (<double>(c[w] >> 11) + 0.5) * scale
                j += 1
    return out
