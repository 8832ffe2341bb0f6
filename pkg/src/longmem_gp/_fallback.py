"""Pure numpy implementations of the hot kernels.

Mirrors the API of the compiled ``_core`` extension one for one. Selected at
import time by :mod:`longmem_gp._backend` when the extension is unavailable.
"""
import numpy as np
from scipy.special import gammaln

_TINY = 1e-300
_EPS = 1e-16
_MAXIT = 2000

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_MASK32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)


def _betacf(x, p, q):
    # modified Lentz on the standard continued fraction, vectorized; all
    # lanes iterate together until every lane has converged
    qab = p + q
    qap = p + 1.0
    qam = p - 1.0
    c = np.ones_like(x)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _TINY, _TINY, d)
    d = 1.0 / d
    h = d.copy()
    done = np.zeros(x.shape, dtype=bool)
    for m in range(1, _MAXIT + 1):
        m2 = 2 * m
        aa = m * (q - m) * x / ((qam + m2) * (p + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        h = np.where(done, h, h * d * c)
        aa = -(p + m) * (qab + m) * x / ((p + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _TINY, _TINY, d)
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _TINY, _TINY, c)
        d = 1.0 / d
        delta = d * c
        h = np.where(done, h, h * delta)
        done |= np.abs(delta - 1.0) < _EPS
        if done.all():
            return h, True
    return h, False


def betainc_pair(x, p, q):
    """Return ``(I_x(p, q), 1 - I_x(p, q))``, both to full relative precision.

    Arguments broadcast; ``x`` must lie in [0, 1] and ``p, q > 0``.
    """
    x, p, q = np.broadcast_arrays(np.asarray(x, dtype=float),
                                  np.asarray(p, dtype=float),
                                  np.asarray(q, dtype=float))
    shape = x.shape
    x = x.ravel().copy()
    p = p.ravel()
    q = q.ravel()
    lower = np.zeros_like(x)
    upper = np.ones_like(x)
    at_one = x >= 1.0
    lower[at_one] = 1.0
    upper[at_one] = 0.0
    inner = (x > 0.0) & ~at_one
    if inner.any():
        xi, pi, qi = x[inner], p[inner], q[inner]
        swap = xi > pi / (pi + qi)
        xs = np.where(swap, 1.0 - xi, xi)
        ps = np.where(swap, qi, pi)
        qs = np.where(swap, pi, qi)
        lbeta = gammaln(ps) + gammaln(qs) - gammaln(ps + qs)
        front = np.exp(ps * np.log(xs) + qs * np.log1p(-xs) - lbeta) / ps
        cf, ok = _betacf(xs, ps, qs)
        if not ok:
            raise ArithmeticError("incomplete beta continued fraction did not converge")
        direct = front * cf
        lower[inner] = np.where(swap, 1.0 - direct, direct)
        upper[inner] = np.where(swap, direct, 1.0 - direct)
    return lower.reshape(shape), upper.reshape(shape)


def _mulhilo(a, b):
    # 64x64 -> 128 bit product from 32-bit limbs
    a_lo, a_hi = a & _MASK32, a >> _S32
    b_lo, b_hi = b & _MASK32, b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _MASK32) + (hl & _MASK32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    lo = a * b
    return hi, lo


def philox4x64(key0, key1, counters):
    """Philox4x64-10 block function.

    ``counters`` is a ``(k, 4)`` uint64 array; returns the ``(k, 4)`` output
    blocks for key ``(key0, key1)``.
    """
    ctr = np.array(counters, dtype=np.uint64, copy=True)
    c0, c1, c2, c3 = ctr[:, 0], ctr[:, 1], ctr[:, 2], ctr[:, 3]
    k0 = np.uint64(key0)
    k1 = np.uint64(key1)
    with np.errstate(over="ignore"):
        for rnd in range(10):
            if rnd:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=1)


def uniform_stream(key0, key1, count):
    """First ``count`` doubles in (0, 1) from the stream keyed by (key0, key1).

    Block ``j`` uses counter ``(j, 0, 0, 0)``; each 64-bit word gives one
    double from its top 53 bits, offset by half an ulp so 0 never occurs.
    """
    nblocks = -(-count // 4)
    ctr = np.zeros((nblocks, 4), dtype=np.uint64)
    ctr[:, 0] = np.arange(nblocks, dtype=np.uint64)
    words = philox4x64(key0, key1, ctr).ravel()[:count]
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
