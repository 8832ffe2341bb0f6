"""Covariance kernels, increment moments and their quadrature oracles.

Closed forms (``cov``, ``wfbm_incr_var``, ``wfbm_incr_cov``, ``eta_incr_var``,
``incr_cov``) are vectorized and cheap. The ``*_quad``, ``*_double`` and
``*_triple`` functions evaluate the integral representations numerically and
exist only to cross-check the closed forms; they never back ``cov``.
"""
import math

import numpy as np

from .errors import DomainError, ToleranceError
from .families import Family, FamilySpec
from .specfun import adaptive_quad, beta, gauss_jacobi, gauss_legendre, reg_inc_beta_pair

__all__ = [
    "cov",
    "cov_matrix",
    "wfbm_cov",
    "sub_cov",
    "odd_bfbm_cov",
    "eta_cov",
    "fbm_cov",
    "wfbm_cov_quad",
    "wfbm_cov_double",
    "wfbm_incr_var",
    "wfbm_incr_cov",
    "nsfbm_cov_triple",
    "eta_cov_triple",
    "eta_incr_var",
    "eta_incr_double_integral",
    "incr_var",
    "incr_cov",
    "wfbm_shifted_incr_cov",
    "nsfbm_cov_from_odd",
]


def _out(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * x * np.log(safe), 0.0)


def _times(s, t):
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(~(s >= 0)) or np.any(~(t >= 0)):
        raise DomainError("times must be nonnegative and finite")
    return np.broadcast_arrays(s, t)


# ---------------------------------------------------------------- closed forms

def wfbm_cov(a, b, s, t):
    """Weighted fBm covariance ``int_0^{s^t} u^a [(t-u)^b + (s-u)^b] du``.

    Uses ``B(a+1, b+1) [t^c I_{s/t}(a+1, b+1) + s^c]`` for ``s <= t`` with
    ``c = 1 + a + b``. Parameters are only required to keep the integral
    finite (``a, b > -1``), so this also serves invalid-parameter probes.
    """
    if not (a > -1 and b > -1):
        raise DomainError("wfbm covariance diverges unless a, b > -1")
    s, t = _times(s, t)
    lo = np.minimum(s, t)
    hi = np.maximum(s, t)
    c = 1.0 + a + b
    pos = lo > 0
    lo_p = np.where(pos, lo, 1.0)
    hi_p = np.where(pos, hi, 1.0)
    if b == 0:
        # I_x(a+1, 1) = x^(a+1): the kernel depends on min(s, t) alone, exactly
        val = 2.0 * lo_p**c / c
    else:
        inc, _ = reg_inc_beta_pair(lo_p / hi_p, a + 1.0, b + 1.0)
        val = beta(a + 1.0, b + 1.0) * (hi_p**c * inc + lo_p**c)
    return _out(np.where(pos, val, 0.0))


def sub_cov(h, s, t):
    """``(2-h)(s^h + t^h - [(s+t)^h + |s-t|^h]/2)``; sub-fractional for h < 2, negative for h > 2."""
    s, t = _times(s, t)
    if h == 4.0:
        return _out(12.0 * (s * t) ** 2)
    val = (2.0 - h) * (s**h + t**h - 0.5 * ((s + t) ** h + np.abs(s - t) ** h))
    return _out(val)


def odd_bfbm_cov(h, s, t):
    """``(s+t)^{h-2} - |s-t|^{h-2}``, the bi-fractional kernel with H = 1/2, k = h - 2."""
    s, t = _times(s, t)
    p = h - 2.0
    diff = np.abs(s - t)
    diff_p = np.where(diff > 0, diff, 1.0) ** p
    return _out((s + t) ** p - np.where(diff > 0, diff_p, 0.0))


def eta_cov(s, t):
    """Log kernel ``-(s^2 log s + t^2 log t - [(s+t)^2 log(s+t) + (s-t)^2 log|s-t|]/2)``."""
    s, t = _times(s, t)
    val = -(_xlogx(s) + _xlogx(t) - 0.5 * (_xlogx(s + t) + _xlogx(np.abs(s - t))))
    return _out(val)


def fbm_cov(hurst, s, t):
    s, t = _times(s, t)
    e = 2.0 * hurst
    return _out(0.5 * (s**e + t**e - np.abs(s - t) ** e))


def cov(spec: FamilySpec, s, t):
    """Covariance of the process described by ``spec`` at times ``s`` and ``t``.

    Broadcasts over array arguments.

    >>> cov(FamilySpec.wfbm(0, 0), 2.0, 3.0)
    4.0
    """
    fam = spec.family
    if fam is Family.WFBM:
        return wfbm_cov(spec.a, spec.b, s, t)
    if fam in (Family.SFBM, Family.NSFBM):
        return sub_cov(spec.h, s, t)
    if fam is Family.ODD_BFBM:
        return odd_bfbm_cov(spec.h, s, t)
    if fam is Family.ETA:
        return eta_cov(s, t)
    return fbm_cov(spec.hurst, s, t)


def cov_matrix(spec: FamilySpec, times):
    times = np.asarray(times, dtype=float)
    m = np.asarray(cov(spec, times[:, None], times[None, :]), dtype=float)
    # exact symmetry regardless of the evaluation order inside cov
    return np.triu(m) + np.triu(m, 1).T


def wfbm_incr_var(a, b, s, t):
    """``E(xi_t - xi_s)^2 = 2 int_s^t u^a (t-u)^b du`` for ``0 <= s <= t``."""
    s, t = _times(s, t)
    if np.any(s > t):
        raise DomainError("wfbm_incr_var needs s <= t")
    c = 1.0 + a + b
    pos = t > s
    t_p = np.where(pos, t, 1.0)
    _, upper = reg_inc_beta_pair(np.where(pos, s, 0.0) / t_p, a + 1.0, b + 1.0)
    val = 2.0 * beta(a + 1.0, b + 1.0) * t_p**c * upper
    return _out(np.where(pos, val, 0.0))


def _check_quadruple(r, v, s, t):
    if not (0 <= r < v <= s < t):
        raise DomainError(f"increment quadruple needs 0 <= r < v <= s < t, got {(r, v, s, t)}")


def wfbm_incr_cov(a, b, r, v, s, t):
    """``E[(xi_t - xi_s)(xi_v - xi_r)] = int_r^v u^a [(t-u)^b - (s-u)^b] du``.

    Same sign as ``b``; exactly zero when ``b == 0``.
    """
    _check_quadruple(r, v, s, t)
    if b == 0:
        return 0.0
    p, q = a + 1.0, b + 1.0
    c = 1.0 + a + b
    lo_t, _ = reg_inc_beta_pair(np.array([r / t, v / t]), p, q)
    lo_s, _ = reg_inc_beta_pair(np.array([r / s, v / s]), p, q)
    far = t**c * (lo_t[1] - lo_t[0])
    near = s**c * (lo_s[1] - lo_s[0])
    return float(beta(p, q) * (far - near))


def _eta_shape(sigma):
    # M(sigma) = int_0^2 log(sigma + w) phi(w) dw, phi the triangular density
    if sigma >= 1.0:
        rule = gauss_legendre(30)
        w1 = rule.nodes
        w2 = 1.0 + rule.nodes
        tail = (np.dot(rule.weights, np.log1p(w1 / sigma) * w1)
                + np.dot(rule.weights, np.log1p(w2 / sigma) * (2.0 - w2)))
        return math.log(sigma) + float(tail)

    def prim(z):  # int log z
        return z * math.log(z) - z if z > 0 else 0.0

    def prim_z(z):  # int z log z
        return 0.5 * z * z * math.log(z) - 0.25 * z * z if z > 0 else 0.0

    a0, a1, a2 = sigma, sigma + 1.0, sigma + 2.0
    rising = (prim_z(a1) - prim_z(a0)) - sigma * (prim(a1) - prim(a0))
    falling = a2 * (prim(a2) - prim(a1)) - (prim_z(a2) - prim_z(a1))
    return rising + falling


def eta_incr_var(s, t):
    """``E(eta_t - eta_s)^2`` for ``0 <= s <= t``, free of cancellation.

    Integrates the mixed second derivative ``log(x+y) - log|x-y|`` of the
    log kernel over ``[s, t]^2``. With ``d = t - s`` this reduces to
    ``d^2 (M(2s/d) + 3/2)``, ``M`` a one-dimensional log moment of the
    triangular density. The double integral over the triangle ``u' < u``
    (see :func:`eta_incr_double_integral`) is exactly half this value.
    """
    if not (0 <= s <= t):
        raise DomainError("eta_incr_var needs 0 <= s <= t")
    d = t - s
    if d == 0:
        return 0.0
    return d * d * (_eta_shape(2.0 * s / d) + 1.5)


def incr_var(spec: FamilySpec, s, t):
    """Variance of ``X_t - X_s`` (``s <= t``), using the stable form where one exists."""
    if spec.family is Family.WFBM:
        return wfbm_incr_var(spec.a, spec.b, s, t)
    if spec.family is Family.ETA:
        return eta_incr_var(s, t)
    if spec.family in (Family.SFBM, Family.NSFBM) and spec.h == 2.0:
        return 0.0
    return float(cov(spec, t, t) + cov(spec, s, s) - 2.0 * cov(spec, s, t))


def _mixed_density(spec, x, y):
    # d^2 K / dx dy for x < y, written without cancellation
    fam = spec.family
    if fam in (Family.SFBM, Family.NSFBM):
        h = spec.h
        p = h - 2.0
        z = x / y
        bracket = np.expm1(p * np.log1p(z)) - np.expm1(p * np.log1p(-z))
        return 0.5 * h * (h - 1.0) * p * y**p * bracket
    if fam is Family.ETA:
        return 2.0 * np.arctanh(x / y)
    if fam is Family.ODD_BFBM:
        p = spec.h - 2.0
        return p * (p - 1.0) * ((x + y) ** (p - 2.0) + (y - x) ** (p - 2.0))
    if fam is Family.FBM:
        e = 2.0 * spec.hurst
        return 0.5 * e * (e - 1.0) * (y - x) ** (e - 2.0)
    raise DomainError(f"no mixed density for {fam.value}")


def incr_cov(spec: FamilySpec, r, v, s, t, order=40):
    """``E[(X_v - X_r)(X_t - X_s)]`` for ``0 <= r < v <= s < t``.

    For well separated intervals the mixed second derivative of the kernel is
    integrated by a tensor Gauss-Legendre rule, which keeps full relative
    accuracy when ``s, t`` are far out (long-range-dependence limits). Touching
    or nearly touching intervals fall back to the four-term covariance sum.
    """
    _check_quadruple(r, v, s, t)
    if spec.family is Family.WFBM:
        return wfbm_incr_cov(spec.a, spec.b, r, v, s, t)
    if spec.family in (Family.SFBM, Family.NSFBM) and spec.h in (2.0, 4.0):
        return float(cov(spec, v, t) - cov(spec, v, s) - cov(spec, r, t) + cov(spec, r, s))
    gap = s - v
    if gap < 0.25 * max(v - r, t - s):
        return float(cov(spec, v, t) - cov(spec, v, s) - cov(spec, r, t) + cov(spec, r, s))
    rule = gauss_legendre(order)
    x = r + (v - r) * rule.nodes
    y = s + (t - s) * rule.nodes
    dens = _mixed_density(spec, x[:, None], y[None, :])
    return float((v - r) * (t - s) * rule.weights @ dens @ rule.weights)


# ----------------------------------------------------------- quadrature oracles

_GJ_ORDERS = (24, 32)
_GL_ORDER = 20


def _power_integral(a, b, s, d, n):
    """``int_0^s u^a (s + d - u)^b du`` by split Gauss-Jacobi / graded Gauss-Legendre."""
    half = 0.5 * s
    t = s + d
    # [0, s/2]: u^a singular weight, (t-u)^b smooth
    left = gauss_jacobi(n, 0.0, a).integrate(lambda u: (t - u) ** b, 0.0, half)
    # [s/2, s] in v = s - u: (s-v)^a (d+v)^b on [0, s/2]
    if d == 0:
        right = gauss_jacobi(n, 0.0, b).integrate(lambda w: (s - w) ** a, 0.0, half)
        return left + right
    cuts = [0.0]
    edge = d
    while edge < half:
        cuts.append(edge)
        edge *= 2.0
    cuts.append(half)
    cuts = np.asarray(cuts)
    lo, hi = cuts[:-1], cuts[1:]
    rule = gauss_legendre(_GL_ORDER)
    w = lo[:, None] + (hi - lo)[:, None] * rule.nodes[None, :]
    vals = (s - w) ** a * (d + w) ** b
    right = float(np.sum((hi - lo) * (vals @ rule.weights)))
    return left + right


def wfbm_cov_quad(a, b, s, t, tol=1e-12):
    """Weighted fBm covariance by direct quadrature of its defining integral.

    Endpoint singularities ``u^a`` (at 0) and ``(t-u)^b`` (at ``s = t``) are
    absorbed into Gauss-Jacobi weights; the near-singularity when ``s`` is
    close to ``t`` is resolved by geometric grading. Two rule orders are
    compared and a :class:`ToleranceError` is raised when they disagree by
    more than ``tol * (1 + |value|)``.
    """
    if not (a > -1 and b > -1):
        raise DomainError("wfbm covariance diverges unless a, b > -1")
    if s < 0 or t < 0:
        raise DomainError("times must be nonnegative")
    lo, hi = min(s, t), max(s, t)
    if lo == 0:
        return 0.0
    vals = [_power_integral(a, b, lo, hi - lo, n) + _power_integral(a, b, lo, 0.0, n)
            for n in _GJ_ORDERS]
    err = abs(vals[1] - vals[0])
    if err > tol * (1.0 + abs(vals[1])):
        raise ToleranceError("wfbm_cov_quad rules disagree", value=vals[1], error=err)
    return vals[1]


def wfbm_cov_double(a, b, s, t):
    """Weighted fBm covariance from ``b int_0^s int_0^t (u^r)^a |u-r|^{b-1} dr du``.

    Valid for ``0 < b <= 1``. On the square ``[0, m]^2`` (``m = min(s, t)``)
    the inner integral is a Beta function and the outer one a Gauss-Jacobi
    rule. On the remaining rectangle the inner integral over the far variable
    is done in closed form and the outer one numerically, with the difference
    of powers written through ``expm1`` so small ``b`` does not cancel.
    """
    if not (0 < b <= 1):
        raise DomainError("double-integral form needs 0 < b <= 1")
    if not a > -1:
        raise DomainError("needs a > -1")
    if s < 0 or t < 0:
        raise DomainError("times must be nonnegative")
    m, big = min(s, t), max(s, t)
    if m == 0:
        return 0.0
    n = _GJ_ORDERS[-1]
    # square: int_0^u r^a (u-r)^{b-1} dr = B(a+1, b) u^{a+b}, and b B(a+1, b) = (a+b+1) B(a+1, b+1)
    inner = (a + 1.0 + b) * beta(a + 1.0, b + 1.0)
    square = 2.0 * inner * gauss_jacobi(n, 0.0, a + b).integrate(np.ones_like, 0.0, m)
    if big == m:
        return square
    return square + _rect_part(a, b, m, big - m, n)


def _rect_part(a, b, m, d, n):
    """``int_0^m u^a [(m+d-u)^b - (m-u)^b] du`` without cancellation for small ``b``."""

    def bracket(w):  # (m-u)^b [(1 + d/w)^b - 1] with w = m - u
        return w**b * np.expm1(b * np.log1p(d / w))

    left = gauss_jacobi(n, 0.0, a).integrate(lambda u: bracket(m - u), 0.0, 0.5 * m)
    right = adaptive_quad(lambda w: (m - w) ** a * bracket(w), 0.0, 0.5 * m,
                          tol=1e-15, rtol=1e-13, singular="left")
    return left + right.value


def nsfbm_cov_triple(h, s, t, tol=1e-9):
    """Negative sub-fractional covariance from its triple-integral form.

    ``h(h-1)(h-2)^2 int_0^{s^t} int_r^s int_r^t (u+u'-2r)^{h-3} du' du dr``;
    the innermost integral is taken in closed form, the other two by
    adaptive quadrature.
    """
    if not (2 < h < 4):
        raise DomainError("triple-integral form needs 2 < h < 4")
    if s < 0 or t < 0:
        raise DomainError("times must be nonnegative")
    m = min(s, t)
    if m == 0:
        return 0.0
    p = h - 2.0

    def over_u(r):
        def f(u):
            return ((u + t - 2.0 * r) ** p - (u - r) ** p) / p
        if s - r <= 0:
            return 0.0
        return adaptive_quad(f, r, s, tol=0.01 * tol, singular="left").value

    outer = adaptive_quad(np.vectorize(over_u), 0.0, m, tol=tol, singular="right")
    return h * (h - 1.0) * p * p * outer.value


def eta_cov_triple(s, t, tol=1e-10):
    """Log-kernel covariance from ``2 int_0^{s^t} int_r^s int_r^t (u+u'-2r)^{-1}``.

    Innermost integral in closed form; log singularities at ``u = r`` and at
    ``r = s^t`` are handled by endpoint substitutions.
    """
    if s < 0 or t < 0:
        raise DomainError("times must be nonnegative")
    m = min(s, t)
    if m == 0:
        return 0.0

    def over_u(r):
        if s - r <= 0:
            return 0.0

        def f(u):
            return np.log(u + t - 2.0 * r) - np.log(u - r)
        return adaptive_quad(f, r, s, tol=0.01 * tol, singular="left").value

    outer = adaptive_quad(np.vectorize(over_u), 0.0, m, tol=tol, singular="right")
    return 2.0 * outer.value


def eta_incr_double_integral(s, t, tol=1e-12):
    """``int_0^{t-s} int_0^u [log(2s+u+u') - log(u-u')] du' du`` by nested quadrature.

    This triangle integral equals half of ``E(eta_t - eta_s)^2``.
    """
    if not (0 <= s <= t):
        raise DomainError("needs 0 <= s <= t")
    d = t - s
    if d == 0:
        return 0.0

    def over_w(u):
        if u <= 0:
            return 0.0

        def f(z):  # z = u - u', the distance to the log singularity
            return np.log(2.0 * s + 2.0 * u - z) - np.log(z)
        return adaptive_quad(f, 0.0, u, tol=0.01 * tol, singular="left").value

    return adaptive_quad(np.vectorize(over_w), 0.0, d, tol=tol, singular="left").value


def _smooth_times_power(g, s, d, b, n=32):
    """``int_0^s g(u) (s + d - u)^b du`` for smooth ``g``; graded near ``u = s``."""
    half = 0.5 * s
    t = s + d
    left = gauss_legendre(n).integrate(lambda u: g(u) * (t - u) ** b, 0.0, half)
    if d == 0:
        return left + gauss_jacobi(n, 0.0, b).integrate(lambda w: g(s - w), 0.0, half)
    cuts = [0.0]
    edge = d
    while edge < half:
        cuts.append(edge)
        edge *= 2.0
    cuts.append(half)
    cuts = np.asarray(cuts)
    lo, hi = cuts[:-1], cuts[1:]
    rule = gauss_legendre(_GL_ORDER)
    w = lo[:, None] + (hi - lo)[:, None] * rule.nodes[None, :]
    vals = g(s - w) * (d + w) ** b
    return left + float(np.sum((hi - lo) * (vals @ rule.weights)))


def wfbm_shifted_incr_cov(a, b, s, t, shift):
    """``T^{-a} E[(xi_{t+T} - xi_T)(xi_{s+T} - xi_T)]`` with ``T = shift``, ``0 <= s <= t``.

    Evaluated as ``int_0^s (1 + u/T)^a [(t-u)^b + (s-u)^b] du``, which has no
    cancellation however large ``T`` is.
    """
    if not (0 <= s <= t) or shift <= 0:
        raise DomainError("needs 0 <= s <= t and shift > 0")
    if s == 0:
        return 0.0

    def g(u):
        return np.exp(a * np.log1p(u / shift))

    return _smooth_times_power(g, s, t - s, b) + _smooth_times_power(g, s, 0.0, b)


def nsfbm_cov_from_odd(h, s, t, tol=1e-11):
    """``h(h-1)(h-2)/2 * int_0^s int_0^t K0(u, v) dv du`` with ``K0`` the odd-part kernel.

    Both integrals are adaptive; the inner one is split at its kink ``v = u``.
    """
    if not (2 < h < 4):
        raise DomainError("needs 2 < h < 4")
    if s <= 0 or t <= 0:
        return 0.0
    p = h - 2.0

    def over_v(u):
        total = 0.0
        cut = min(u, t)
        if cut > 0:
            total += adaptive_quad(lambda v: (u + v) ** p - (u - v) ** p, 0.0, cut,
                                   tol=0.01 * tol, singular="right").value
        if u < t:
            total += adaptive_quad(lambda v: (u + v) ** p - (v - u) ** p, u, t,
                                   tol=0.01 * tol, singular="left").value
        return total

    outer = adaptive_quad(np.vectorize(over_v), 0.0, s, tol=tol)
    return 0.5 * h * (h - 1.0) * p * outer.value
