"""Quantitative checks of the analytic properties of each family.

Every check returns a :class:`VerificationReport`. Limit statements are
tested on analytic covariances; Monte Carlo appears only in
:func:`check_empirical_cov` and the optional sampled cross-check of
:func:`check_quadratic_variation`.

A report passes iff ``defect <= threshold`` (``direction="upper"``) or
``defect > threshold`` (``direction="lower"``, used where a property asserts
separation from zero). When a check has side conditions, such as monotone
convergence, a failed side condition sets the defect to ``inf`` and is named
in ``details``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError
from .families import Family, FamilySpec
from .kernels import (
    cov,
    eta_incr_var,
    incr_cov,
    incr_var,
    wfbm_incr_var,
    wfbm_shifted_incr_cov,
)
from .specfun import beta

__all__ = [
    "VerificationReport",
    "LrdQuadruple",
    "IncrRegion",
    "lrd_limit",
    "check_lrd_limit",
    "check_asymptotic_homogeneity",
    "check_short_long_asymptotics",
    "long_horizons",
    "check_quadratic_variation",
    "check_variation_growth",
    "check_markov_defect",
    "check_incr_var_bounds",
    "check_empirical_cov",
    "compare_ensembles",
    "check_increment_sign",
    "check_self_similarity",
]

DEFAULT_T = (1e2, 1e3, 1e4, 1e5)
DYADIC = tuple(2**k for k in range(6, 13))
# smallest k with log k >= 4
ETA_BRACKET_K = math.ceil(math.exp(4))
# errors this small count as converged when testing monotonicity
CONVERGED = 1e-12


def _clean(x):
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    return x


@dataclass(frozen=True)
class VerificationReport:
    check_name: str
    spec: FamilySpec | None
    parameters: dict
    defect: float
    threshold: float
    direction: str = "upper"
    samples: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in ("upper", "lower"):
            raise DomainError("direction must be 'upper' or 'lower'")
        object.__setattr__(self, "defect", float(self.defect))
        object.__setattr__(self, "threshold", float(self.threshold))

    @property
    def passed(self):
        if self.direction == "upper":
            return bool(self.defect <= self.threshold)
        return bool(self.defect > self.threshold)

    def to_dict(self):
        return _clean({
            "checkName": self.check_name,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "parameters": self.parameters,
            "defect": self.defect,
            "threshold": self.threshold,
            "direction": self.direction,
            "pass": self.passed,
            "samples": self.samples,
            "details": self.details,
        })


@dataclass(frozen=True)
class LrdQuadruple:
    r: float
    v: float
    s: float
    t: float
    t_values: tuple = DEFAULT_T

    def __post_init__(self):
        if not (0 <= self.r < self.v <= self.s < self.t):
            raise DomainError("quadruple needs 0 <= r < v <= s < t")
        tv = tuple(float(x) for x in self.t_values)
        if not tv or tv[0] < 1 or any(b <= a for a, b in zip(tv, tv[1:])):
            raise DomainError("horizons must be increasing and >= 1")
        object.__setattr__(self, "t_values", tv)


def _monotone(errors, threshold=0.0):
    """Non-increasing, ignoring steps that stay far below the pass threshold."""
    floor = max(CONVERGED, 1e-6 * threshold)
    for prev, nxt in zip(errors, errors[1:]):
        if nxt > prev and nxt > floor:
            return False
    return True


def _rel(value, target):
    if target == 0:
        return abs(value)
    return abs(value - target) / abs(target)


# ------------------------------------------------------------------ LRD limits

def lrd_limit(spec, r, v, s, t):
    """Limit of the scaled increment covariance and the exponent of the scaling."""
    fam = spec.family
    if fam is Family.WFBM:
        a, b = spec.a, spec.b
        return (b / (a + 1.0)) * (t - s) * (v ** (a + 1.0) - r ** (a + 1.0)), 1.0 - b
    if fam in (Family.NSFBM, Family.SFBM):
        h = spec.h
        return 0.5 * h * (h - 1.0) * (h - 2.0) ** 2 * (t - s) * (v * v - r * r), 3.0 - h
    if fam is Family.ETA:
        return (t - s) * (v * v - r * r), 1.0
    raise DomainError(f"no long-range limit for {fam.value}")


def check_lrd_limit(spec, q, threshold=1e-2):
    """Scaled ``E[(X_{t+T} - X_{s+T})(X_v - X_r)]`` against its ``T -> inf`` limit.

    The defect is the relative error at the largest horizon (absolute when
    the limit is zero); the errors must not increase along the horizons.
    """
    limit, expo = lrd_limit(spec, q.r, q.v, q.s, q.t)
    scaled, errors = [], []
    for T in q.t_values:
        val = T**expo * incr_cov(spec, q.r, q.v, q.s + T, q.t + T)
        scaled.append(val)
        errors.append(_rel(val, limit))
    mono = _monotone(errors, threshold)
    defect = errors[-1] if mono else math.inf
    return VerificationReport(
        "lrd_limit", spec,
        {"r": q.r, "v": q.v, "s": q.s, "t": q.t, "T": list(q.t_values)},
        defect, threshold,
        details={"limit": limit, "exponent": expo, "scaled": scaled,
                 "errors": errors, "monotone": mono})


def check_asymptotic_homogeneity(a, b, s, t, t_values=DEFAULT_T, threshold=1e-2):
    """``T^{-a}`` times the increment covariance after a shift ``T`` tends to the fBm one."""
    spec = FamilySpec.wfbm(a, b)
    if not 0 <= s <= t:
        raise DomainError("needs 0 <= s <= t")
    target = (t ** (b + 1.0) + s ** (b + 1.0) - (t - s) ** (b + 1.0)) / (b + 1.0)
    vals = [wfbm_shifted_incr_cov(a, b, s, t, T) for T in t_values]
    errors = [_rel(v, target) for v in vals]
    mono = _monotone(errors, threshold)
    return VerificationReport(
        "asymptotic_homogeneity", spec,
        {"a": a, "b": b, "s": s, "t": t, "T": list(t_values)},
        errors[-1] if mono else math.inf, threshold,
        details={"limit": target, "values": vals, "errors": errors, "monotone": mono})


def long_horizons(a, t=1.0):
    """Decades of ``T`` until ``(t/T)^(a+1)``, the slowest long-time error term, is below 1e-4."""
    top = max(5, math.ceil(4.0 / (a + 1.0) + math.log10(max(t, 1.0))))
    return tuple(10.0**k for k in range(2, min(top, 300) + 1))


def check_short_long_asymptotics(a, b, t, eps_values=(1e-2, 1e-3, 1e-4, 1e-5),
                                 t_values=None, threshold=1e-2):
    """Increment variance over ``[t, t+eps]`` and ``[t, t+T]`` against both power laws.

    The long-time error decays like ``T^-(a+1)``; by default the horizons
    come from :func:`long_horizons` so that ``a`` near -1 is still resolved.
    """
    spec = FamilySpec.wfbm(a, b)
    if not t > 0:
        raise DomainError("needs t > 0")
    if t_values is None:
        t_values = long_horizons(a, t)
    c = 1.0 + a + b
    short_lim = 2.0 * t**a / (b + 1.0)
    long_lim = 2.0 * beta(a + 1.0, b + 1.0)
    eps_values = sorted(eps_values, reverse=True)
    short = [wfbm_incr_var(a, b, t, t + e) / e ** (b + 1.0) for e in eps_values]
    longv = [wfbm_incr_var(a, b, t, t + T) / T**c for T in t_values]
    e_short = [_rel(v, short_lim) for v in short]
    e_long = [_rel(v, long_lim) for v in longv]
    mono = _monotone(e_short, threshold) and _monotone(e_long, threshold)
    defect = max(e_short[-1], e_long[-1]) if mono else math.inf
    return VerificationReport(
        "short_long_asymptotics", spec,
        {"a": a, "b": b, "t": t, "eps": list(eps_values), "T": list(t_values)},
        defect, threshold,
        details={"short_limit": short_lim, "long_limit": long_lim,
                 "short_errors": e_short, "long_errors": e_long, "monotone": mono})


# ------------------------------------------------------- variation of paths

def _dyadic_terms(spec, n):
    k = np.arange(n)
    if spec.family is Family.ETA:
        return np.array([eta_incr_var(i / n, (i + 1) / n) for i in k])
    if spec.family is Family.WFBM:
        return np.asarray(wfbm_incr_var(spec.a, spec.b, k / n, (k + 1) / n), dtype=float)
    return np.array([incr_var(spec, i / n, (i + 1) / n) for i in k])


def _qv_slope(spec):
    """Predicted exponent of ``n`` in the expected quadratic variation."""
    fam = spec.family
    if fam is Family.WFBM:
        return -spec.b
    if fam is Family.SFBM:
        return 1.0 - spec.h
    if fam is Family.NSFBM:
        return -1.0
    raise DomainError(f"no quadratic-variation rate for {fam.value}")


def _empirical_qv(spec, n, mc):
    from .sampling import sample  # local: sampling imports pd_analysis

    grid = np.arange(1, n + 1) / n
    ens = sample(spec, grid, mc["n"], mc["seed"], mc.get("threads"))
    paths = np.hstack([np.zeros((ens.n, 1)), ens.paths])
    qv = np.sum(np.diff(paths, axis=1) ** 2, axis=1)
    return float(qv.mean()), float(qv.std(ddof=1) / math.sqrt(ens.n)) if ens.n > 1 else math.inf


def check_quadratic_variation(spec, n_values=DYADIC, mc=None, threshold=None, slope_tol=0.15):
    """Expected quadratic variation ``sum_k E(X_{(k+1)/n} - X_{k/n})^2`` over dyadic partitions.

    For the log-kernel process the sums must strictly decrease with
    ``n``, the last one must lie below ``threshold`` (default 0.01), half of
    it must lie below ``(log n (n-1) + n) / n^2``, and half of every increment variance must sit
    in ``[log k/(2n^2), log k/n^2]`` for ``k >= 55`` (lower edge for all
    ``k >= 1``). For the other families the defect is the distance between
    the fitted log-log slope of the last two sums and the predicted rate.

    ``mc = {"n": paths, "seed": seed, "max_n": 256}`` adds a sampled estimate
    for partitions up to ``max_n`` and requires it within 4 standard errors.
    """
    if spec.family not in (Family.ETA, Family.WFBM, Family.SFBM, Family.NSFBM):
        raise DomainError(f"quadratic variation check not defined for {spec.family.value}")
    n_values = [int(n) for n in n_values]
    sums, details = [], {}
    bracket_bad = 0
    for n in n_values:
        terms = _dyadic_terms(spec, n)
        sums.append(math.fsum(terms))
        if spec.family is Family.ETA:
            k = np.arange(1, n)
            half = terms[1:] / 2.0
            logk = np.log(k)
            lower_ok = half >= logk / (2.0 * n * n)
            upper_ok = (k < ETA_BRACKET_K) | (half <= logk / (n * n))
            bracket_bad += int(np.sum(~lower_ok) + np.sum(~upper_ok))
    details["sums"] = sums
    samples = None
    mc_ok = True
    if mc:
        rows = []
        for n, s in zip(n_values, sums):
            if n > mc.get("max_n", 256):
                continue
            mean, se = _empirical_qv(spec, n, mc)
            z = (mean - s) / se if se > 0 else 0.0
            rows.append({"n_partition": n, "empirical": mean, "stderr": se, "z": z})
            mc_ok &= abs(z) <= 4.0
        samples = {"n": mc["n"], "seed": mc["seed"], "rows": rows}

    if spec.family is Family.ETA:
        threshold = 0.01 if threshold is None else threshold
        n_last = n_values[-1]
        shape = (math.log(n_last) * (n_last - 1) + n_last) / n_last**2
        decreasing = all(b < a for a, b in zip(sums, sums[1:]))
        details.update(decreasing=decreasing, bracket_violations=bracket_bad,
                       bound_shape=shape, monotone=decreasing)
        ok = decreasing and bracket_bad == 0 and 0.5 * sums[-1] < shape and mc_ok
        defect = sums[-1] if ok else math.inf
    else:
        threshold = slope_tol if threshold is None else threshold
        slope = math.log(sums[-1] / sums[-2]) / math.log(n_values[-1] / n_values[-2])
        predicted = _qv_slope(spec)
        details.update(slope=slope, predicted_slope=predicted)
        defect = abs(slope - predicted) if mc_ok else math.inf
    details["mc_ok"] = mc_ok
    return VerificationReport("quadratic_variation", spec, {"n": n_values}, defect, threshold,
                              samples=samples, details=details)


def check_variation_growth(n_values=(4, 16, 64, 256, 1024, 4096), growth_from=256,
                           growth_to=4096, min_growth=0.10):
    """Expected first variation of the log-kernel process and its lower envelope.

    ``L_n = sqrt(2/pi) sum_k sd_k`` must increase with ``n`` and dominate
    ``c (1/n) sum_{k<n} sqrt(log k)`` for a fitted ``c > 0``. The defect is
    the envelope ratio ``E(growth_from) / E(growth_to)``, which must stay
    below ``1 / (1 + min_growth)``.
    """
    spec = FamilySpec.eta()
    n_values = sorted({int(n) for n in n_values} | {growth_from, growth_to})
    lengths, envelope = [], []
    for n in n_values:
        sd = np.sqrt(_dyadic_terms(spec, n))
        lengths.append(math.sqrt(2.0 / math.pi) * math.fsum(sd))
        envelope.append(math.fsum(np.sqrt(np.log(np.arange(1, n)))) / n)
    ratios = [ln / en for ln, en in zip(lengths, envelope) if en > 0]
    c_fit = min(ratios) if ratios else 0.0
    increasing = all(b > a for a, b in zip(lengths, lengths[1:]))
    env = dict(zip(n_values, envelope))
    ratio = env[growth_from] / env[growth_to]
    ok = increasing and c_fit > 0
    return VerificationReport(
        "variation_growth", spec, {"n": n_values},
        ratio if ok else math.inf, 1.0 / (1.0 + min_growth),
        details={"L": lengths, "envelope": envelope, "c_fit": c_fit,
                 "increasing": increasing, "envelope_growth": 1.0 / ratio - 1.0})


# ----------------------------------------------------------- Markov property

def _triangular(spec):
    if spec.family is Family.WFBM:
        return spec.b == 0
    if spec.family is Family.FBM:
        return spec.hurst == 0.5
    if spec.family in (Family.SFBM, Family.NSFBM):
        return spec.h == 2.0  # zero process
    return False


def check_markov_defect(spec, s, t, u, threshold=None):
    """``|K(s,u) K(t,t) - K(s,t) K(t,u)|``, zero for triangular (Markov) kernels.

    Triangular kernels must give a defect at most ``threshold`` (default
    1e-10); all others must exceed it (default 1e-3).
    """
    if not 0 < s < t < u:
        raise DomainError("needs 0 < s < t < u")
    defect = abs(cov(spec, s, u) * cov(spec, t, t) - cov(spec, s, t) * cov(spec, t, u))
    tri = _triangular(spec)
    if threshold is None:
        threshold = 1e-10 if tri else 1e-3
    return VerificationReport("markov_defect", spec, {"s": s, "t": t, "u": u},
                              defect, threshold, direction="upper" if tri else "lower",
                              details={"triangular": tri})


# ------------------------------------------------------ increment moment bounds

@dataclass(frozen=True)
class IncrRegion:
    """Square ``[lo, hi]^2`` on which one named increment bound is tested."""

    bound: str
    lo: float
    hi: float
    levels: tuple = (17, 65, 257)

    def __post_init__(self):
        if not (0 <= self.lo < self.hi < math.inf):
            raise ConfigurationError("region needs 0 <= lo < hi < inf")


def _bound_rule(spec, region):
    """(exponent, kind) for ``region.bound``; raises when the hypotheses fail."""
    name, lo = region.bound, region.lo
    if spec.family is Family.WFBM:
        a, b = spec.a, spec.b
        if name == "upper_b1":
            if a < 0 and lo <= 0:
                raise ConfigurationError("upper_b1 with a < 0 needs lo > 0")
            return b + 1.0, "upper"
        if name == "upper_c":
            if not (a < 0 and 1 + a + b > 0):
                raise ConfigurationError("upper_c needs a < 0 and 1 + a + b > 0")
            return 1.0 + a + b, "upper"
        if name == "lower_b1":
            if a > 0 and lo <= 0:
                raise ConfigurationError("lower_b1 with a > 0 needs lo > 0")
            return b + 1.0, "lower"
    elif spec.family is Family.NSFBM and 2 < spec.h < 4:
        if name == "upper_2":
            return 2.0, "upper"
        if name == "lower_2":
            if lo <= 0:
                raise ConfigurationError("lower_2 needs lo > 0")
            return 2.0, "lower"
        if name == "lower_h":
            return spec.h, "lower"
    raise ConfigurationError(f"bound {name!r} is not available for {spec}")


def check_incr_var_bounds(spec, region, growth_tol=1.5):
    """Ratio ``E(X_t - X_s)^2 / |t-s|^e`` over all grid pairs at refining resolutions.

    An upper bound holds numerically when the supremum stays finite and
    stabilizes under refinement; a lower bound when the infimum stays
    positive and stabilizes. The defect is the growth of the supremum
    (resp. shrinkage of the infimum) between the last two levels.
    """
    expo, kind = _bound_rule(spec, region)
    stats = []
    for m in region.levels:
        pts = np.linspace(region.lo, region.hi, m)
        i, j = np.triu_indices(m, 1)
        s, t = pts[i], pts[j]
        if spec.family is Family.WFBM:
            var = np.asarray(wfbm_incr_var(spec.a, spec.b, s, t), dtype=float)
        else:
            var = np.asarray(cov(spec, t, t) + cov(spec, s, s) - 2.0 * cov(spec, s, t))
        ratio = var / (t - s) ** expo
        stats.append(float(ratio.max() if kind == "upper" else ratio.min()))
    if kind == "upper":
        defect = stats[-1] / stats[-2] if np.isfinite(stats[-1]) else math.inf
    else:
        defect = stats[-2] / stats[-1] if stats[-1] > 0 else math.inf
    return VerificationReport(
        f"incr_var_bounds:{region.bound}", spec,
        {"bound": region.bound, "lo": region.lo, "hi": region.hi,
         "levels": list(region.levels), "exponent": expo},
        defect, growth_tol, details={"kind": kind, "constant_estimates": stats})


# ----------------------------------------------------------------- Monte Carlo

def _pair_z(emp, ref, var_i, var_j, n, allowance):
    se = np.sqrt((var_i * var_j + ref * ref) / n)
    excess = np.maximum(np.abs(emp - ref) - allowance, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(se > 0, excess / se, np.where(excess > 0, np.inf, 0.0))


def check_empirical_cov(ensemble, tol_sigmas=3.0, allowance=0.0, min_fraction=0.95):
    """Per-pair z-scores of the empirical second moments against the kernel.

    The standard error of ``mean(X_i X_j)`` for a centered Gaussian pair is
    ``sqrt((K_ii K_jj + K_ij^2) / n)``. ``allowance`` (relative to the largest
    variance) is subtracted from each deviation first, for samplers with a
    known discretization bias. Pairs with a zero variance are excluded.
    """
    paths = ensemble.paths
    n = paths.shape[0]
    if n < 1:
        raise DomainError("ensemble is empty")
    pts = ensemble.grid.points
    k = np.asarray(cov(ensemble.spec, pts[:, None], pts[None, :]), dtype=float)
    emp = paths.T @ paths / n
    diag = np.diag(k)
    i, j = np.triu_indices(pts.size)
    live = (diag[i] > 0) & (diag[j] > 0)
    excluded = [(float(pts[a]), float(pts[b])) for a, b in zip(i[~live], j[~live])]
    i, j = i[live], j[live]
    samples = {"n": int(n), "seed": ensemble.seed, "method": ensemble.method.value}
    if n == 1 or i.size == 0:
        return VerificationReport(
            "empirical_cov", ensemble.spec, {"tol_sigmas": tol_sigmas, "allowance": allowance},
            0.0, 1.0 - min_fraction, samples=samples,
            details={"underpowered": True, "excluded": excluded, "pairs": int(i.size)})
    scale = allowance * float(diag.max())
    z = _pair_z(emp[i, j], k[i, j], diag[i], diag[j], n, scale)
    frac_out = float(np.mean(z > tol_sigmas))
    samples["max_abs_z"] = float(z.max())
    return VerificationReport(
        "empirical_cov", ensemble.spec, {"tol_sigmas": tol_sigmas, "allowance": allowance},
        frac_out, 1.0 - min_fraction, samples=samples,
        details={"underpowered": False, "excluded": excluded, "pairs": int(i.size),
                 "z": z})


def compare_ensembles(first, second, tol_sigmas=3.0, allowance=0.0, min_fraction=0.95):
    """Two ensembles on the same grid: z-scores of the difference of their second moments.

    Standard errors come from each ensemble's own empirical moments and are
    pooled in quadrature.
    """
    if not np.array_equal(first.grid.points, second.grid.points):
        raise DomainError("ensembles live on different grids")
    pts = first.grid.points
    i, j = np.triu_indices(pts.size)

    def moments(ens):
        c = ens.paths.T @ ens.paths / ens.n
        d = np.diag(c)
        return c[i, j], (d[i] * d[j] + c[i, j] ** 2) / ens.n, d

    c1, v1, d1 = moments(first)
    c2, v2, d2 = moments(second)
    se = np.sqrt(v1 + v2)
    scale = allowance * float(max(d1.max(), d2.max()))
    excess = np.maximum(np.abs(c1 - c2) - scale, 0.0)
    live = se > 0
    z = excess[live] / se[live]
    frac_out = float(np.mean(z > tol_sigmas)) if z.size else 0.0
    return VerificationReport(
        "compare_ensembles", first.spec,
        {"tol_sigmas": tol_sigmas, "allowance": allowance,
         "methods": [first.method.value, second.method.value]},
        frac_out, 1.0 - min_fraction,
        samples={"n": [first.n, second.n], "seed": [first.seed, second.seed],
                 "max_abs_z": float(z.max()) if z.size else 0.0},
        details={"pairs": int(z.size), "z": z})


# ----------------------------------------------------- structural identities

def check_increment_sign(spec, count=1000, seed=0, horizon=10.0):
    """Sign of the covariance of disjoint increments against the sign of ``b``.

    Counts quadruples whose sign disagrees with the prediction (zero for
    ``b = 0``, sign of ``b`` otherwise); the defect is that count.
    """
    if spec.family is not Family.WFBM:
        raise DomainError("increment sign law is stated for weighted fBm")
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        r, v, s, t = np.sort(rng.uniform(0.0, horizon, 4))
        if not r < v <= s < t:
            continue
        q = incr_cov(spec, r, v, s, t)
        if spec.b == 0:
            bad += q != 0.0
        else:
            bad += not (np.sign(q) == np.sign(spec.b))
    return VerificationReport("increment_sign", spec, {"count": count, "seed": seed},
                              bad, 0.0)


def check_self_similarity(spec, factors=(0.5, 2.0, 10.0), size=12, seed=0, threshold=1e-10):
    """``K(cs, ct) = c^{2H} K(s, t)`` on a random grid; defect is the worst relative error."""
    rng = np.random.default_rng(seed)
    pts = np.sort(rng.uniform(0.05, 5.0, size))
    base = np.asarray(cov(spec, pts[:, None], pts[None, :]), dtype=float)
    expo = 2.0 * spec.self_similarity_index
    worst = 0.0
    norm = np.abs(base).max()
    for c in factors:
        scaled = np.asarray(cov(spec, c * pts[:, None], c * pts[None, :]), dtype=float)
        if norm == 0:
            err = float(np.abs(scaled).max())
        else:
            err = float(np.abs(scaled / c**expo - base).max() / norm)
        worst = max(worst, err)
    return VerificationReport("self_similarity", spec,
                              {"factors": list(factors), "size": size, "seed": seed,
                               "exponent": expo},
                              worst, threshold)
