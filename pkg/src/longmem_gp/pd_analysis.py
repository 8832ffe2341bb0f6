"""Parameter validity, Gram matrices, PSD certificates and violation witnesses."""
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import DomainError, NumericalError, ParameterError
from .families import Family, FamilySpec, Regime, family_domain
from .kernels import cov_matrix, wfbm_cov

__all__ = [
    "TimeGrid",
    "GramMatrix",
    "ValidityVerdict",
    "PsdCertificate",
    "Witness",
    "classify",
    "gram",
    "psd_certificate",
    "violation_witness",
]

# float parameters this close to a wedge edge count as on it
BOUNDARY_SLACK = 1e-12

SWEEP_LIMIT_LOG2 = 1000
SPEC_SWEEP_LOG2 = 40
EPS_SWEEP_LOG2 = 30


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite")
        if pts.size and pts[0] < 0:
            raise DomainError("grid points must be nonnegative")
        if np.any(np.diff(pts) <= 0):
            raise DomainError("grid points must be strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def linspace(cls, start, stop, count):
        return cls(np.linspace(start, stop, count))

    @classmethod
    def random(cls, rng, size, low=0.0, high=10.0):
        """``size`` distinct uniform points in (low, high], sorted."""
        pts = np.unique(high - (high - low) * rng.random(size))
        while pts.size < size:
            pts = np.unique(np.concatenate([pts, high - (high - low) * rng.random(size - pts.size)]))
        return cls(pts)

    def with_points(self, extra):
        return TimeGrid(np.unique(np.concatenate([self.points, np.asarray(extra, dtype=float)])))

    def __len__(self):
        return self.points.size

    @property
    def excludes_zero(self):
        return self.points.size == 0 or self.points[0] > 0


@dataclass(frozen=True)
class GramMatrix:
    grid: TimeGrid
    entries: np.ndarray
    spec: FamilySpec


@dataclass(frozen=True)
class Witness:
    """Point ``t`` where ``Q(1, t) > sqrt(Q(1, 1) Q(t, t))``.

    ``eps`` is ``t - 1`` for the near-diagonal regime (kept separately because
    it may be far below double resolution); ``precision`` records whether the
    defect was resolved in float64 or with mpmath.
    """

    t: float
    defect: float
    relative_defect: float
    regime: Regime
    eps: float | None = None
    precision: str = "float64"
    min_eig_ratio: float = 0.0

    def to_dict(self):
        return {
            "t": self.t,
            "eps": self.eps,
            "defect": self.defect,
            "relative_defect": self.relative_defect,
            "min_eig_ratio": self.min_eig_ratio,
            "regime": self.regime.value,
            "precision": self.precision,
        }


@dataclass(frozen=True)
class ValidityVerdict:
    family: Family
    params: dict
    valid: bool
    regime: Regime
    degenerate: str | None = None
    witness: Witness | None = None

    @property
    def status(self):
        return "Valid" if self.valid else "Invalid"

    def to_dict(self):
        return {
            "family": self.family.value,
            "params": dict(self.params),
            "status": self.status,
            "regime": self.regime.value,
            "degenerate": self.degenerate,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


def _snap_wfbm(a, b):
    # pull float noise onto the wedge edges before applying the strict rules
    if abs(1 + a + b) <= BOUNDARY_SLACK:
        b = -1.0 - a
    if abs(b - (1 + a)) <= BOUNDARY_SLACK:
        b = 1.0 + a
    if abs(b - 1) <= BOUNDARY_SLACK:
        b = 1.0
    return a, b


def classify(family, a=None, b=None, h=None, hurst=None, witness=True):
    """Decide whether the kernel with these raw parameters is positive definite.

    Total: never raises for out-of-range parameters. Invalid weighted-fBm
    parameters with ``a, b > -1`` carry a covariance-inequality witness
    unless ``witness=False``.
    """
    family = Family(family)
    params = {k: v for k, v in (("a", a), ("b", b), ("h", h), ("hurst", hurst)) if v is not None}
    if family is Family.WFBM:
        if a is None or b is None:
            raise ParameterError("wfbm needs a and b")
        a, b = _snap_wfbm(float(a), float(b))
    dom = family_domain(family, a, b, h, hurst)
    wit = None
    if (witness and not dom.valid and family is Family.WFBM
            and dom.regime is not Regime.DIVERGENT):
        wit = violation_witness(a, b)
    return ValidityVerdict(family, params, dom.valid, dom.regime, dom.degenerate, wit)


def gram(spec, grid):
    """Gram matrix of ``spec`` on ``grid``; exactly symmetric."""
    if not isinstance(spec, FamilySpec):
        raise ParameterError("gram needs a validated FamilySpec")
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    if len(grid) == 0:
        raise DomainError("grid is empty")
    return GramMatrix(grid, cov_matrix(spec, grid.points), spec)


@dataclass(frozen=True)
class PsdCertificate:
    min_eigenvalue: float
    trace: float
    threshold: float
    passed: bool
    equilibrated: bool = False
    eigenvalues: np.ndarray = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "trace": self.trace,
            "threshold": self.threshold,
            "pass": self.passed,
            "equilibrated": self.equilibrated,
        }


def psd_certificate(gm, tol=1e-8, equilibrate=False):
    """Numerical PSD check: pass iff ``min eigenvalue >= -tol * trace``.

    With ``equilibrate=True`` the matrix is first scaled to unit diagonal
    (rows with zero variance dropped). Positive semi-definiteness is
    invariant under that scaling, while the trace-relative threshold stops
    being dominated by the largest variance.
    """
    m = gm.entries if isinstance(gm, GramMatrix) else np.asarray(gm, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("need a square matrix")
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    m = 0.5 * (m + m.T)
    if equilibrate:
        d = np.diag(m).copy()
        keep = d > 0
        if np.any(d < 0):
            return PsdCertificate(float(d.min()), float(d.sum()), 0.0, False, True)
        m = m[np.ix_(keep, keep)]
        scale = 1.0 / np.sqrt(d[keep])
        m = m * scale[:, None] * scale[None, :]
    if m.size == 0:
        return PsdCertificate(0.0, 0.0, 0.0, True, equilibrate, np.empty(0))
    eig = np.linalg.eigvalsh(m)
    trace = float(np.trace(m))
    threshold = -tol * abs(trace)
    return PsdCertificate(float(eig[0]), trace, threshold, bool(eig[0] >= threshold),
                          equilibrate, eig)


def _pair_stats(q11, q1t, qtt):
    defect = q1t * q1t - q11 * qtt
    rel = defect / (q11 * qtt)
    # smallest eigenvalue of [[q11, q1t], [q1t, qtt]] relative to its trace
    tr = q11 + qtt
    lam = 0.5 * (tr - np.hypot(q11 - qtt, 2.0 * q1t))
    return defect, rel, lam / tr


def _float_sweep(a, b, ts):
    q11 = wfbm_cov(a, b, 1.0, 1.0)
    best = None
    with np.errstate(over="ignore", invalid="ignore"):
        for t in ts:
            q1t = wfbm_cov(a, b, 1.0, t)
            qtt = wfbm_cov(a, b, t, t)
            if not (np.isfinite(q1t) and np.isfinite(qtt) and qtt > 0 and q1t > 0):
                continue
            defect, rel, ratio = _pair_stats(q11, q1t, qtt)
            # a positive defect must clear the rounding noise of q1t^2
            if defect <= 64 * np.finfo(float).eps * q1t * q1t:
                continue
            if best is None or ratio < best[3]:
                best = (t, defect, rel, ratio)
    return best


def _mp_defect_near_one(a, b, eps):
    a = mpmath.mpf(a)
    b = mpmath.mpf(b)
    c = 1 + a + b
    bt = mpmath.beta(a + 1, b + 1)
    t = 1 + eps
    q11 = 2 * bt
    qtt = 2 * bt * t**c
    q1t = bt * (t**c * mpmath.betainc(a + 1, b + 1, 0, 1 / t, regularized=True) + 1)
    defect = q1t * q1t - q11 * qtt
    return defect, defect / (q11 * qtt)


def violation_witness(a, b):
    """Find ``t`` with ``Q(1, t)^2 > Q(1, 1) Q(t, t)`` for invalid weighted-fBm parameters.

    The sweep direction follows the regime: ``t -> 0`` when ``1 + a + b < 0``,
    ``t -> inf`` when ``b > 1 + a``, and ``t = 1 + eps`` when ``1 < b <= 1 + a``.
    Sweeps are geometric with ratio 2. Among points with a resolvable positive
    defect the one whose 2x2 Gram matrix is most negative relative to its trace
    is returned. Near-diagonal defects of order ``eps^2`` that fall below
    double resolution are resolved with mpmath.
    """
    a, b = _snap_wfbm(float(a), float(b))
    dom = family_domain(Family.WFBM, a, b)
    if dom.valid:
        raise DomainError(f"wfbm(a={a}, b={b}) is positive definite; no witness exists")
    if dom.regime is Regime.DIVERGENT:
        raise DomainError("wfbm covariance diverges; witness undefined")

    if dom.regime in (Regime.SUM_NEG, Regime.B_GT_APLUS1):
        sign = -1 if dom.regime is Regime.SUM_NEG else 1
        best = _float_sweep(a, b, [2.0 ** (sign * k) for k in range(1, SPEC_SWEEP_LOG2 + 1)])
        if best is None:
            best = _float_sweep(a, b, [2.0 ** (sign * k)
                                       for k in range(SPEC_SWEEP_LOG2 + 1, SWEEP_LIMIT_LOG2 + 1)])
        if best is None:
            raise NumericalError(
                f"no witness for wfbm(a={a}, b={b}) with t = 2^(+-k), k <= {SWEEP_LIMIT_LOG2}")
        t, defect, rel, ratio = best
        return Witness(float(t), float(defect), float(rel), dom.regime, min_eig_ratio=float(ratio))

    best = _float_sweep(a, b, [1.0 + 2.0 ** -k for k in range(1, EPS_SWEEP_LOG2 + 1)])
    if best is not None:
        t, defect, rel, ratio = best
        return Witness(float(t), float(defect), float(rel), dom.regime, eps=float(t - 1.0),
                       min_eig_ratio=float(ratio))
    for k in range(EPS_SWEEP_LOG2 + 2, SWEEP_LIMIT_LOG2 + 1, 2):
        with mpmath.workdps(int(0.61 * k) + 30):
            eps = mpmath.mpf(2) ** -k
            defect, rel = _mp_defect_near_one(a, b, eps)
            if defect > 0:
                return Witness(float(1 + eps), float(defect), float(rel), dom.regime,
                               eps=float(eps), precision="mpmath",
                               min_eig_ratio=-float(rel) / 4)
    raise NumericalError(f"no witness for wfbm(a={a}, b={b}) with eps >= 2^-{SWEEP_LIMIT_LOG2}")
