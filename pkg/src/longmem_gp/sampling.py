"""Exact Gaussian path sampling on finite grids.

The direct sampler factorizes the Gram matrix; the representation samplers
build the same laws from two-sided fBm (even and odd parts) or from a
time-changed Brownian motion, and exist to cross-validate the kernels.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import rng
from .errors import DomainError, FactorizationError, ParameterError
from .families import Family, FamilySpec
from .kernels import cov_matrix
from .pd_analysis import GramMatrix, TimeGrid

JITTER_LEVELS = (0.0, 1e-12, 1e-10, 1e-8)
# fixed block size keeps the arithmetic identical for any worker count
BLOCK = 512


class Method(str, Enum):
    DIRECT_CHOLESKY = "DIRECT_CHOLESKY"
    EVEN_PART = "EVEN_PART"
    ODD_PART_INTEGRATED = "ODD_PART_INTEGRATED"
    TIME_CHANGED_BM = "TIME_CHANGED_BM"


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray
    jitter: float


@dataclass(frozen=True)
class PathEnsemble:
    spec: FamilySpec
    grid: TimeGrid
    paths: np.ndarray
    seed: int
    method: Method
    substeps: int | None = None
    jitter: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return self.paths.shape[0]

    def metadata(self):
        return {
            "spec": self.spec.to_dict(),
            "grid": [float(x) for x in self.grid.points],
            "n": int(self.n),
            "seed": int(self.seed),
            "method": self.method.value,
            "substeps": self.substeps,
            "jitter": self.jitter,
        }


def cholesky_with_jitter(gm, policy=JITTER_LEVELS):
    """Lower Cholesky factor of ``entries + jitter * I``.

    Jitter escalates through ``policy`` (multiples of ``trace / m``); the
    level that succeeded is recorded on the result.
    """
    m = gm.entries if isinstance(gm, GramMatrix) else np.asarray(gm, dtype=float)
    if not np.allclose(m, m.T, rtol=0, atol=0):
        raise DomainError("matrix is not symmetric")
    size = m.shape[0]
    if size == 0:
        return CholeskyFactor(np.zeros((0, 0)), 0.0)
    scale = float(np.trace(m)) / size
    for level in policy:
        jitter = level * scale
        try:
            lower = np.linalg.cholesky(m + jitter * np.eye(size))
        except np.linalg.LinAlgError:
            continue
        return CholeskyFactor(lower, jitter)
    raise FactorizationError(
        "Cholesky failed at every jitter level", min_eigenvalue=float(np.linalg.eigvalsh(m)[0]))


def _apply_factor(factor, seed, n, threads):
    """Rows ``i`` are ``factor @ z_i`` with ``z_i`` from stream ``(seed, i)``."""
    dim = factor.shape[1]
    out = np.empty((n, factor.shape[0]))
    if dim == 0 or n == 0:
        out[:] = 0.0
        return out
    starts = list(range(0, n, BLOCK))

    def work(start):
        stop = min(start + BLOCK, n)
        z = rng.normal_rows(seed, start, stop, dim)
        out[start:stop] = z @ factor.T

    workers = rng.worker_count(threads)
    if workers == 1 or len(starts) == 1:
        for start in starts:
            work(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    return out


def _as_grid(grid):
    return grid if isinstance(grid, TimeGrid) else TimeGrid(grid)


def _factor_for(spec, points):
    """Factor for the law of ``spec`` at ``points`` (zero rows where variance vanishes)."""
    m = points.size
    if spec.family in (Family.SFBM, Family.NSFBM) and spec.h == 2.0:
        return np.zeros((m, 0)), 0.0
    if spec.family is Family.NSFBM and spec.h == 4.0:
        # rank one: zeta_t = 2 sqrt(3) t^2 gamma
        return (2.0 * math.sqrt(3.0) * points**2)[:, None], 0.0
    live = points > 0
    factor = np.zeros((m, int(live.sum())))
    if live.any():
        chol = cholesky_with_jitter(cov_matrix(spec, points[live]))
        factor[live] = chol.lower
        return factor, chol.jitter
    return factor, 0.0


def sample(spec, grid, n, seed, threads=None):
    """``n`` i.i.d. paths of ``spec`` on ``grid`` by direct factorization.

    Deterministic in ``(spec, grid, n, seed)``: path ``i`` depends only on
    ``(seed, i)``.
    """
    if not isinstance(spec, FamilySpec):
        raise ParameterError("sample needs a validated FamilySpec")
    if n < 1:
        raise DomainError("n must be >= 1")
    grid = _as_grid(grid)
    factor, jitter = _factor_for(spec, grid.points)
    paths = _apply_factor(factor, seed, n, threads)
    return PathEnsemble(spec, grid, paths, int(seed), Method.DIRECT_CHOLESKY, jitter=jitter)


def _two_sided_fbm_factor(hurst, points):
    # points > 0; rows ordered as (+points, -points)
    both = np.concatenate([points, -points])
    e = 2.0 * hurst
    k = 0.5 * (np.abs(both)[:, None] ** e + np.abs(both)[None, :] ** e
               - np.abs(both[:, None] - both[None, :]) ** e)
    k = np.triu(k) + np.triu(k, 1).T
    return cholesky_with_jitter(k)


def sample_sfbm_even(h, grid, n, seed, threads=None):
    """Sub-fractional paths from the even part of a two-sided fBm with Hurst ``h/2``.

    Returns ``sqrt(2-h) (xi_t + xi_{-t}) / sqrt(2)``. The ``sqrt(2-h)``
    factor aligns the law with the ``(2-h)``-normalized kernel used by
    :func:`sample`; without it the covariance is the kernel divided by ``2-h``.
    """
    spec = FamilySpec.sfbm(h)
    if not 0 < h < 2:
        raise DomainError("even-part sampler needs 0 < h < 2")
    grid = _as_grid(grid)
    pts = grid.points
    live = pts > 0
    m = int(live.sum())
    chol = _two_sided_fbm_factor(h / 2.0, pts[live])
    # combine the +t and -t rows before applying, so one matrix does both
    combine = np.hstack([np.eye(m), np.eye(m)]) * math.sqrt((2.0 - h) / 2.0)
    factor = np.zeros((pts.size, 2 * m))
    factor[live] = combine @ chol.lower
    paths = _apply_factor(factor, seed, n, threads)
    return PathEnsemble(spec, grid, paths, int(seed), Method.EVEN_PART, jitter=chol.jitter)


def refine(points, substeps):
    """Grid ``0 = r_0 < ... `` splitting each gap of ``{0} U points`` into ``substeps``.

    Returns the refined grid and the index of each original point in it.
    """
    if substeps < 1:
        raise DomainError("substeps must be >= 1")
    knots = np.concatenate([[0.0], points[points > 0]])
    pieces = [np.array([0.0])]
    for lo, hi in zip(knots[:-1], knots[1:]):
        pieces.append(lo + (hi - lo) * np.arange(1, substeps + 1) / substeps)
    fine = np.concatenate(pieces)
    idx = np.zeros(points.size, dtype=int)
    idx[points > 0] = substeps * np.arange(1, knots.size)
    return fine, idx


def _trapezoid_matrix(fine):
    # row j integrates from 0 to fine[j] against values on fine
    dt = np.diff(fine)
    size = fine.size
    w = np.zeros((size, size))
    for j in range(1, size):
        w[j] = w[j - 1]
        w[j, j - 1] += 0.5 * dt[j - 1]
        w[j, j] += 0.5 * dt[j - 1]
    return w


def sample_nsfbm_odd_integrated(h, grid, n, seed, substeps=64, threads=None):
    """Negative sub-fractional paths as a scaled integral of the odd part of fBm.

    ``vartheta_r = xi_r - xi_{-r}`` with ``xi`` two-sided fBm of Hurst
    ``(h-2)/2``; the result is ``sqrt(h(h-1)(h-2)/2)`` times the cumulative
    trapezoid integral of ``vartheta`` on the ``substeps``-refined grid.
    """
    spec = FamilySpec.nsfbm(h)
    if not 2 < h < 4:
        raise DomainError("odd-part sampler needs 2 < h < 4")
    grid = _as_grid(grid)
    fine, idx = refine(grid.points, substeps)
    inner = fine[1:]
    m = inner.size
    chol = _two_sided_fbm_factor((h - 2.0) / 2.0, inner)
    odd = np.hstack([np.eye(m), -np.eye(m)]) @ chol.lower
    theta = np.vstack([np.zeros((1, 2 * m)), odd])  # vartheta_0 = 0
    integ = _trapezoid_matrix(fine)[idx]
    factor = math.sqrt(h * (h - 1.0) * (h - 2.0) / 2.0) * (integ @ theta)
    paths = _apply_factor(factor, seed, n, threads)
    return PathEnsemble(spec, grid, paths, int(seed), Method.ODD_PART_INTEGRATED,
                        substeps=int(substeps), jitter=chol.jitter)


def sample_wfbm_b1(a, grid, n, seed, substeps=64, threads=None):
    """Weighted fBm with ``b = 1`` as ``xi_t = int_0^t w_{r^a} dr``, ``w`` a standard Bm.

    ``w`` is sampled exactly at the times ``r_j^a`` of the refined grid and
    integrated by the trapezoid rule.
    """
    if a < 0:
        raise DomainError("b = 1 requires a >= 0")
    spec = FamilySpec.wfbm(a, 1.0)
    grid = _as_grid(grid)
    fine, idx = refine(grid.points, substeps)
    if a == 0:
        tau = np.ones_like(fine)  # 0^0 = 1 on a null set
    else:
        tau = fine**a
    dtau = np.diff(np.concatenate([[0.0], tau]))
    # w at tau_j = cumulative sum of independent increments
    bm = np.tril(np.ones((fine.size, fine.size))) * np.sqrt(dtau)[None, :]
    factor = _trapezoid_matrix(fine)[idx] @ bm
    paths = _apply_factor(factor, seed, n, threads)
    return PathEnsemble(spec, grid, paths, int(seed), Method.TIME_CHANGED_BM,
                        substeps=int(substeps))


def regenerate(meta, threads=None):
    """Rebuild an ensemble from :meth:`PathEnsemble.metadata`."""
    spec = FamilySpec.from_dict(meta["spec"])
    method = Method(meta["method"])
    grid = TimeGrid(meta["grid"])
    n, seed = meta["n"], meta["seed"]
    if method is Method.DIRECT_CHOLESKY:
        return sample(spec, grid, n, seed, threads)
    if method is Method.EVEN_PART:
        return sample_sfbm_even(spec.h, grid, n, seed, threads)
    if method is Method.ODD_PART_INTEGRATED:
        return sample_nsfbm_odd_integrated(spec.h, grid, n, seed, meta["substeps"], threads)
    return sample_wfbm_b1(spec.a, grid, n, seed, meta["substeps"], threads)


__all__ = [
    "Method",
    "CholeskyFactor",
    "PathEnsemble",
    "cholesky_with_jitter",
    "sample",
    "sample_sfbm_even",
    "sample_nsfbm_odd_integrated",
    "sample_wfbm_b1",
    "refine",
    "regenerate",
    "JITTER_LEVELS",
]
