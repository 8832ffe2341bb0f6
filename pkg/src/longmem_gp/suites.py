"""Named groups of checks run by ``longmem-gp verify``."""
import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import kernels, properties, rng
from .families import Family
from .pd_analysis import TimeGrid, classify, gram, psd_certificate
from .properties import IncrRegion, LrdQuadruple, VerificationReport
from .sampling import regenerate, sample

SUITES = ("kernels", "pd", "sampling", "properties", "full")


def _oracle_report(spec, tol):
    pts = np.array([0.25, 0.7, 1.0, 1.9, 3.0])
    fam = spec.family
    worst = 0.0
    if fam is Family.WFBM:
        pairs = [(s, t) for s in pts for t in pts]
        oracles = [lambda s, t: kernels.wfbm_cov_quad(spec.a, spec.b, s, t)]
        if 0 < spec.b <= 1:
            oracles.append(lambda s, t: kernels.wfbm_cov_double(spec.a, spec.b, s, t))
    elif fam is Family.NSFBM and 2 < spec.h < 4:
        pairs = [(0.5, 1.0), (1.0, 1.0)]
        oracles = [lambda s, t: kernels.nsfbm_cov_triple(spec.h, s, t)]
        tol = max(tol, 1e-4)
    elif fam is Family.ETA:
        pairs = [(0.5, 1.0), (1.0, 2.0)]
        oracles = [kernels.eta_cov_triple]
        tol = max(tol, 1e-6)
    else:
        return None
    for oracle in oracles:
        for s, t in pairs:
            ref = oracle(s, t)
            val = kernels.cov(spec, s, t)
            worst = max(worst, abs(val - ref) / max(abs(ref), 1e-300))
    return VerificationReport("kernel_oracle", spec, {"pairs": len(pairs)}, worst, tol)


def _symmetry_report(spec, seed):
    grid = TimeGrid.random(np.random.default_rng(seed), 12, 0.0, 5.0)
    pts = grid.points
    m = np.asarray(kernels.cov(spec, pts[:, None], pts[None, :]), dtype=float)
    scale = max(float(np.abs(m).max()), 1e-300)
    defect = float(np.abs(m - m.T).max()) / scale
    defect = max(defect, float(np.abs(kernels.cov(spec, 0.0, pts)).max()))
    return VerificationReport("kernel_symmetry", spec, {"seed": seed}, defect, 1e-14)


def kernel_checks(spec, seed, tol):
    jobs = [lambda: _symmetry_report(spec, seed),
            lambda: properties.check_self_similarity(spec, seed=seed),
            lambda: _oracle_report(spec, tol)]
    return jobs


def _pd_report(spec, seed, tol):
    verdict = classify(spec.family, spec.a, spec.b, spec.h, spec.hurst, witness=False)
    grid = TimeGrid.random(np.random.default_rng(seed), 20, 0.0, 10.0)
    cert = psd_certificate(gram(spec, grid), tol=tol)
    # defect: how far the smallest eigenvalue sits below zero, in units of the trace
    defect = max(0.0, -cert.min_eigenvalue) / max(cert.trace, 1e-300)
    return VerificationReport(
        "psd_certificate", spec, {"seed": seed, "grid_size": 20, "tol": tol},
        defect if verdict.valid else float("inf"), tol,
        details={"status": verdict.status, "regime": verdict.regime.value,
                 "min_eigenvalue": cert.min_eigenvalue, "trace": cert.trace})


def pd_checks(spec, seed, tol):
    return [lambda: _pd_report(spec, seed, tol)]


def _sampling_reports(spec, seed, n, threads):
    grid = TimeGrid([0.5, 1.0, 1.5, 2.0, 3.0])
    ens = sample(spec, grid, n, seed, threads)
    emp = properties.check_empirical_cov(ens)
    again = regenerate(ens.metadata(), threads)
    same = float(not np.array_equal(again.paths, ens.paths))
    rep = VerificationReport("regenerate_identical", spec, {"n": n, "seed": seed}, same, 0.0)
    return [emp, rep]


def sampling_checks(spec, seed, n, threads):
    return [lambda: _sampling_reports(spec, seed, n, threads)]


def _wfbm_regions(spec):
    a, b = spec.a, spec.b
    out = [IncrRegion("upper_b1", 0.1 if a < 0 else 0.0, 1.0)]
    if a < 0 and 1 + a + b > 0:
        out.append(IncrRegion("upper_c", 0.0, 1.0))
    out.append(IncrRegion("lower_b1", 0.1 if a > 0 else 0.0, 1.0))
    return out


def property_checks(spec):
    fam = spec.family
    quad = LrdQuadruple(0.0, 1.0, 1.0, 2.0)
    jobs = []
    if fam is Family.WFBM:
        a, b = spec.a, spec.b
        jobs += [
            lambda: properties.check_lrd_limit(spec, quad),
            lambda: properties.check_asymptotic_homogeneity(a, b, 1.0, 2.0),
            lambda: properties.check_short_long_asymptotics(a, b, 1.0),
            lambda: properties.check_quadratic_variation(spec),
            lambda: properties.check_markov_defect(spec, 1.0, 2.0, 3.0,
                                                   threshold=None if b == 0 else 1e-12),
            lambda: properties.check_increment_sign(spec),
        ]
        jobs += [lambda r=r: properties.check_incr_var_bounds(spec, r) for r in _wfbm_regions(spec)]
    elif fam in (Family.SFBM, Family.NSFBM):
        if spec.h != 2.0:
            jobs += [lambda: properties.check_lrd_limit(spec, quad),
                     lambda: properties.check_quadratic_variation(spec)]
        if fam is Family.NSFBM and 2 < spec.h < 4:
            jobs += [lambda r=r: properties.check_incr_var_bounds(spec, r)
                     for r in (IncrRegion("upper_2", 0.0, 2.0), IncrRegion("lower_2", 0.1, 2.0),
                               IncrRegion("lower_h", 0.0, 2.0))]
    elif fam is Family.ETA:
        jobs += [lambda: properties.check_lrd_limit(spec, quad),
                 lambda: properties.check_quadratic_variation(spec),
                 properties.check_variation_growth]
    elif fam is Family.FBM and spec.hurst == 0.5:
        jobs.append(lambda: properties.check_markov_defect(spec, 1.0, 2.0, 3.0))
    return jobs


def _sort_key(report):
    return report.check_name, json.dumps(report.to_dict()["parameters"], sort_keys=True)


def run_suite(spec, suite="full", seed=0, tol=1e-8, n=2000, threads=None):
    """Run one suite and return its reports in deterministic (sorted-by-name) order.

    Checks are independent and run concurrently.
    """
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    jobs = []
    if suite in ("kernels", "full"):
        jobs += kernel_checks(spec, seed, tol)
    if suite in ("pd", "full"):
        jobs += pd_checks(spec, seed, tol)
    if suite in ("sampling", "full"):
        jobs += sampling_checks(spec, seed, n, threads)
    if suite in ("properties", "full"):
        jobs += property_checks(spec)
    workers = rng.worker_count(threads)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda job: job(), jobs))
    reports = []
    for res in results:
        if res is None:
            continue
        reports.extend(res if isinstance(res, list) else [res])
    return sorted(reports, key=_sort_key)
