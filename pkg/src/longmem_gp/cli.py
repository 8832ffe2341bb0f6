"""``longmem-gp`` command-line interface.

Commands: ``gen`` (sample paths), ``gram`` (Gram matrix + PSD certificate),
``verify`` (run a check suite), ``witness`` (violation witness for invalid
weighted-fBm parameters) and ``scan`` (validity map over an (a, b) lattice).

Exit status: 0 success, 1 a check failed, 2 configuration error,
3 numerical failure.
"""
import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import _backend
from .errors import DomainError, NumericalError
from .families import Family, FamilySpec, wfbm_domain
from .kernels import wfbm_cov
from .pd_analysis import TimeGrid, classify, gram, psd_certificate, violation_witness
from .sampling import (
    Method,
    sample,
    sample_nsfbm_odd_integrated,
    sample_sfbm_even,
    sample_wfbm_b1,
)
from .suites import SUITES, run_suite

SCHEMA_VERSION = 1
COMMANDS = ("gen", "gram", "verify", "witness", "scan")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

METHODS = {
    "direct": Method.DIRECT_CHOLESKY,
    "even": Method.EVEN_PART,
    "odd": Method.ODD_PART_INTEGRATED,
    "b1": Method.TIME_CHANGED_BM,
}

DEFAULTS = {
    "family": "wfbm",
    "a": None,
    "b": None,
    "h": None,
    "hurst": None,
    "grid": None,
    "start": 0.1,
    "stop": 1.0,
    "count": 10,
    "n": 1000,
    "seed": 0,
    "substeps": 64,
    "method": "direct",
    "suite": "full",
    "tol": 1e-8,
    "out": None,
}

_CASTS = {
    "a": float, "b": float, "h": float, "hurst": float,
    "start": float, "stop": float, "count": int,
    "n": int, "seed": int, "substeps": int, "tol": float,
}


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    family: str
    a: float | None
    b: float | None
    h: float | None
    hurst: float | None
    grid: list | None
    start: float
    stop: float
    count: int
    n: int
    seed: int
    substeps: int
    method: str
    suite: str
    tol: float
    out: str | None

    def spec(self):
        return FamilySpec(Family(self.family), a=self.a, b=self.b, h=self.h, hurst=self.hurst)

    def time_grid(self):
        if self.grid is not None:
            return TimeGrid(self.grid)
        return TimeGrid.linspace(self.start, self.stop, self.count)


def _parse_grid(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}") from exc


def read_config_file(path):
    """Flat ``key = value`` lines; ``#`` starts a comment; keys mirror the long flag names."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _coerce(key, value):
    if value is None:
        return None
    if key == "grid":
        return value if isinstance(value, list) else _parse_grid(value)
    cast = _CASTS.get(key)
    if cast is None:
        return str(value)
    try:
        return cast(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def build_parser():
    p = argparse.ArgumentParser(prog="longmem-gp", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("-a", type=float)
    p.add_argument("-b", type=float)
    p.add_argument("--h", type=float, dest="h")
    p.add_argument("--hurst", type=float)
    p.add_argument("--grid", type=_parse_grid, help="comma-separated times")
    p.add_argument("--start", type=float)
    p.add_argument("--stop", type=float)
    p.add_argument("--count", type=int)
    p.add_argument("-n", type=int, help="number of paths")
    p.add_argument("--seed", type=int)
    p.add_argument("--substeps", type=int)
    p.add_argument("--method", choices=sorted(METHODS))
    p.add_argument("--suite", choices=SUITES)
    p.add_argument("--tol", type=float)
    p.add_argument("--out", help="output file (or stem for two-file outputs)")
    p.add_argument("--config", help="flat key = value file; flags take precedence")
    return p


def resolve(args):
    """Merge defaults, the config file and flags, in increasing precedence."""
    merged = dict(DEFAULTS)
    if args.config:
        for key, value in read_config_file(args.config).items():
            merged[key] = _coerce(key, value)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["method"] not in METHODS:
        raise ConfigError(f"unknown method {merged['method']!r}")
    if merged["suite"] not in SUITES:
        raise ConfigError(f"unknown suite {merged['suite']!r}")
    try:
        Family(merged["family"])
    except ValueError as exc:
        raise ConfigError(f"unknown family {merged['family']!r}") from exc
    return RunConfig(command=args.command, **merged)


# ------------------------------------------------------------------- writers

def _fmt(x):
    return format(float(x), ".17g")


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def matrix_csv(times, matrix):
    return csv_text([_fmt(t) for t in times], ([_fmt(x) for x in row] for row in matrix))


def json_text(payload):
    body = {"schema_version": SCHEMA_VERSION, **payload}
    return json.dumps(body, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _paths(cfg, default_stem, suffixes):
    stem = Path(cfg.out) if cfg.out else Path(default_stem)
    if len(suffixes) == 1:
        return [stem if stem.suffix else stem.with_suffix(suffixes[0])]
    base = stem.with_suffix("") if stem.suffix else stem
    return [base.with_suffix(s) for s in suffixes]


# ------------------------------------------------------------------ commands

def _generate(cfg, spec, grid):
    method = METHODS[cfg.method]
    if method is Method.DIRECT_CHOLESKY:
        return sample(spec, grid, cfg.n, cfg.seed)
    if method is Method.EVEN_PART:
        return sample_sfbm_even(spec.h, grid, cfg.n, cfg.seed)
    if method is Method.ODD_PART_INTEGRATED:
        return sample_nsfbm_odd_integrated(spec.h, grid, cfg.n, cfg.seed, cfg.substeps)
    return sample_wfbm_b1(spec.a, grid, cfg.n, cfg.seed, cfg.substeps)


def cmd_gen(cfg):
    spec = cfg.spec()
    grid = cfg.time_grid()
    ens = _generate(cfg, spec, grid)
    csv_path, meta_path = _paths(cfg, "ensemble", [".csv", ".json"])
    atomic_write(csv_path, matrix_csv(grid.points, ens.paths))
    meta = {**ens.metadata(), "config": asdict(cfg), "backend": _backend.NAME,
            "csv": csv_path.name}
    atomic_write(meta_path, json_text(meta))
    return EXIT_OK


def cmd_gram(cfg):
    spec = cfg.spec()
    gm = gram(spec, cfg.time_grid())
    cert = psd_certificate(gm, tol=cfg.tol)
    csv_path, json_path = _paths(cfg, "gram", [".csv", ".json"])
    atomic_write(csv_path, matrix_csv(gm.grid.points, gm.entries))
    atomic_write(json_path, json_text({"spec": spec.to_dict(), "certificate": cert.to_dict(),
                                       "config": asdict(cfg)}))
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_verify(cfg):
    spec = cfg.spec()
    reports = run_suite(spec, cfg.suite, seed=cfg.seed, tol=cfg.tol, n=cfg.n)
    (path,) = _paths(cfg, "reports", [".json"])
    payload = {"config": asdict(cfg), "reports": [r.to_dict() for r in reports],
               "all_pass": all(r.passed for r in reports)}
    atomic_write(path, json_text(payload))
    return EXIT_OK if payload["all_pass"] else EXIT_FAIL


def _wfbm_params(cfg):
    if cfg.family != Family.WFBM.value:
        raise ConfigError("witness and scan apply to the wfbm family")
    return cfg.a, cfg.b


def cmd_witness(cfg):
    a, b = _wfbm_params(cfg)
    if a is None or b is None:
        raise ConfigError("witness needs -a and -b")
    verdict = classify("wfbm", a, b, witness=False)
    wit = violation_witness(a, b)
    (path,) = _paths(cfg, "witness", [".json"])
    atomic_write(path, json_text({"a": a, "b": b, "verdict": verdict.to_dict(),
                                  "witness": wit.to_dict(), "config": asdict(cfg)}))
    return EXIT_OK


def scan_lattice(count):
    """``a_i = -1 + 4i/count``, ``b_j = -1 + 2.5j/count`` for ``i, j = 1..count``."""
    i = np.arange(1, count + 1)
    return -1.0 + 4.0 * i / count, -1.0 + 2.5 * i / count


def cmd_scan(cfg):
    _wfbm_params(cfg)
    a_vals, b_vals = scan_lattice(cfg.count)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for a in a_vals:
        for b in b_vals:
            verdict = classify("wfbm", a, b, witness=False)
            grid = TimeGrid.random(rng, 20, 0.0, 10.0)
            if wfbm_domain(a, b).regime.value == "DIVERGENT":
                lam = ""
            else:
                pts = grid.points
                m = wfbm_cov(a, b, pts[:, None], pts[None, :])
                lam = _fmt(psd_certificate(np.triu(m) + np.triu(m, 1).T, tol=cfg.tol).min_eigenvalue)
            rows.append([_fmt(a), _fmt(b), verdict.status, lam])
    (path,) = _paths(cfg, "scan", [".csv"])
    atomic_write(path, csv_text(["a", "b", "verdict", "minEigenvalue"], rows))
    return EXIT_OK


HANDLERS = {"gen": cmd_gen, "gram": cmd_gram, "verify": cmd_verify,
            "witness": cmd_witness, "scan": cmd_scan}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits 2 on malformed flags
    try:
        cfg = resolve(args)
        return HANDLERS[cfg.command](cfg)
    except (ConfigError, DomainError) as exc:
        print(f"longmem-gp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"longmem-gp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
