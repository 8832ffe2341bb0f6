"""Compiled core vs numpy fallback on the hot paths.

    python3 benchmarks/bench_backends.py [--repeat 5] [--size 100000]

Reports the best wall time of each kernel per backend and checks that the
two backends agree (bitwise for the generator, 1e-13 for the beta ratio).
End-to-end sampling is timed in subprocesses so each one picks its backend
at import.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from longmem_gp import _fallback

try:
    from longmem_gp import _core
except ImportError:
    _core = None

SAMPLE_SNIPPET = (
    "from longmem_gp import FamilySpec, sample, BACKEND;"
    "from longmem_gp.pd_analysis import TimeGrid;"
    "import time; g = TimeGrid.linspace(0.1, 2.0, 50); t = time.perf_counter();"
    "sample(FamilySpec.wfbm(0.3, 0.4), g, {n}, seed=1, threads=1);"
    "print(BACKEND, time.perf_counter() - t)"
)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_kernels(size, repeat):
    rng = np.random.default_rng(0)
    x = rng.random(size)
    p = rng.uniform(0.1, 5.0, size)
    q = rng.uniform(0.1, 5.0, size)
    counters = np.arange(4 * (size // 4), dtype=np.uint64).reshape(-1, 4)
    cases = {
        "betainc_pair": lambda m: m.betainc_pair(x, p, q),
        "philox4x64": lambda m: m.philox4x64(7, 11, counters),
        "uniform_stream": lambda m: m.uniform_stream(7, 11, size),
    }
    rows = []
    for name, call in cases.items():
        slow = best(lambda: call(_fallback), repeat)
        fast = best(lambda: call(_core), repeat) if _core else float("nan")
        agree = "n/a"
        if _core:
            ref, got = call(_fallback), call(_core)
            if name == "betainc_pair":
                agree = all(np.allclose(r, g, rtol=1e-13, atol=0) for r, g in zip(ref, got))
            else:
                agree = bool(np.array_equal(ref, got))
        rows.append((name, fast, slow, agree))
    return rows


def bench_sampling(n):
    out = {}
    for pure in ("", "1"):
        env = dict(os.environ, LONGMEM_GP_PURE=pure)
        res = subprocess.run([sys.executable, "-c", SAMPLE_SNIPPET.format(n=n)], env=env,
                             capture_output=True, text=True, check=True)
        name, secs = res.stdout.split()
        out[name] = float(secs)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=100_000)
    ap.add_argument("--paths", type=int, default=20_000)
    args = ap.parse_args(argv)

    if _core is None:
        print("compiled core not built; timing the fallback only")
    print(f"{'kernel':<16}{'compiled s':>12}{'fallback s':>12}{'speedup':>10}  agree")
    for name, fast, slow, agree in bench_kernels(args.size, args.repeat):
        print(f"{name:<16}{fast:>12.4f}{slow:>12.4f}{slow / fast:>10.1f}  {agree}")
    timings = bench_sampling(args.paths)
    line = ", ".join(f"{k} {v:.3f}s" for k, v in sorted(timings.items()))
    print(f"sample wfbm(0.3, 0.4), 50 times x {args.paths} paths: {line}")


if __name__ == "__main__":
    main()
