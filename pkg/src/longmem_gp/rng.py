"""Counter-based normal streams keyed by ``(seed, path index)``.

Path ``i`` always sees the same numbers no matter how many paths are drawn
or which thread draws them.
"""
import os

import numpy as np
from scipy.special import ndtri

from . import _backend

MASK64 = (1 << 64) - 1


def _key(seed):
    seed = int(seed)
    if not 0 <= seed <= MASK64:
        raise ValueError("seed must fit in 64 unsigned bits")
    return seed


def uniforms(seed, path, count):
    return _backend.uniform_stream(_key(seed), int(path), int(count))


def normals(seed, path, count):
    """Standard normals by inverse CDF of the (seed, path) uniform stream."""
    return ndtri(uniforms(seed, path, count))


def normal_rows(seed, start, stop, dim):
    """Rows ``start..stop-1`` of the path-indexed normal matrix, shape ``(stop-start, dim)``."""
    out = np.empty((stop - start, dim))
    for row, path in enumerate(range(start, stop)):
        out[row] = normals(seed, path, dim)
    return out


def worker_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("LONGMEM_GP_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))
