import os

import numpy as np
import pytest

from longmem_gp import _backend, _fallback, rng

core = pytest.importorskip("longmem_gp._core")


@pytest.mark.skipif(bool(os.environ.get("LONGMEM_GP_PURE")), reason="fallback forced")
def test_backend_prefers_compiled_core():
    assert _backend.NAME == "compiled"


def test_philox_matches_numpy_bit_generator():
    gen = np.random.Philox(key=np.array([12345, 7], dtype=np.uint64),
                           counter=np.zeros(4, dtype=np.uint64))
    want = gen.random_raw(4 * 6)
    counters = np.zeros((6, 4), dtype=np.uint64)
    counters[:, 0] = np.arange(1, 7)  # numpy increments before each block
    got_py = _fallback.philox4x64(12345, 7, counters).ravel()
    got_c = core.philox4x64(12345, 7, counters).ravel()
    np.testing.assert_array_equal(got_py, want)
    np.testing.assert_array_equal(got_c, want)


@pytest.mark.parametrize("count", [1, 3, 4, 5, 1000])
def test_uniform_streams_agree(count):
    a = _fallback.uniform_stream(2**63 + 5, 11, count)
    b = core.uniform_stream(2**63 + 5, 11, count)
    np.testing.assert_array_equal(a, b)
    assert np.all((a > 0) & (a < 1))


def test_betainc_backends_agree():
    r = np.random.default_rng(3)
    x = r.random(2000)
    p = r.uniform(0.01, 20, 2000)
    q = r.uniform(0.01, 20, 2000)
    lo_c, up_c = core.betainc_pair(x, p, q)
    lo_p, up_p = _fallback.betainc_pair(x, p, q)
    np.testing.assert_allclose(lo_c, lo_p, atol=5e-15)
    np.testing.assert_allclose(up_c, up_p, atol=5e-15)


def test_path_stream_independent_of_request_size():
    long = rng.normals(9, 4, 100)
    short = rng.normals(9, 4, 7)
    np.testing.assert_array_equal(long[:7], short)


def test_worker_count_reads_env(monkeypatch):
    monkeypatch.setenv("LONGMEM_GP_THREADS", "3")
    assert rng.worker_count() == 3
    assert rng.worker_count(5) == 5
