import math

import numpy as np
import pytest

from longmem_gp.errors import DomainError, FactorizationError, ParameterError
from longmem_gp.families import FamilySpec
from longmem_gp.kernels import cov
from longmem_gp.pd_analysis import TimeGrid, gram
from longmem_gp.properties import check_empirical_cov
from longmem_gp.sampling import (
    Method,
    cholesky_with_jitter,
    refine,
    regenerate,
    sample,
    sample_nsfbm_odd_integrated,
    sample_sfbm_even,
    sample_wfbm_b1,
)


def var_z(ens, idx, want):
    x = ens.paths[:, idx]
    emp = float(np.mean(x * x))
    se = math.sqrt(2.0 * want * want / ens.n)
    return (emp - want) / se


class TestCholesky:
    def test_scalar(self):
        np.testing.assert_allclose(cholesky_with_jitter(np.array([[4.0]])).lower, [[2.0]])

    def test_two_by_two(self):
        f = cholesky_with_jitter(np.array([[2.0, 2.0], [2.0, 4.0]]))
        r = math.sqrt(2.0)
        np.testing.assert_allclose(f.lower, [[r, 0], [r, r]], rtol=1e-15)
        assert f.jitter == 0.0

    def test_rank_one_needs_jitter(self):
        f = cholesky_with_jitter(gram(FamilySpec.nsfbm(4), [1.0, 2.0]))
        assert f.jitter > 0

    def test_indefinite_raises(self):
        with pytest.raises(FactorizationError) as info:
            cholesky_with_jitter(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert info.value.min_eigenvalue == pytest.approx(-1.0)


class TestDirect:
    def test_wfbm_variance(self):
        ens = sample(FamilySpec.wfbm(0, 0), [1.0], 100_000, seed=5)
        assert abs(var_z(ens, 0, 2.0)) < 3

    def test_rank_one_ratio_exact(self):
        ens = sample(FamilySpec.nsfbm(4), [1.0, 2.0], 500, seed=1)
        np.testing.assert_array_equal(ens.paths[:, 1], 4.0 * ens.paths[:, 0])

    def test_zero_process_at_h2(self):
        ens = sample(FamilySpec.sfbm(2.0), [0.5, 1.0], 10, seed=1)
        assert not ens.paths.any()

    def test_empty_grid(self):
        ens = sample(FamilySpec.eta(), TimeGrid([]), 4, seed=0)
        assert ens.paths.shape == (4, 0)

    def test_time_zero_is_zero(self):
        ens = sample(FamilySpec.eta(), [0.0, 1.0], 50, seed=3)
        assert not ens.paths[:, 0].any()

    def test_needs_spec(self):
        with pytest.raises(ParameterError):
            sample("eta", [1.0], 3, 0)
        with pytest.raises(DomainError):
            sample(FamilySpec.eta(), [1.0], 0, 0)

    def test_empirical_covariance(self):
        ens = sample(FamilySpec.wfbm(0, 0), [1.0, 2.0, 3.0], 20_000, seed=11)
        assert check_empirical_cov(ens).passed


class TestDeterminism:
    def test_prefix_stable(self):
        spec = FamilySpec.sfbm(0.6)
        big = sample(spec, [0.5, 1.0, 2.0], 1500, seed=42)
        small = sample(spec, [0.5, 1.0, 2.0], 700, seed=42)
        np.testing.assert_array_equal(big.paths[:700], small.paths)

    @pytest.mark.parametrize("threads", [1, 4, 8])
    def test_thread_count_irrelevant(self, threads):
        spec = FamilySpec.wfbm(0.3, 0.4)
        ref = sample(spec, [0.2, 0.9, 1.4], 2100, seed=9, threads=1)
        got = sample(spec, [0.2, 0.9, 1.4], 2100, seed=9, threads=threads)
        assert ref.paths.tobytes() == got.paths.tobytes()

    @pytest.mark.parametrize("maker", [
        lambda: sample(FamilySpec.eta(), [0.5, 1.0], 30, 2),
        lambda: sample_sfbm_even(0.8, [0.5, 1.0], 30, 2),
        lambda: sample_nsfbm_odd_integrated(3.0, [0.5, 1.0], 30, 2, substeps=8),
        lambda: sample_wfbm_b1(0.5, [0.5, 1.0], 30, 2, substeps=8),
    ])
    def test_regenerate_round_trip(self, maker):
        ens = maker()
        again = regenerate(ens.metadata())
        np.testing.assert_array_equal(again.paths, ens.paths)
        assert again.method is ens.method


class TestRepresentations:
    def test_even_part_h1_variance(self):
        ens = sample_sfbm_even(1.0, [1.0], 20_000, seed=3)
        assert abs(var_z(ens, 0, 1.0)) < 3

    def test_even_part_zero_time(self):
        ens = sample_sfbm_even(0.5, [0.0, 1.0], 100, seed=3)
        assert not ens.paths[:, 0].any()

    def test_even_part_covariance(self):
        ens = sample_sfbm_even(0.7, [0.5, 1.0], 20_000, seed=8)
        assert check_empirical_cov(ens).passed

    def test_odd_integrated_matches_kernel(self):
        ens = sample_nsfbm_odd_integrated(3.0, [1.0, 2.0], 20_000, seed=4, substeps=64)
        assert ens.method is Method.ODD_PART_INTEGRATED
        assert check_empirical_cov(ens, allowance=2e-2).passed
        assert not sample_nsfbm_odd_integrated(3.0, [0.0, 1.0], 5, 4, 8).paths[:, 0].any()

    @pytest.mark.parametrize("a,want", [(0.0, 1.0), (1.0, 1.0 / 3.0)])
    def test_time_changed_bm_variance(self, a, want):
        ens = sample_wfbm_b1(a, [1.0], 20_000, seed=6, substeps=64)
        emp = float(np.mean(ens.paths[:, 0] ** 2))
        # trapezoid bias is O(substeps^-2)
        assert abs(emp - want) < 3 * math.sqrt(2 * want * want / ens.n) + 1e-3

    def test_time_changed_bm_covariance(self):
        ens = sample_wfbm_b1(0.5, [0.4, 1.0, 1.6], 20_000, seed=2, substeps=64)
        assert check_empirical_cov(ens, allowance=1e-2).passed
        assert cov(FamilySpec.wfbm(0.5, 1.0), 1.0, 1.6) > 0

    def test_representation_domains(self):
        with pytest.raises(DomainError):
            sample_sfbm_even(2.0, [1.0], 3, 0)
        with pytest.raises(DomainError):
            sample_nsfbm_odd_integrated(4.0, [1.0], 3, 0)
        with pytest.raises(DomainError):
            sample_wfbm_b1(-0.5, [1.0], 3, 0)

    def test_refine(self):
        fine, idx = refine(np.array([0.0, 1.0, 3.0]), 4)
        np.testing.assert_allclose(fine, [0, 0.25, 0.5, 0.75, 1, 1.5, 2, 2.5, 3])
        np.testing.assert_array_equal(idx, [0, 4, 8])
