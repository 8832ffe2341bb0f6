import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from longmem_gp.errors import DomainError, ParameterError
from longmem_gp.families import FamilySpec
from longmem_gp.kernels import (
    cov,
    cov_matrix,
    eta_cov_triple,
    eta_incr_double_integral,
    eta_incr_var,
    incr_cov,
    incr_var,
    nsfbm_cov_from_odd,
    nsfbm_cov_triple,
    wfbm_cov,
    wfbm_cov_double,
    wfbm_cov_quad,
    wfbm_incr_cov,
    wfbm_incr_var,
    wfbm_shifted_incr_cov,
)
from longmem_gp.specfun import beta

LOG2 = math.log(2.0)


def valid_ab():
    """Strategy over the positive-definite (a, b) wedge."""
    def build(u):
        a, b = u
        return a, b
    a = st.floats(-0.95, 3.0)
    return a.flatmap(lambda a: st.tuples(
        st.just(a), st.floats(max(-1.0 - a, -0.95), min(1.0, 1.0 + a))))


ALL_SPECS = [
    FamilySpec.wfbm(0, 0), FamilySpec.wfbm(0.7, -0.4), FamilySpec.wfbm(-0.5, 0.3),
    FamilySpec.sfbm(0.4), FamilySpec.sfbm(1.6), FamilySpec.nsfbm(2.5), FamilySpec.nsfbm(3.5),
    FamilySpec.nsfbm(4), FamilySpec.odd_bfbm(3.2), FamilySpec.eta(), FamilySpec.fbm(0.3),
]


class TestClosedForms:
    def test_wfbm_zero_zero_is_twice_min(self):
        assert cov(FamilySpec.wfbm(0, 0), 2.0, 3.0) == pytest.approx(4.0, rel=1e-15)

    @pytest.mark.parametrize("s,t", [(0.3, 0.9), (2.0, 1.0), (4.0, 4.0)])
    def test_sfbm_h1_is_brownian(self, s, t):
        assert cov(FamilySpec.sfbm(1.0), s, t) == pytest.approx(min(s, t), rel=1e-14)

    def test_nsfbm_three(self):
        spec = FamilySpec.nsfbm(3)
        assert cov(spec, 1.0, 2.0) == pytest.approx(5.0, rel=1e-15)
        assert cov(spec, 1.0, 1.0) == pytest.approx(2.0, rel=1e-15)

    def test_eta_diagonal(self):
        assert cov(FamilySpec.eta(), 1.0, 1.0) == pytest.approx(2 * LOG2, rel=1e-15)

    def test_wfbm_one_one(self):
        assert cov(FamilySpec.wfbm(1, 1), 1.0, 1.0) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_nsfbm_four_is_rank_one(self):
        s, t = 0.7, 1.9
        assert cov(FamilySpec.nsfbm(4), s, t) == pytest.approx(12.0 * s * s * t * t, rel=1e-15)

    def test_broadcasting(self):
        s = np.array([0.5, 1.0, 2.0])
        out = cov(FamilySpec.eta(), s[:, None], s[None, :])
        assert out.shape == (3, 3)
        assert out[1, 1] == pytest.approx(2 * LOG2)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            cov(FamilySpec.wfbm(0, 0), -1.0, 1.0)

    def test_invalid_spec_never_built(self):
        with pytest.raises(ParameterError):
            FamilySpec.wfbm(0, 1.5)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_symmetric_and_zero_at_origin(spec):
    pts = np.array([0.0, 0.2, 1.0, 1.7, 5.0])
    m = np.asarray(cov(spec, pts[:, None], pts[None, :]))
    np.testing.assert_array_equal(m, m.T)
    np.testing.assert_array_equal(m[0], 0.0)
    np.testing.assert_array_equal(cov_matrix(spec, pts), cov_matrix(spec, pts).T)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
@pytest.mark.parametrize("c", [0.5, 2.0, 10.0])
def test_self_similarity(spec, c):
    pts = np.array([0.1, 0.4, 1.3, 2.0])
    expo = 2.0 * spec.self_similarity_index
    base = np.asarray(cov(spec, pts[:, None], pts[None, :]))
    scaled = np.asarray(cov(spec, c * pts[:, None], c * pts[None, :]))
    np.testing.assert_allclose(scaled, c**expo * base, rtol=1e-10, atol=1e-13 * np.abs(base).max())


@pytest.mark.parametrize("a", [-0.3, -0.7, -0.95])
def test_boundary_variance_constant(a):
    b = -1.0 - a
    want = 2.0 * beta(a + 1.0, b + 1.0)
    for t in (1e-6, 0.3, 1.0, 40.0):
        assert cov(FamilySpec.wfbm(a, b), t, t) == pytest.approx(want, rel=1e-12)


class TestOracles:
    def test_quad_examples(self):
        assert wfbm_cov_quad(0, 0.5, 1, 1) == pytest.approx(4.0 / 3.0, rel=1e-13)
        assert wfbm_cov_quad(0, 0, 0.4, 1.3) == pytest.approx(0.8, rel=1e-13)
        assert wfbm_cov_quad(-0.5, -0.5, 1, 1) == pytest.approx(2 * math.pi, rel=1e-12)

    def test_double_examples(self):
        assert wfbm_cov_double(1, 1, 1, 1) == pytest.approx(1.0 / 3.0, rel=1e-13)
        assert wfbm_cov_double(0, 1, 1, 1) == pytest.approx(1.0, rel=1e-13)
        assert wfbm_cov_double(0, 0.5, 1, 1) == pytest.approx(4.0 / 3.0, rel=1e-13)

    def test_double_rejects_nonpositive_b(self):
        with pytest.raises(DomainError):
            wfbm_cov_double(0.5, -0.2, 1, 1)

    def test_triples(self):
        assert nsfbm_cov_triple(3, 1, 1) == pytest.approx(2.0, rel=1e-8)
        assert nsfbm_cov_triple(3, 1, 2) == pytest.approx(5.0, rel=1e-8)
        assert nsfbm_cov_triple(2.7, 0.0, 1.0) == 0.0
        assert eta_cov_triple(1, 1) == pytest.approx(2 * LOG2, rel=1e-9)
        assert eta_cov_triple(1, 2) == pytest.approx(4.5 * math.log(3) - 4 * LOG2, rel=1e-9)
        assert eta_cov_triple(0.6, 0.6) == pytest.approx(2 * 0.36 * LOG2, rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(ab=valid_ab(), s=st.floats(0.01, 8.0), t=st.floats(0.01, 8.0))
    def test_closed_form_matches_quad(self, ab, s, t):
        a, b = ab
        c = cov(FamilySpec.wfbm(a, b), s, t)
        assert abs(c - wfbm_cov_quad(a, b, s, t)) <= 1e-8 * (1 + abs(c))

    @settings(max_examples=30, deadline=None)
    @given(ab=valid_ab(), s=st.floats(0.01, 8.0), t=st.floats(0.01, 8.0))
    def test_closed_form_matches_double(self, ab, s, t):
        a, b = ab
        assume(b > 0)
        c = cov(FamilySpec.wfbm(a, b), s, t)
        assert abs(c - wfbm_cov_double(a, b, s, t)) <= 1e-8 * (1 + abs(c))

    @pytest.mark.parametrize("h", [2.5, 3.0, 3.5])
    def test_odd_part_representation(self, h):
        for s in (0.5, 1.0, 2.0):
            for t in (0.5, 1.0, 2.0):
                want = cov(FamilySpec.nsfbm(h), s, t)
                assert nsfbm_cov_from_odd(h, s, t) == pytest.approx(want, rel=1e-6)


class TestIncrements:
    def test_wfbm_incr_var_examples(self):
        assert wfbm_incr_var(0, 0.5, 1.0, 3.0) == pytest.approx(2 * 2**1.5 / 1.5, rel=1e-14)
        assert wfbm_incr_var(1, 0, 0, 1) == pytest.approx(1.0, rel=1e-14)
        assert wfbm_incr_var(0.3, -0.2, 2.0, 2.0) == 0.0

    @settings(max_examples=60, deadline=None)
    @given(ab=valid_ab(), s=st.floats(0.0, 5.0), d=st.floats(0.05, 5.0))
    def test_incr_var_matches_covariances(self, ab, s, d):
        a, b = ab
        spec = FamilySpec.wfbm(a, b)
        t = s + d
        direct = cov(spec, t, t) + cov(spec, s, s) - 2 * cov(spec, s, t)
        assert wfbm_incr_var(a, b, s, t) == pytest.approx(direct, rel=1e-10, abs=1e-12)

    def test_wfbm_incr_cov_value(self):
        # int_0^1 [(2-u)^0.5 - (1-u)^0.5] du = (2^1.5 - 2) / 1.5
        assert wfbm_incr_cov(0, 0.5, 0, 1, 1, 2) == pytest.approx((2**1.5 - 2) / 1.5, rel=1e-14)

    def test_wfbm_incr_cov_zero_for_b_zero(self):
        assert wfbm_incr_cov(1.7, 0.0, 0.1, 0.5, 0.9, 3.0) == 0.0

    @settings(max_examples=100, deadline=None)
    @given(ab=valid_ab(), pts=st.lists(st.floats(0.0, 20.0), min_size=4, max_size=4, unique=True))
    def test_increment_sign_law(self, ab, pts):
        a, b = ab
        r, v, s, t = sorted(pts)
        assume(b != 0 and abs(b) > 1e-6 and v - r > 1e-6 and t - s > 1e-6)
        q = wfbm_incr_cov(a, b, r, v, s, t)
        assert math.copysign(1.0, q) == math.copysign(1.0, b)

    def test_incr_cov_matches_four_term_sum(self):
        for spec in (FamilySpec.nsfbm(3.3), FamilySpec.sfbm(0.7), FamilySpec.eta(),
                     FamilySpec.fbm(0.8), FamilySpec.odd_bfbm(2.6)):
            r, v, s, t = 0.2, 0.9, 2.0, 3.1
            four = cov(spec, v, t) - cov(spec, v, s) - cov(spec, r, t) + cov(spec, r, s)
            assert incr_cov(spec, r, v, s, t) == pytest.approx(four, rel=1e-11)

    def test_quadruple_ordering_enforced(self):
        with pytest.raises(DomainError):
            incr_cov(FamilySpec.eta(), 0.0, 2.0, 1.0, 3.0)

    def test_eta_incr_var_values(self):
        assert eta_incr_var(0, 1) == pytest.approx(2 * LOG2, rel=1e-14)
        assert eta_incr_var(1, 1) == 0.0

    @pytest.mark.parametrize("s,t", [(0.0, 0.5), (0.3, 0.7), (1.0, 1.001), (5.0, 9.0)])
    def test_eta_incr_var_consistent(self, s, t):
        spec = FamilySpec.eta()
        direct = cov(spec, t, t) + cov(spec, s, s) - 2 * cov(spec, s, t)
        assert eta_incr_var(s, t) == pytest.approx(direct, rel=1e-9)
        # the printed triangle integral is half the variance
        assert 2 * eta_incr_double_integral(s, t) == pytest.approx(eta_incr_var(s, t), rel=1e-10)

    @pytest.mark.parametrize("n", [64, 512, 4096])
    def test_eta_bracket(self, n):
        for k in (55, 100, n - 1):
            half = eta_incr_var(k / n, (k + 1) / n) / 2
            assert math.log(k) / (2 * n * n) <= half <= math.log(k) / (n * n)

    def test_incr_var_degenerate_h2(self):
        assert incr_var(FamilySpec.sfbm(2), 0.5, 1.0) == 0.0

    def test_shifted_increment_covariance_exact_for_a_zero(self):
        b, s, t = 0.4, 1.0, 2.5
        want = (t ** (b + 1) + s ** (b + 1) - (t - s) ** (b + 1)) / (b + 1)
        assert wfbm_shifted_incr_cov(0.0, b, s, t, 1e3) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("delta", [1e-6, -1e-6])
def test_degenerate_h_near_two(delta):
    h = 2.0 + delta
    spec = FamilySpec.sfbm(h) if delta < 0 else FamilySpec.nsfbm(h)
    for s in (0.5, 1.0, 3.0):
        for t in (0.5, 1.0, 3.0):
            assert abs(cov(spec, s, t)) < 1e-5 * t * t
