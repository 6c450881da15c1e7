import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklwedge.density import (DensityTable, NormalizationError, StartPoint, WedgeSpec,
                                check_idgeg, decay_rate, density_cdf, density_table,
                                density_unnorm, density_values, even_density_unnorm,
                                even_series_term, idgeg_float_scale, normalize,
                                normalizing_constant_exact, odd_density_unnorm, odd_series_term,
                                p2_mu_form, p2_simplex_form)
from dunklwedge.simplex import QuadratureControl

# Unnormalised density, summed independently with mpmath at 40 digits
# (term-by-term series with mp.hyp1f1 and mp.gegenbauer, both signs).
FROZEN = [
    (("even", 2, 0.75), 0.3, 1.0, 0.30015613933055137723),
    (("even", 2, 0.6), 0.2, 5.0, 0.066147473317859854448),
    (("even", 3, 0.9), 0.4, 2.0, 0.031967018827790065639),
    (("odd", 3, 0.8), 0.5, 2.0, 0.24126316443219548289),
    (("odd", 5, 0.7), 0.3, 0.5, 0.32176284180335823264),
]


class TestWedgeSpec:
    def test_geometry(self):
        s = WedgeSpec.even(2, 0.75)
        assert s.n == 4 and s.chamber == pytest.approx(math.pi / 4)
        assert s.bisector == pytest.approx(math.pi / 8)
        assert s.nu == pytest.approx(0.25) and s.multiplicity == pytest.approx(0.25)
        assert s.hits
        assert WedgeSpec.odd(5, 0.8).chamber == pytest.approx(math.pi / 5)

    @pytest.mark.parametrize("args", [("even", 1, 0.8), ("odd", 4, 0.8), ("odd", 1, 0.8),
                                      ("even", 2, 0.5), ("even", 2, 1.01), ("mixed", 2, 0.8)])
    def test_rejects_invalid(self, args):
        with pytest.raises(ValueError):
            WedgeSpec(*args)

    def test_nonhitting_allowed_on_request(self):
        s = WedgeSpec("even", 2, 0.4, require_hitting=False)
        assert not s.hits
        with pytest.raises(ValueError, match=r"\(1/2, 1\]"):
            WedgeSpec("even", 2, 0.4)

    def test_start_point(self):
        s = WedgeSpec.even(2, 0.75)
        StartPoint(1.0, 0.3).check(s)
        with pytest.raises(ValueError):
            StartPoint(1.0, 0.8).check(s)
        with pytest.raises(ValueError):
            StartPoint(0.0, 0.3).check(s)


class TestDensityValues:
    @pytest.mark.parametrize("wedge,phi,v,ref", FROZEN)
    @pytest.mark.parametrize("form", ["series", "integral"])
    def test_frozen_values(self, wedge, phi, v, ref, form):
        spec = WedgeSpec(*wedge)
        assert density_unnorm(spec, phi, v, form).value == pytest.approx(ref, rel=1e-11)

    def test_vectorised_matches_scalar(self):
        spec = WedgeSpec.even(2, 0.75)
        v = np.array([0.5, 1.0, 3.0])
        vals, errs = density_values(spec, 0.3, v)
        for vi, x in zip(v, vals):
            assert x == pytest.approx(density_unnorm(spec, 0.3, vi, "integral").value, rel=1e-14)
        assert np.all(errs >= 0)

    def test_rejects_bad_input(self):
        spec = WedgeSpec.even(2, 0.75)
        with pytest.raises(ValueError):
            density_unnorm(spec, 0.3, 0.0)
        with pytest.raises(ValueError):
            density_unnorm(spec, 0.9, 1.0)
        with pytest.raises(ValueError):
            density_values(spec, 0.3, [1.0], form="other")

    def test_parity_wrappers(self):
        with pytest.raises(ValueError):
            even_density_unnorm(WedgeSpec.odd(3, 0.8), 0.3, 1.0)
        with pytest.raises(ValueError):
            odd_density_unnorm(WedgeSpec.even(2, 0.8), 0.3, 1.0)

    @settings(max_examples=15, deadline=None)
    @given(st.sampled_from([("even", 2), ("even", 3), ("odd", 3)]), st.floats(0.55, 1.0),
           st.floats(0.05, 0.95), st.floats(0.1, 8.0))
    def test_series_matches_integral(self, wedge, k, frac, v):
        spec = WedgeSpec(wedge[0], wedge[1], k)
        phi = frac * spec.chamber
        s = density_unnorm(spec, phi, v, "series").value
        i = density_unnorm(spec, phi, v, "integral").value
        assert s == pytest.approx(i, rel=1e-8)

    @settings(max_examples=15, deadline=None)
    @given(st.sampled_from([("even", 2), ("odd", 3), ("odd", 5)]), st.floats(0.55, 1.0),
           st.floats(0.05, 0.95), st.floats(0.1, 8.0))
    def test_reflection_symmetry(self, wedge, k, frac, v):
        # equal multiplicities: the wedge is symmetric about its bisector
        spec = WedgeSpec(wedge[0], wedge[1], k)
        a = density_unnorm(spec, frac * spec.chamber, v, "integral").value
        b = density_unnorm(spec, (1 - frac) * spec.chamber, v, "integral").value
        assert a > 0
        assert a == pytest.approx(b, rel=1e-9)

    def test_odd_series_accepts_any_n(self):
        assert math.isfinite(odd_series_term(4, 0.8, 0.3, 1.0, 1).value)
        with pytest.raises(ValueError):
            odd_series_term(2, 0.8, 0.3, 1.0, 1)

    def test_even_series_single_branch(self):
        # the + branch alone is the p = 2 one-family integral
        for phi in (0.1, 0.7):
            assert even_series_term(2, 0.75, phi, 2.0, 1).value == pytest.approx(
                p2_simplex_form(0.75, phi, 2.0), rel=1e-12)


class TestP2Reduction:
    @pytest.mark.parametrize("k", [0.6, 0.75, 1.0])
    @pytest.mark.parametrize("phi", [0.1, 0.39, 0.7])
    def test_simplex_equals_mu_form(self, k, phi):
        for v in (0.5, 2.0, 10.0):
            assert p2_simplex_form(k, phi, v) == pytest.approx(p2_mu_form(k, phi, v), rel=1e-12)


class TestNormalization:
    def test_exact_constant(self):
        spec = WedgeSpec.even(2, 0.75)
        assert normalizing_constant_exact(spec) == pytest.approx(
            math.sqrt(math.pi) * math.gamma(0.25) / (4 * math.gamma(0.75)))

    @pytest.mark.parametrize("wedge,phi", [(("even", 2, 0.75), 0.3), (("odd", 3, 0.8), 0.2),
                                           (("even", 3, 0.9), 0.1)])
    def test_numeric_matches_exact(self, wedge, phi):
        spec = WedgeSpec(*wedge)
        assert normalize(spec, phi) == pytest.approx(normalizing_constant_exact(spec), rel=1e-8)

    def test_explicit_cutoff_too_small(self):
        with pytest.raises(NormalizationError):
            normalize(WedgeSpec.even(2, 0.75), 0.3, v_cutoff=5.0)

    def test_details(self):
        ev = normalize(WedgeSpec.even(2, 0.75), 0.3, details=True)
        assert ev.meta["v_cutoff"] > 5 and ev.meta["tail"] >= 0

    def test_decay_rate(self):
        spec = WedgeSpec.even(2, 0.75)
        assert decay_rate(spec, 0.1) == pytest.approx(math.sin(0.1) ** 2)
        assert decay_rate(spec, spec.chamber - 0.1) == pytest.approx(math.sin(0.1) ** 2)


class TestTablesAndCdf:
    def test_table_csv(self):
        spec = WedgeSpec.even(2, 0.75)
        c = normalizing_constant_exact(spec)
        tb = density_table(spec, 0.3, [0.5, 1.0], normalizing_constant=c)
        text = tb.to_csv(["demo"])
        lines = text.splitlines()
        assert lines[0] == "# demo"
        assert lines[1] == "v,unnormalized,normalized,form,abs_err"
        assert len(lines) == 4
        np.testing.assert_allclose(tb.normalized * c, tb.unnormalized)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            DensityTable(np.array([1.0, 0.5]), np.ones(2), np.ones(2), "series", 1.0)

    def test_cdf_is_a_distribution(self):
        spec = WedgeSpec.even(2, 0.75)
        cdf = density_cdf(spec, spec.bisector, quad=QuadratureControl(degree=24))
        v = np.array([0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 1e4])
        F = cdf(v)
        assert F[0] == 0 and F[-1] == pytest.approx(1.0, abs=1e-9)
        assert np.all(np.diff(F) >= 0)
        # values frozen from an independent mpmath quadrature of the density
        np.testing.assert_allclose(F[1:6], [0.169, 0.302, 0.4946, 0.712, 0.886], atol=2e-3)
        assert cdf.normalizing_constant == pytest.approx(normalizing_constant_exact(spec),
                                                         rel=1e-6)


class TestIdentity:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 8), st.integers(2, 5), st.floats(0.55, 1.0),
           st.floats(0, math.pi))
    def test_exact_route(self, M, q, k, xi):
        lhs, rhs = check_idgeg(M, q, k, xi)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 8), st.integers(2, 5), st.floats(0.55, 1.0),
           st.floats(0, math.pi))
    def test_floating_route(self, M, q, k, xi):
        lhs, rhs = check_idgeg(M, q, k, xi, exact=False)
        assert abs(lhs - rhs) <= 1e-13 * idgeg_float_scale(M, q, k, xi)

    def test_structural_zero(self):
        # no (m, j) with 2m + 3j = 1: both sides vanish
        assert check_idgeg(1, 3, 0.8, 0.5) == (0.0, 0.0)

    def test_m_zero(self):
        lhs, rhs = check_idgeg(0, 3, 0.8, 1.0)
        assert lhs == pytest.approx(1 / math.gamma(2.4), rel=1e-14)
        assert rhs == pytest.approx(1 / math.gamma(2.4), rel=1e-14)
