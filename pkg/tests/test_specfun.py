import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklwedge.specfun import (DEFAULT_SERIES, Evaluation, FoxWrightParams, SeriesControl,
                                alternating_pochhammer_sum, exact_poly_coeff, fox_wright,
                                fox_wright_series, gegenbauer, gegenbauer_all,
                                gegenbauer_hyp2f1, hyp1f1, hyp1f1_euler, hyp1f1_int_log,
                                hyp1f1_log, hyp2f1, lauricella_fd, lauricella_fd_euler,
                                log_pochhammer, odd_kernel, odd_kernel_log,
                                odd_kernel_series_log, pochhammer)

mp.mp.dps = 30


def rel(a, b):
    return abs(a - b) / abs(b)


class TestControls:
    def test_series_control_validation(self):
        with pytest.raises(ValueError):
            SeriesControl(tol=0)
        with pytest.raises(ValueError):
            SeriesControl(n_min=10, n_max=5)

    def test_evaluation_rejects_negative_error(self):
        with pytest.raises(ValueError):
            Evaluation(1.0, -1e-3)

    def test_rel_err_est(self):
        assert Evaluation(2.0, 1e-3).rel_err_est == pytest.approx(5e-4)
        assert Evaluation(0.0, 0.0).rel_err_est == 0.0
        assert math.isinf(Evaluation(0.0, 1e-3).rel_err_est)


class TestPochhammer:
    def test_small_values(self):
        assert pochhammer(0.5, 0) == 1.0
        assert pochhammer(0.5, 3) == pytest.approx(0.5 * 1.5 * 2.5)

    def test_rejects_bad_order(self):
        with pytest.raises(ValueError):
            pochhammer(1.0, -1)

    @given(st.floats(0.05, 20), st.integers(0, 40))
    def test_log_matches_product(self, a, m):
        assert log_pochhammer(a, m) == pytest.approx(math.log(pochhammer(a, m)), rel=1e-10, abs=1e-12)

    @given(st.integers(0, 12), st.floats(0.05, 3))
    def test_alternating_sum(self, m, k):
        assert alternating_pochhammer_sum(m, k) == pytest.approx(
            pochhammer(k, m) / math.factorial(m), rel=1e-12)


class TestHyp1F1:
    @pytest.mark.parametrize("a,c,z", [(0.5, 1.7, 3.0), (2.0, 2.25, 10.0), (1.2, 4.0, -6.0),
                                       (3.0, 5.5, 25.0), (7.5, 12.0, 80.0), (2.0, 3.1, -40.0)])
    def test_against_mpmath(self, a, c, z):
        assert rel(hyp1f1(a, c, z).value, float(mp.hyp1f1(a, c, z))) < 1e-13

    def test_kummer_branch_flag(self):
        assert hyp1f1(1.0, 2.0, -3.0).meta["kummer"]
        assert not hyp1f1(1.0, 2.0, 3.0).meta["kummer"]

    def test_pole_rejected(self):
        with pytest.raises(ValueError):
            hyp1f1(1.0, -2.0, 1.0)

    @settings(max_examples=60)
    @given(st.floats(0.1, 6), st.floats(0.1, 6), st.floats(-30, 30))
    def test_kummer_transformation(self, a, dc, z):
        c = a + dc
        lhs = hyp1f1(a, c, z).value
        rhs = math.exp(z) * hyp1f1(c - a, c, -z).value
        assert lhs == pytest.approx(rhs, rel=1e-11)

    @settings(max_examples=40)
    @given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(-20, 20))
    def test_series_vs_euler(self, a, dc, z):
        c = a + dc
        assert hyp1f1(a, c, z).value == pytest.approx(hyp1f1_euler(a, c, z).value, rel=1e-9)

    def test_log_form_vectorised(self):
        a = np.array([1.0, 3.0, 10.0])
        lf, sf, _, ok = hyp1f1_log(a, 5.5, 12.0)
        assert np.all(ok)
        ref = [float(mp.log(mp.hyp1f1(x, 5.5, 12.0))) for x in a]
        np.testing.assert_allclose(lf, ref, rtol=1e-13)
        assert np.all(sf == 1)

    @pytest.mark.parametrize("a,c", [(2, 2.25), (3, 2.9), (4, 6.5)])
    @pytest.mark.parametrize("z", [0.5, 30.0, 59.0, 61.0, 200.0, 2000.0])
    def test_integer_a_fast_path(self, a, c, z):
        lf, sf, _, ok = hyp1f1_int_log(a, c, np.array([z]))
        assert ok[0] and sf[0] == 1
        assert lf[0] == pytest.approx(float(mp.log(mp.hyp1f1(a, c, z))), rel=1e-13)


class TestHyp2F1:
    @pytest.mark.parametrize("a,b,c,z", [(2, 0.75, 1.5, 0.3), (2, 0.75, 1.5, -3.0),
                                         (1.5, 0.6, 2.2, 0.9), (2, 0.9, 1.8, -0.99)])
    def test_against_mpmath(self, a, b, c, z):
        assert rel(hyp2f1(a, b, c, z).value, float(mp.hyp2f1(a, b, c, z))) < 1e-12

    def test_pfaff_and_direct_agree(self):
        d = hyp2f1(2, 0.75, 1.5, -0.4, branch="direct")
        p = hyp2f1(2, 0.75, 1.5, -0.4, branch="pfaff")
        assert d.value == pytest.approx(p.value, rel=1e-13)
        assert p.meta["branch"] == "pfaff"


class TestGegenbauer:
    @pytest.mark.parametrize("j", [0, 1, 2, 7, 30])
    @pytest.mark.parametrize("k", [0.6, 1.0, 2.5])
    def test_against_mpmath(self, j, k):
        for x in (-0.95, -0.2, 0.4, 1.0):
            assert gegenbauer(j, k, x) == pytest.approx(float(mp.gegenbauer(j, k, x)),
                                                        rel=1e-12, abs=1e-13)

    @given(st.integers(0, 30), st.floats(0.1, 3), st.floats(-1, 1))
    def test_parity(self, j, k, x):
        assert gegenbauer(j, k, -x) == pytest.approx((-1) ** j * gegenbauer(j, k, x),
                                                     rel=1e-12, abs=1e-12)

    @given(st.integers(0, 30), st.floats(0.1, 3), st.floats(-1, 1))
    def test_recurrence_vs_hypergeometric(self, j, k, x):
        assert gegenbauer(j, k, x) == pytest.approx(gegenbauer_hyp2f1(j, k, x), rel=1e-10,
                                                    abs=1e-10)

    def test_value_at_one(self):
        # C_j^(k)(1) = (2k)_j / j!
        for j in range(12):
            assert gegenbauer(j, 0.8, 1.0) == pytest.approx(pochhammer(1.6, j) / math.factorial(j))

    def test_stack_matches_single(self):
        x = np.linspace(-1, 1, 7)
        stack = gegenbauer_all(9, 0.7, x)
        np.testing.assert_allclose(stack[9], gegenbauer(9, 0.7, x))


class TestLauricella:
    def test_one_variable_is_2f1(self):
        ev = lauricella_fd(2.0, [0.75], 1.5, [0.3])
        assert ev.value == pytest.approx(hyp2f1(2.0, 0.75, 1.5, 0.3).value, rel=1e-13)

    @pytest.mark.parametrize("z", [(0.3, -0.5), (-0.9, -3.0), (0.6, 0.2)])
    def test_two_variables_is_appell_f1(self, z):
        a, b1, b2, c = 1.5, 0.7, 0.9, 2.4
        ev = lauricella_fd(a, [b1, b2], c, list(z))
        assert rel(ev.value, float(mp.appellf1(a, b1, b2, c, *z))) < 1e-11

    def test_series_vs_euler(self):
        a, d, c, z = 3.0, [0.8, 0.8], 2.4, [-0.4, 0.2]
        assert lauricella_fd(a, d, c, z).value == pytest.approx(
            lauricella_fd_euler(a, d, c, z).value, rel=1e-8)

    def test_direct_rejects_large_arguments(self):
        with pytest.raises(ValueError):
            lauricella_fd(2.0, [0.7], 1.4, [-1.5], branch="direct")

    def test_pfaff_needs_nonpositive(self):
        with pytest.raises(ValueError):
            lauricella_fd(2.0, [0.7], 1.4, [0.5], branch="pfaff")


class TestFoxWright:
    def test_params_validation(self):
        with pytest.raises(ValueError):
            FoxWrightParams(1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            FoxWrightParams(1.0, 2.0, 1.0, 0.5)
        with pytest.raises(ValueError):
            FoxWrightParams(1.0, 0.5, -1.0, 0.0)

    def test_reduces_to_1f1(self):
        # a_step = b_step = 1: Gamma(a) / Gamma(c) 1F1(a; c; z)
        ev = fox_wright(FoxWrightParams(2.0, 1.0, 3.5, 1.0), 4.0)
        ref = math.gamma(2.0) / math.gamma(3.5) * hyp1f1(2.0, 3.5, 4.0).value
        assert ev.value == pytest.approx(ref, rel=1e-13)

    def test_series_against_mpmath(self):
        n, k, z = 3, 0.8, 2.5
        ref = mp.nsum(lambda N: mp.gamma((N + n) / 2) / (mp.rf(n * k, N) * mp.factorial(N)) * z ** N,
                      [0, mp.inf])
        assert fox_wright_series(n, k, z).value == pytest.approx(float(ref), rel=1e-13)


class TestOddKernel:
    @staticmethod
    def ref(n, z):
        pts = [0, mp.inf] if z <= 2 else [0, z / 2 - 5, z / 2, z / 2 + 5, mp.inf]
        return 2 * mp.quad(lambda s: s ** (n - 1) * mp.exp(-s * s + z * s), pts)

    @pytest.mark.parametrize("n", [3, 5, 7])
    @pytest.mark.parametrize("z", [-60.0, -27.0, -5.0, -0.3, 0.0, 0.7, 6.0, 40.0])
    def test_closed_form_against_integral(self, n, z):
        lf, sf, _, _ = odd_kernel_log(n, np.array([z]))
        assert sf[0] == 1
        assert lf[0] == pytest.approx(float(mp.log(self.ref(n, z))), rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5])
    @pytest.mark.parametrize("z", [-4.0, 0.5, 6.0])
    def test_closed_form_against_power_series(self, n, z):
        lc = odd_kernel_log(n, np.array([z]))[0][0]
        ls = odd_kernel_series_log(n, np.array([z]))[0]
        # the alternating series loses about log10(e^(z^2/2)) digits for z < 0
        tol = 1e-11 if z > 0 else 1e-9
        assert float(np.ravel(ls)[0]) == pytest.approx(lc, rel=tol, abs=tol)

    def test_value_at_zero(self):
        assert odd_kernel(3, 0.0).value == pytest.approx(math.gamma(1.5))

    @given(st.floats(-80, 80))
    def test_positive_and_increasing(self, z):
        lo = odd_kernel_log(3, np.array([z]))[0][0]
        hi = odd_kernel_log(3, np.array([z + 0.1]))[0][0]
        assert np.isfinite(lo) and hi > lo


class TestExactPoly:
    def test_binomial(self):
        from fractions import Fraction
        one = [Fraction(1), Fraction(1), Fraction(0), Fraction(0)]
        assert exact_poly_coeff([one, one, one], 2) == 3
