import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklwedge.density import WedgeSpec
from dunklwedge.laplace import (LaplaceQuery, euler_form_valid, even_fd_arguments,
                                expected_ratio, laplace_even_closed, laplace_numeric,
                                laplace_odd_closed, laplace_p2_remark, laplace_p2_remark_raw,
                                weight_exponent)
from dunklwedge.simplex import QuadratureControl


def test_query_validation():
    spec = WedgeSpec.even(2, 0.75)
    q = LaplaceQuery(spec, 1.0)
    assert q.phi == pytest.approx(math.pi / 8)
    assert q.weight == pytest.approx(1.5 - 2 * 0.25)
    with pytest.raises(ValueError):
        LaplaceQuery(spec, 0.0)


def test_weight_exponent_odd():
    assert weight_exponent(WedgeSpec.odd(3, 0.8)) == pytest.approx(2 - 3 * 0.3)


def test_euler_validity_flag():
    assert euler_form_valid(2, 0.9)
    assert not euler_form_valid(4, 0.6)


@given(st.integers(2, 6), st.floats(1e-3, 50))
def test_fd_arguments_nonpositive(p, y):
    z = even_fd_arguments(p, y)
    assert len(z) == p - 1
    assert all(x <= 0 for x in z)


def test_fd_arguments_exceed_unit_disc_for_small_y():
    assert min(even_fd_arguments(3, 0.01)) < -1


def test_sin_squared_identity():
    assert math.sin(math.pi / 8) ** 2 == pytest.approx((math.sqrt(2) - 1) / (2 * math.sqrt(2)),
                                                       rel=1e-15)


@pytest.mark.parametrize("k", [0.6, 0.75, 1.0])
@pytest.mark.parametrize("y", [0.05, 0.7, 4.0])
def test_p2_closed_is_eight_times_remark(k, y):
    spec = WedgeSpec.even(2, k)
    assert laplace_even_closed(spec, y).value == pytest.approx(8 * laplace_p2_remark(k, y),
                                                               rel=1e-12)


def test_remark_pfaff_pair():
    # 2F1(a, b; c; x) at x = 2/(1-w) and at its Pfaff image 2/(1+w)
    k, y = 0.75, 0.4
    w = math.sqrt(2) * (1 + 2 * y)
    raw = laplace_p2_remark_raw(k, y)
    x = 2 / (1 - w)
    transformed = laplace_p2_remark(k, y) * (1 + w) ** 2 / (1 + y) ** (0.5 - 2 * (k - 0.5))
    assert raw == pytest.approx((1 - x) ** (-2) * transformed, rel=1e-12)


@pytest.mark.parametrize("p,k", [(2, 0.75), (3, 0.9)])
def test_even_flatness(p, k):
    spec = WedgeSpec.even(p, k)
    ratios = [laplace_numeric(spec, y).value / laplace_even_closed(spec, y).value
              for y in (0.3, 1.0, 4.0)]
    np.testing.assert_allclose(ratios, expected_ratio(spec), rtol=1e-8)


def test_odd_fd_matches_kernel():
    spec = WedgeSpec.odd(3, 0.8)
    quad = QuadratureControl(degree=40)
    for y in (0.2, 2.0):
        a = laplace_odd_closed(spec, y, quad, form="kernel").value
        b = laplace_odd_closed(spec, y, form="fd").value
        assert a == pytest.approx(b, rel=1e-10)


def test_odd_flatness():
    spec = WedgeSpec.odd(3, 0.8)
    ratios = [laplace_numeric(spec, y).value / laplace_odd_closed(spec, y).value
              for y in (0.3, 2.0)]
    np.testing.assert_allclose(ratios, expected_ratio(spec), rtol=1e-8)


def test_printed_odd_form_is_not_flat():
    spec = WedgeSpec.odd(3, 0.8)
    r = [laplace_numeric(spec, y).value / laplace_odd_closed(spec, y, form="printed").value
         for y in (0.2, 5.0)]
    assert abs(r[0] / r[1] - 1) > 0.5


def test_odd_closed_rejects_unknown_form():
    with pytest.raises(ValueError):
        laplace_odd_closed(WedgeSpec.odd(3, 0.8), 1.0, form="other")


def test_parity_guards():
    with pytest.raises(ValueError):
        laplace_even_closed(WedgeSpec.odd(3, 0.8), 1.0)
    with pytest.raises(ValueError):
        laplace_odd_closed(WedgeSpec.even(2, 0.8), 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.55, 1.0), st.floats(0.05, 10))
def test_closed_transform_decreasing_in_y(k, y):
    spec = WedgeSpec.even(2, k)
    assert laplace_even_closed(spec, y * 1.1).value < laplace_even_closed(spec, y).value
