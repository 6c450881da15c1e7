import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dunklwedge.simplex import (QuadratureControl, SimplexIntegrandError, SimplexPoint,
                                dirichlet_integral, dirichlet_sample, dirichlet_samples,
                                integrate_many, simplex_integrate, simplex_rule)


def test_control_validation():
    with pytest.raises(ValueError):
        QuadratureControl(method="gauss")
    with pytest.raises(ValueError):
        QuadratureControl(method="mc", samples=10)
    with pytest.raises(ValueError):
        QuadratureControl(degree=1)
    with pytest.raises(ValueError):
        QuadratureControl(workers=0)


def test_simplex_point_validation():
    SimplexPoint(np.array([0.25, 0.75]))
    with pytest.raises(ValueError):
        SimplexPoint(np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        SimplexPoint(np.array([1.0]))


@settings(max_examples=30)
@given(st.integers(2, 5), st.floats(0.3, 2.0), st.integers(0, 2**32))
def test_samples_lie_on_simplex(p, k, seed):
    u = dirichlet_samples(k, p, 50, np.random.default_rng(seed))
    assert np.all(u >= 0)
    np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-14)
    dirichlet_sample(k, p, np.random.default_rng(seed))


@pytest.mark.parametrize("p", [2, 3, 4])
def test_rule_weights_sum_to_dirichlet_integral(p):
    U, W = simplex_rule(p, 0.7, 12)
    np.testing.assert_allclose(U.sum(axis=1), 1.0, atol=1e-14)
    assert W.sum() == pytest.approx(dirichlet_integral([0.7] * p), rel=1e-13)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.floats(0.5, 1.0), st.lists(st.integers(0, 3), min_size=4, max_size=4))
def test_tensor_rule_exact_on_monomials(p, k, powers):
    powers = powers[:p]
    beta = [k + a for a in powers]
    ev = simplex_integrate(p, k, lambda U: np.prod(U ** np.array(powers), axis=1),
                           QuadratureControl(degree=8))
    assert ev.value == pytest.approx(dirichlet_integral(beta), rel=1e-12)


def test_monte_carlo_within_standard_errors():
    f = lambda U: np.exp(U[:, 0] - U[:, 2])  # noqa: E731
    ref = simplex_integrate(3, 0.8, f, QuadratureControl(degree=30)).value
    mc = simplex_integrate(3, 0.8, f, QuadratureControl(method="mc", samples=40_000, seed=3))
    assert abs(mc.value - ref) <= 4 * mc.abs_err_est
    assert mc.count == 40_000


def test_monte_carlo_is_seeded_and_worker_independent():
    f = lambda U: U[:, 0] ** 2  # noqa: E731
    a = simplex_integrate(3, 0.8, f, QuadratureControl(method="mc", samples=200_000, seed=7))
    b = simplex_integrate(3, 0.8, f, QuadratureControl(method="mc", samples=200_000, seed=7,
                                                      workers=3))
    c = simplex_integrate(3, 0.8, f, QuadratureControl(method="mc", samples=200_000, seed=8))
    assert a.value == b.value
    assert a.value != c.value


def test_integrate_many_vector_output():
    def f(U):
        return np.stack([U[:, 0], U[:, 1] ** 2], axis=1)

    vals, errs, _ = integrate_many(2, 0.75, f, QuadratureControl(degree=10))
    assert vals[0] == pytest.approx(dirichlet_integral([1.75, 0.75]), rel=1e-13)
    assert vals[1] == pytest.approx(dirichlet_integral([0.75, 2.75]), rel=1e-13)
    assert errs.shape == (2,)


def test_non_finite_integrand_reports_point():
    with pytest.raises(SimplexIntegrandError) as info:
        simplex_integrate(2, 0.75, lambda U: 1 / (U[:, 0] - U[:, 0]), QuadratureControl(degree=4))
    assert info.value.point.shape == (2,)


def test_dirichlet_integral_closed_form():
    assert dirichlet_integral([1.0, 1.0]) == pytest.approx(1.0)
    assert dirichlet_integral([0.5, 0.5]) == pytest.approx(math.pi)
