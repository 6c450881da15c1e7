"""Weighted Laplace transforms of V0 for bisector starting points.

For a start on the bisector the two angle families of the simplex
representation coincide, and E[V0^w e^(-y V0)], with w from
:func:`weight_exponent`, can
be integrated in v under the simplex integral. Closed forms are available up
to a constant depending only on the wedge:

* even wedges: a Lauricella F_D^(p-1) function;
* odd wedges: a simplex integral of (1 - X(u)/sqrt(1+y))^(-n).

:func:`laplace_numeric` integrates the density directly and is the oracle for
the flatness checks (closed / numeric constant in y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import WedgeSpec, _default_cutoff, _v_integral, decay_rate, density_values
from .simplex import QuadratureControl, integrate_many
from .specfun import (DEFAULT_SERIES, Evaluation, SeriesControl, hyp1f1_log, hyp2f1,
                      lauricella_fd)

__all__ = [
    "LaplaceQuery",
    "weight_exponent",
    "even_fd_arguments",
    "laplace_even_closed",
    "laplace_p2_remark",
    "laplace_p2_remark_raw",
    "laplace_odd_closed",
    "laplace_numeric",
    "expected_ratio",
    "euler_form_valid",
]


@dataclass(frozen=True)
class LaplaceQuery:
    spec: WedgeSpec
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError(f"y must be > 0, got {self.y}")

    @property
    def weight(self) -> float:
        """Exponent w of the weight V0^w."""
        return weight_exponent(self.spec)

    @property
    def phi(self) -> float:
        return self.spec.bisector


def weight_exponent(spec: WedgeSpec) -> float:
    """(p+1)/2 - p nu for an even wedge of index p, (n+1)/2 - n nu for an odd one."""
    m = spec.index
    return (m + 1) / 2 - m * spec.nu


def _check_y(y):
    if not y > 0:
        raise ValueError(f"y must be > 0, got {y}")


def euler_form_valid(p: int, k: float) -> bool:
    """Whether p(k-1) + 1/2 > 0, the condition for an Euler-type integral of F_D."""
    return p * (k - 1) + 0.5 > 0


def even_fd_arguments(p: int, y: float) -> list[float]:
    """z_s = -sin((2s+1)pi/(2p)) sin(s pi/p) / (y + sin^2(pi/(4p))), s = 1..p-1.

    Every z_s is <= 0 for y > 0, but |z_s| exceeds 1 for small y, so the
    F_D evaluation goes through the Pfaff transform there.
    """
    _check_y(y)
    den = y + math.sin(math.pi / (4 * p)) ** 2
    z = [-math.sin((2 * s + 1) * math.pi / (2 * p)) * math.sin(s * math.pi / p) / den
         for s in range(1, p)]
    assert all(x <= 1e-15 for x in z), f"F_D arguments must be non-positive: {z}"
    return [min(x, 0.0) for x in z]


def laplace_even_closed(spec: WedgeSpec, y: float,
                        ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """(1+y)^(-(p(nu-1)+(p+1)/2)) [y + sin^2(pi/(4p))]^(-p) F_D(p; k..k; pk; z).

    sin^(2nu)(2p phi) equals 1 on the bisector. ``meta["fd"]`` holds the F_D
    factor and ``meta["fd_branch"]`` the evaluation branch.
    """
    if spec.parity != "even":
        raise ValueError("laplace_even_closed needs an even wedge")
    _check_y(y)
    p, k, nu = spec.index, spec.k, spec.nu
    z = even_fd_arguments(p, y)
    fd = lauricella_fd(p, [k] * (p - 1), p * k, z, ctl)
    logpre = (-(p * (nu - 1) + (p + 1) / 2) * math.log1p(y)
              - p * math.log(y + math.sin(math.pi / (4 * p)) ** 2))
    pre = math.exp(logpre)
    return Evaluation(pre * fd.value, pre * fd.abs_err_est, fd.count, fd.converged,
                      {"fd": fd.value, "fd_branch": fd.meta["branch"], "z": z})


def laplace_p2_remark_raw(k: float, y: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """2F1(2, k; 2k; 2/(1 - w)) with w = sqrt(2)(1 + 2y), the F_D^(1) of the p = 2 case."""
    _check_y(y)
    w = math.sqrt(2) * (1 + 2 * y)
    return hyp2f1(2, k, 2 * k, 2 / (1 - w), ctl).value


def laplace_p2_remark(k: float, y: float, ctl: SeriesControl = DEFAULT_SERIES) -> float:
    """(1+y)^(1/2 - 2nu) (1+w)^(-2) 2F1(2, k; 2k; 2/(1+w)), w = sqrt(2)(1 + 2y).

    This is the p = 2 closed form after the Pfaff (Euler) transform, whose
    argument lies in (0, 1). It equals laplace_even_closed / 8 exactly:
    [y + sin^2(pi/8)]^(-2) (1-w)^2 = 8 for this w.
    """
    _check_y(y)
    nu = k - 0.5
    w = math.sqrt(2) * (1 + 2 * y)
    f = hyp2f1(2, k, 2 * k, 2 / (1 + w), ctl, branch="direct").value
    return (1 + y) ** (0.5 - 2 * nu) / (1 + w) ** 2 * f


def _odd_cosines(n):
    s = np.arange(1, n + 1)
    return np.cos((4 * s + 1) * np.pi / (2 * n))


def laplace_odd_closed(spec: WedgeSpec, y: float, quad: QuadratureControl = QuadratureControl(),
                       ctl: SeriesControl = DEFAULT_SERIES, form: str = "kernel") -> Evaluation:
    """Odd-wedge weighted Laplace transform up to a constant.

    With X(u) = sum u_s cos((4s+1) pi/(2n)) and R = sqrt(1+y):

    * ``"kernel"``: R^(-(n+1)) int prod u^(k-1) (1 - X/R)^(-n) du, the v-integral
      of the kernel sum_N Gamma((N+n)/2) z^N / N! after Legendre duplication;
    * ``"fd"``: the same quantity as (1 - c/R)^(-n) Gamma(k)^n / Gamma(nk)
      F_D(n; k..k; nk; z) with c = cos(pi/(2n)), z_s = (c_s - c)/(R - c) <= 0;
    * ``"printed"``: R^(-(n+1)) int prod u^(k-1) 1F1(n; nk; X/R) du. This is the
      transform of a kernel carrying an extra 1/(nk)_N; it is not proportional
      to the numerical transform and is kept for comparison only.
    """
    if spec.parity != "odd":
        raise ValueError("laplace_odd_closed needs an odd wedge")
    _check_y(y)
    n, k = spec.n, spec.k
    R = math.sqrt(1 + y)
    cs = _odd_cosines(n)
    pre = R ** (-(n + 1))
    if form == "fd":
        c = math.cos(math.pi / (2 * n))
        # the top cosine sits at s = n; the remaining ones become F_D arguments
        z = [float((cs[s] - c) / (R - c)) for s in range(n - 1)]
        fd = lauricella_fd(n, [k] * (n - 1), n * k, z, ctl)
        scale = pre * (1 - c / R) ** (-n) * math.exp(n * math.lgamma(k) - math.lgamma(n * k))
        return Evaluation(scale * fd.value, scale * fd.abs_err_est, fd.count, fd.converged,
                          {"form": "fd", "fd": fd.value, "fd_branch": fd.meta["branch"]})
    if form == "kernel":
        def f(U):
            return (1 - (U @ cs) / R) ** (-n)
    elif form == "printed":
        def f(U):
            lf, sf, _, _ = hyp1f1_log(n, n * k, (U @ cs) / R, ctl)
            return sf * np.exp(lf)
    else:
        raise ValueError(f"form must be 'kernel', 'fd' or 'printed', got {form!r}")
    val, err, count = integrate_many(n, k, f, quad)
    return Evaluation(pre * float(val), pre * float(err), count, True,
                      {"form": form, "method": quad.method})


def laplace_numeric(spec: WedgeSpec, y: float, ctl: SeriesControl = DEFAULT_SERIES,
                    quad: QuadratureControl = QuadratureControl(), form: str = "integral",
                    tol: float = 1e-6, v_cutoff: float | None = None) -> Evaluation:
    """int_0^oo v^w e^(-y v) f(v) dv with f the unnormalised density on the bisector.

    w is :func:`weight_exponent`; the tail is handled as in
    :func:`dunklwedge.density.normalize`.
    """
    _check_y(y)
    phi = spec.bisector
    rate = decay_rate(spec, phi) + y
    beta = weight_exponent(spec) + spec.n * spec.nu
    auto = v_cutoff is None
    if auto:
        v_cutoff = _default_cutoff(beta, rate, tol)

    def fun(v):
        return np.exp(-y * v) * density_values(spec, phi, v, form, ctl, quad, with_power=False)[0]

    return _v_integral(fun, beta, rate, v_cutoff, tol, auto)


def expected_ratio(spec: WedgeSpec) -> float:
    """numeric / closed implied by the conventions of this package.

    Even: Gamma(p) Gamma(pk + 1/2) / Gamma(2pk). Odd (kernel form):
    2^(1-n) sqrt(pi) Gamma(n) / Gamma(k)^n.
    """
    k = spec.k
    if spec.parity == "even":
        p = spec.index
        return math.exp(math.lgamma(p) + math.lgamma(p * k + 0.5) - math.lgamma(2 * p * k))
    n = spec.n
    return math.exp((1 - n) * math.log(2) + 0.5 * math.log(math.pi) + math.lgamma(n)
                    - n * math.lgamma(k))
