"""Density of V0 = rho^2 / (2 T0) for dihedral wedges.

T0 is the first time a radial Dunkl process with common multiplicity 1 - k
hits the boundary of the wedge {0 < theta < pi/n}. The even wedge of index p
has n = 2p; an odd wedge has odd n >= 3. With nu = k - 1/2, the unnormalised
density is

    sin^(2 nu)(n phi) e^(-v) v^(n nu - 1) * 1/2 [S_+(v) + S_-(v)],

    S_sign(v) = sum_j sign^j Gamma(n(j+1)/2) / Gamma(n(j+k)) v^(nj/2)
                1F1(n(j+1)/2; n(j+k)+1; v) C_j^(k)(cos n phi).

The same quantity has simplex-integral forms (``form="integral"``), one per
parity, that are manifestly positive and numerically far better behaved for
large v than the alternating series.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .simplex import QuadratureControl, integrate_many, simplex_rule
from .specfun import (DEFAULT_SERIES, Evaluation, SeriesControl, exact_poly_coeff,
                      gegenbauer, hyp1f1_int_log, hyp1f1_log, odd_kernel_log)
from .vquad import adaptive_panels

V_BATCH = 64

__all__ = [
    "WedgeSpec",
    "StartPoint",
    "DensityTable",
    "NormalizationError",
    "wedge_series",
    "even_series_term",
    "odd_series_term",
    "density_unnorm",
    "even_density_unnorm",
    "odd_density_unnorm",
    "density_values",
    "normalize",
    "normalizing_constant_exact",
    "decay_rate",
    "density_table",
    "density_cdf",
    "check_idgeg",
    "idgeg_float_scale",
    "p2_simplex_form",
    "p2_mu_form",
]


@dataclass(frozen=True)
class WedgeSpec:
    """Wedge geometry and multiplicity.

    ``index`` is p for an even wedge (angle pi/(2p)) and the odd n >= 3 for an
    odd wedge (angle pi/n). The process runs with multiplicity ``1 - k``; it
    hits the boundary almost surely iff 1 - k < 1/2, hence the requirement
    k in (1/2, 1]. ``require_hitting=False`` lifts that bound (k > 0 only),
    which the simulator uses to exercise the non-hitting regime.
    """

    parity: str
    index: int
    k: float
    require_hitting: bool = True

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if int(self.index) != self.index:
            raise ValueError("index must be an integer")
        if self.parity == "even" and self.index < 2:
            raise ValueError(f"even wedge needs p >= 2, got {self.index}")
        if self.parity == "odd" and (self.index < 3 or self.index % 2 == 0):
            raise ValueError(f"odd wedge needs an odd n >= 3, got {self.index}")
        if self.require_hitting and not 0.5 < self.k <= 1:
            raise ValueError(
                f"k must lie in (1/2, 1] so that the multiplicity 1-k < 1/2 makes the "
                f"boundary hit almost surely; got k={self.k}")
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")

    @classmethod
    def even(cls, p: int, k: float) -> "WedgeSpec":
        return cls("even", p, k)

    @classmethod
    def odd(cls, n: int, k: float) -> "WedgeSpec":
        return cls("odd", n, k)

    @property
    def n(self) -> int:
        """Number of reflecting lines; the wedge angle is pi/n."""
        return 2 * self.index if self.parity == "even" else self.index

    @property
    def nu(self) -> float:
        return self.k - 0.5

    @property
    def multiplicity(self) -> float:
        return 1.0 - self.k

    @property
    def chamber(self) -> float:
        return math.pi / self.n

    @property
    def bisector(self) -> float:
        return math.pi / (2 * self.n)

    @property
    def hits(self) -> bool:
        return self.multiplicity < 0.5


@dataclass(frozen=True)
class StartPoint:
    rho: float
    phi: float

    def check(self, spec: WedgeSpec) -> "StartPoint":
        if not self.rho > 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")
        if not 0 < self.phi < spec.chamber:
            raise ValueError(f"phi must lie in (0, {spec.chamber}), got {self.phi}")
        return self


class NormalizationError(RuntimeError):
    pass


@dataclass
class DensityTable:
    v_grid: np.ndarray
    unnormalized: np.ndarray
    normalized: np.ndarray
    form: str
    normalizing_constant: float
    abs_err: np.ndarray = field(default=None)

    def __post_init__(self):
        self.v_grid = np.asarray(self.v_grid, dtype=float)
        if np.any(self.v_grid <= 0) or np.any(np.diff(self.v_grid) <= 0):
            raise ValueError("v_grid must be strictly increasing and positive")
        if self.abs_err is None:
            self.abs_err = np.zeros_like(self.v_grid)

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["v", "unnormalized", "normalized", "form", "abs_err"])
        for row in zip(self.v_grid, self.unnormalized, self.normalized, self.abs_err):
            w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                        self.form, repr(float(row[3]))])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# series form


def _check_phi(n, phi):
    if not 0 < phi < math.pi / n:
        raise ValueError(f"phi must lie strictly inside (0, pi/{n}), got {phi}")


def wedge_series(n: int, k: float, phi: float, v: float, sign: int,
                 ctl: SeriesControl = DEFAULT_SERIES, shift: float = 0.0,
                 block: int = 16) -> Evaluation:
    """e^(-shift) * sum_j sign^j Gamma(n(j+1)/2)/Gamma(n(j+k)) v^(nj/2)
    1F1(n(j+1)/2; n(j+k)+1; v) C_j^(k)(cos n phi).

    All Gamma ratios and 1F1 magnitudes are combined in log space. The
    roundoff part of the error estimate scales with sum |term|, which exposes
    the cancellation that grows like e^(v (1 - max M)) for large v.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    x = math.cos(n * phi)
    logv = math.log(v)
    terms: list[float] = []
    c_prev, c_cur = None, None
    small = 0
    ok = False
    j0 = 0
    while j0 < ctl.n_max and not ok:
        j = np.arange(j0, j0 + block, dtype=float)
        a = n * (j + 1) / 2
        c = n * (j + k) + 1
        logF, sF, _, conv = hyp1f1_log(a, c, v, ctl)
        if not np.all(conv):
            break
        logpre = gammaln(a) - gammaln(n * (j + k)) + (n * j / 2) * logv - shift
        mags = np.exp(logpre + logF) * sF
        for i, jj in enumerate(range(j0, j0 + block)):
            # Gegenbauer recurrence carried across blocks
            if jj == 0:
                cj = 1.0
            elif jj == 1:
                cj = 2 * k * x
            else:
                cj = (2 * (jj + k - 1) * x * c_cur - (jj + 2 * k - 2) * c_prev) / jj
            c_prev, c_cur = c_cur, cj
            t = (sign ** jj) * mags[i] * cj
            terms.append(t)
            s = math.fsum(terms)
            small = small + 1 if abs(t) <= ctl.tol * abs(s) else 0
            if small >= 3 and len(terms) >= ctl.n_min:
                ok = True
                break
        j0 += block
    total = math.fsum(terms)
    abs_sum = math.fsum(abs(t) for t in terms)
    err = 3 * abs(terms[-1]) + 8 * np.finfo(float).eps * abs_sum * math.sqrt(len(terms))
    return Evaluation(total, err, len(terms), ok, {"abs_sum": abs_sum})


def even_series_term(p: int, k: float, phi: float, v: float, sign: int,
                     ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """Even-wedge series Sum_j sign^j Gamma(p(j+1))/Gamma(2p(j+k)) v^(pj) 1F1(...) C_j(cos 2p phi)."""
    _check_phi(2 * p, phi)
    return wedge_series(2 * p, k, phi, v, sign, ctl)


def odd_series_term(n: int, k: float, phi: float, v: float, sign: int,
                    ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """Odd-wedge series with v^(nj/2); any integer n >= 3 is accepted here."""
    if n < 3:
        raise ValueError("n must be >= 3")
    _check_phi(n, phi)
    return wedge_series(n, k, phi, v, sign, ctl)


# ---------------------------------------------------------------------------
# integral form


def _even_angles(p, phi):
    s = np.arange(1, p + 1)
    plus = np.cos(phi + s * np.pi / p) ** 2
    minus = np.cos(phi - (2 * s - 1) * np.pi / (2 * p)) ** 2
    return plus, minus


def _odd_angles(n, phi):
    s = np.arange(1, n + 1)
    plus = np.cos(phi + 2 * s * np.pi / n)
    minus = np.cos(phi - (2 * s - 1) * np.pi / n)
    return plus, minus


def _even_log_const(p, k):
    # Gamma(p) Gamma(pk) / (Gamma(k)^p Gamma(2pk))
    return (math.lgamma(p) + math.lgamma(p * k) - p * math.lgamma(k)
            - math.lgamma(2 * p * k))


def decay_rate(spec: WedgeSpec, phi: float) -> float:
    """Exponential decay rate of the density in v: sin^2 of the distance to the nearest wall."""
    d = min(phi, spec.chamber - phi)
    return math.sin(d) ** 2


def _auto_degree(quad: QuadratureControl, v, spread):
    """Gauss-Jacobi degree able to resolve exp(-v * spread * t) near a vertex."""
    need = int(math.ceil(2.2 * math.sqrt(max(v * spread, 1.0)))) + 8
    need = min(need, 160)
    return max(quad.degree, 8 * ((need + 7) // 8))


def _integral_scaled(spec: WedgeSpec, phi, v, ctl, quad):
    """e^v-scaled simplex integral factor: returns (values, errors, count) over the v array.

    values[i] = 1/2 * C * int prod u^(k-1) e^(-v_i) [g_+(u, v_i) + g_-(u, v_i)] du,
    where C and g are the parity-specific constant and integrand.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    n, k = spec.n, spec.k
    if spec.parity == "even":
        p = spec.index
        cp, cm = _even_angles(p, phi)
        dim = p
        logC = _even_log_const(p, k)
        c1 = p * k + 0.5

        def g(U, vv):
            Mp = U @ cp
            Mm = U @ cm
            z = np.concatenate([vv[None, :] * Mp[:, None], vv[None, :] * Mm[:, None]], axis=1)
            lf = hyp1f1_int_log(p, c1, z, ctl)[0]
            e = np.exp(lf - np.concatenate([vv, vv])[None, :])
            return e[:, :len(vv)] + e[:, len(vv):]
        spread = max(cp.max() - cp.min(), cm.max() - cm.min())
    else:
        cp, cm = _odd_angles(n, phi)
        dim = n
        logC = -n * math.lgamma(k)

        def g(U, vv):
            Xp = U @ cp
            Xm = U @ cm
            sq = 2 * np.sqrt(vv)
            z = np.concatenate([sq[None, :] * Xp[:, None], sq[None, :] * Xm[:, None]], axis=1)
            lf = odd_kernel_log(n, z, ctl)[0]
            e = np.exp(lf - np.concatenate([vv, vv])[None, :])
            return e[:, :len(vv)] + e[:, len(vv):]
        # log K_n(2 sqrt(v) X) ~ v X^2, whose slope near the top vertex is ~ 2 v X
        spread = 2 * max(np.ptp(cp), np.ptp(cm))

    scale = 0.5 * math.exp(logC)
    vals = np.empty_like(v)
    errs = np.empty_like(v)
    count = 0
    if quad.method == "tensor":
        degrees = np.array([_auto_degree(quad, vi, spread) for vi in v])
        groups = [(np.flatnonzero(degrees == d), QuadratureControl(
            "tensor", degree=int(d), estimate_error=quad.estimate_error)) for d in np.unique(degrees)]
    else:
        groups = [(np.arange(len(v)), quad)]
    for idx, q in groups:
        # the same nodes (or seeded draws) are reused for every batch of v
        for b in range(0, len(idx), V_BATCH):
            sel = idx[b:b + V_BATCH]
            val, err, count = integrate_many(dim, k, lambda U: g(U, v[sel]), q)
            vals[sel], errs[sel] = val, err
    return scale * vals, scale * errs, count


def _prefactor_log(spec, phi, v):
    n, nu = spec.n, spec.nu
    return 2 * nu * math.log(math.sin(n * phi)) + (n * nu - 1) * np.log(v)


def density_values(spec: WedgeSpec, phi: float, v, form: str = "integral",
                   ctl: SeriesControl = DEFAULT_SERIES,
                   quad: QuadratureControl = QuadratureControl(),
                   with_power: bool = True):
    """Vectorised unnormalised density on an array of v; returns (values, abs_err).

    With ``with_power=False`` the factor v^(n nu - 1) is left out, which is
    what the v-quadrature needs near the origin.
    """
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if np.any(v <= 0):
        raise ValueError("the density is defined for v > 0")
    _check_phi(spec.n, phi)
    n, nu = spec.n, spec.nu
    if form == "series":
        vals = np.empty_like(v)
        errs = np.empty_like(v)
        for i, vi in enumerate(v):
            ep = wedge_series(n, spec.k, phi, vi, 1, ctl, shift=vi)
            em = wedge_series(n, spec.k, phi, vi, -1, ctl, shift=vi)
            vals[i] = 0.5 * (ep.value + em.value)
            errs[i] = 0.5 * (ep.abs_err_est + em.abs_err_est)
    elif form == "integral":
        vals, errs, _ = _integral_scaled(spec, phi, v, ctl, quad)
    else:
        raise ValueError(f"form must be 'series' or 'integral', got {form!r}")
    pw = 2 * nu * math.log(math.sin(n * phi))
    if with_power:
        pw = pw + (n * nu - 1) * np.log(v)
    f = np.exp(pw)
    return vals * f, errs * f


def density_unnorm(spec: WedgeSpec, phi: float, v: float, form: str = "series",
                   ctl: SeriesControl = DEFAULT_SERIES,
                   quad: QuadratureControl = QuadratureControl()) -> Evaluation:
    """Unnormalised density of V0 at v, from the series or the simplex integral."""
    if not v > 0:
        raise ValueError(f"v must be > 0, got {v}")
    val, err = density_values(spec, phi, [v], form, ctl, quad)
    return Evaluation(float(val[0]), float(err[0]), 0, True,
                      {"form": form, "method": quad.method if form == "integral" else "series"})


def even_density_unnorm(spec, phi, v, form="series", ctl=DEFAULT_SERIES,
                        quad=QuadratureControl()) -> Evaluation:
    if spec.parity != "even":
        raise ValueError("even_density_unnorm needs an even wedge")
    return density_unnorm(spec, phi, v, form, ctl, quad)


def odd_density_unnorm(spec, phi, v, form="series", ctl=DEFAULT_SERIES,
                       quad=QuadratureControl()) -> Evaluation:
    if spec.parity != "odd":
        raise ValueError("odd_density_unnorm needs an odd wedge")
    return density_unnorm(spec, phi, v, form, ctl, quad)


# ---------------------------------------------------------------------------
# normalisation


def normalizing_constant_exact(spec: WedgeSpec) -> float:
    """Closed form of int_0^oo (unnormalised density) dv.

    Integrating the series term by term (Gauss summation at argument 1)
    leaves sin^(2nu)(n phi) (4/n) sum_{j even} (j+k)/((j+1)(j+2nu)) C_j^(k)(cos n phi),
    which is the Gegenbauer expansion of a multiple of (1 - x^2)^(-nu); the
    result sqrt(pi) Gamma(nu) / (n Gamma(k)) does not depend on phi.
    """
    return math.sqrt(math.pi) * math.gamma(spec.nu) / (spec.n * math.gamma(spec.k))


def _default_cutoff(beta, rate, tol):
    # past the peak of v^(beta-1) e^(-rate v) by ~ -ln(tol) + 12 e-folds
    return max((max(beta - 1, 0.0) + 12.0 - math.log(tol)) / rate, 2.0)


def _jacobi_head(fun, beta, v1, order=40):
    """int_0^v1 v^(beta-1) fun(v) dv by Gauss-Jacobi; error from a 3/4-order rule."""
    est = []
    for m in (order, (3 * order) // 4):
        x, w = roots_jacobi(m, 0.0, beta - 1)
        v = v1 * (1 + x) / 2
        est.append(float(np.dot(w, fun(v))) * (v1 / 2) ** beta)
    return Evaluation(est[0], abs(est[0] - est[1]), order + (3 * order) // 4, True)


def _v_integral(fun, beta, rate, v_cutoff, tol, auto_extend):
    """int_0^oo v^(beta-1) fun(v) dv for smooth fun decaying like exp(-rate v).

    [0, 1] is mapped through v = t^(1/beta), which removes the algebraic
    endpoint behaviour; [1, v_cutoff] is covered by adaptive Gauss-Legendre
    panels, and the remainder by an exponential tail estimate.
    """
    v1 = min(1.0, v_cutoff / 2)
    head = _jacobi_head(fun, beta, v1)
    total = head.value
    err = head.abs_err_est
    count = head.count
    lo = v1
    hi = v_cutoff
    while True:
        width = max(8.0 / rate, 1.0)
        edges = np.unique(np.concatenate([np.arange(lo, hi, width), [hi]]))
        body = adaptive_panels(lambda v: v ** (beta - 1) * fun(v), lo, hi,
                               rtol=tol * 1e-2, edges=edges)
        total += body.value
        err += body.abs_err_est
        count += body.count
        h = min(0.05 * hi, 2.0)
        fv = np.asarray([hi - h, hi], dtype=float)
        gv = fv ** (beta - 1) * fun(fv)
        if gv[1] <= 0 or gv[0] <= 0:
            lam = rate
        else:
            lam = (math.log(gv[0]) - math.log(gv[1])) / h
        if lam <= 0:
            raise NormalizationError("integrand does not decay at the cutoff; raise v_cutoff")
        tail = abs(gv[1]) / lam
        if tail <= tol * abs(total) * 0.1:
            break
        if not auto_extend:
            raise NormalizationError(
                f"tail beyond v_cutoff={v_cutoff:g} is ~{tail / abs(total):.2e} of the "
                f"integral, above tol={tol:g}; use a larger v_cutoff")
        lo, hi = hi, hi * 1.5
    return Evaluation(total + tail, err + tail, count, True, {"v_cutoff": hi, "tail": tail})


def normalize(spec: WedgeSpec, phi: float, form: str = "integral", v_cutoff: float | None = None,
              ctl: SeriesControl = DEFAULT_SERIES, quad: QuadratureControl = QuadratureControl(),
              tol: float = 1e-6, details: bool = False):
    """Normalising constant c = int_0^oo (unnormalised density)(v) dv.

    Without an explicit ``v_cutoff`` the cutoff starts where v^(n nu - 1)
    e^(-rate v) has decayed by about 12 - ln(tol) e-folds past its peak, rate
    being :func:`decay_rate`, and is extended until the tail estimate is below
    ``tol``; an explicit cutoff whose tail is too heavy
    raises :class:`NormalizationError`.
    """
    rate = decay_rate(spec, phi)
    auto = v_cutoff is None
    if auto:
        v_cutoff = _default_cutoff(spec.n * spec.nu, rate, tol)

    def fun(v):
        return density_values(spec, phi, v, form, ctl, quad, with_power=False)[0]

    ev = _v_integral(fun, spec.n * spec.nu, rate, v_cutoff, tol, auto)
    return ev if details else ev.value


# ---------------------------------------------------------------------------
# tables and CDF


def density_table(spec: WedgeSpec, phi: float, v_grid, form: str = "integral",
                  ctl: SeriesControl = DEFAULT_SERIES,
                  quad: QuadratureControl = QuadratureControl(),
                  normalizing_constant: float | None = None) -> DensityTable:
    v_grid = np.asarray(v_grid, dtype=float)
    if np.any(v_grid <= 0) or np.any(np.diff(v_grid) <= 0):
        raise ValueError("v_grid must be strictly increasing and positive")
    vals, errs = density_values(spec, phi, v_grid, form, ctl, quad)
    c = normalizing_constant
    if c is None:
        c = normalize(spec, phi, "integral", ctl=ctl, quad=quad)
    return DensityTable(v_grid, vals, vals / c, form, c, errs)


def density_cdf(spec: WedgeSpec, phi: float, ctl: SeriesControl = DEFAULT_SERIES,
                quad: QuadratureControl = QuadratureControl(), panels: int = 400,
                order: int = 8):
    """CDF of V0 built by cumulative Gauss-Legendre integration of the density.

    Returns a vectorised callable. The grid is uniform in t = v^(n nu) on
    [0, 1] and uniform in v beyond, up to the automatic cutoff; the CDF is
    normalised by the same cumulative sum plus the tail estimate.
    """
    from scipy.interpolate import PchipInterpolator

    beta = spec.n * spec.nu
    rate = decay_rate(spec, phi)
    ev = normalize(spec, phi, "integral", None, ctl, quad, details=True)
    vmax = ev.meta["v_cutoff"]
    x, w = np.polynomial.legendre.leggauss(order)

    def fun(v):
        return density_values(spec, phi, v, "integral", ctl, quad, with_power=False)[0]

    # head in t = v^beta
    n_head = max(panels // 8, 8)
    t_edges = np.linspace(0, 1, n_head + 1)
    tm = (t_edges[:-1, None] + t_edges[1:, None]) / 2 + np.diff(t_edges)[:, None] / 2 * x
    tw = np.diff(t_edges)[:, None] / 2 * w
    head = (fun(tm.ravel() ** (1 / beta)).reshape(tm.shape) / beta * tw).sum(axis=1)
    v_edges = np.linspace(1, vmax, panels + 1)
    vm = (v_edges[:-1, None] + v_edges[1:, None]) / 2 + np.diff(v_edges)[:, None] / 2 * x
    vw = np.diff(v_edges)[:, None] / 2 * w
    vv = vm.ravel()
    body = ((vv ** (beta - 1) * fun(vv)).reshape(vm.shape) * vw).sum(axis=1)
    edges = np.concatenate([t_edges ** (1 / beta), v_edges[1:]])
    cum = np.concatenate([[0.0], np.cumsum(np.concatenate([head, body]))])
    total = cum[-1] + ev.meta["tail"]
    interp = PchipInterpolator(edges, cum / total)

    def cdf(v):
        v = np.asarray(v, dtype=float)
        out = np.where(v >= vmax, 1.0 - (total - cum[-1]) / total * np.exp(-rate * (v - vmax)),
                       interp(np.clip(v, 0, vmax)))
        return np.where(v <= 0, 0.0, out)

    cdf.normalizing_constant = total
    cdf.v_max = vmax
    return cdf


# ---------------------------------------------------------------------------
# Gegenbauer identity behind the series-to-simplex rearrangement


def _b_values(q, xi):
    """b_{s,q}(xi) = cos((xi + 2 s pi)/q) for s = 1..q.

    For even q the second half is the exact negation of the first half
    (cos(a + pi) = -cos a), so symmetric cancellations stay exact.
    """
    s = np.arange(1, q + 1)
    b = np.cos((xi + 2 * s * math.pi) / q)
    if q % 2 == 0:
        h = q // 2
        b[h:] = -b[:h]
    return b


def _idgeg_float(M, q, k, xi):
    x = math.cos(xi)
    lhs_terms = []
    for j in range(M // q + 1):
        rest = M - q * j
        if rest % 2:
            continue
        m = rest // 2
        lg = math.lgamma(m + 1) + math.lgamma(q * (j + k) + m + 1)
        lhs_terms.append(q * (j + k) * math.exp(-lg) * gegenbauer(j, k, x))
    lhs = math.fsum(lhs_terms)

    kf = Fraction(k)
    poch = [Fraction(1)]
    for j in range(1, M + 1):
        poch.append(poch[-1] * (kf + j - 1) / j)
    series, abs_series = [], []
    for b in _b_values(q, xi):
        bf = Fraction(float(b))
        series.append([poch[j] * bf ** j for j in range(M + 1)])
        abs_series.append([poch[j] * abs(bf) ** j for j in range(M + 1)])
    g = math.exp(M * math.log(2) - math.lgamma(M + q * k))
    rhs = float(exact_poly_coeff(series, M)) * g
    scale = max(math.fsum(abs(t) for t in lhs_terms), float(exact_poly_coeff(abs_series, M)) * g)
    return lhs, rhs, scale


def _chebyshev_coeffs(q):
    """Integer coefficients of T_q, lowest degree first."""
    prev, cur = [1], [0, 1]
    if q == 0:
        return prev
    for _ in range(q - 1):
        nxt = [0] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def _idgeg_exact(M, q, k, xi):
    # Both sides times Gamma(M + qk) are polynomials in k and x = cos(xi).
    kf, x = Fraction(k), Fraction(math.cos(xi))
    qk = q * kf
    gs = [Fraction(1), 2 * kf * x]
    for j in range(2, M // q + 1):
        gs.append((2 * (j + kf - 1) * x * gs[-1] - (j + 2 * kf - 2) * gs[-2]) / j)
    lhs = Fraction(0)
    for j in range(M // q + 1):
        rest = M - q * j
        if rest % 2:
            continue
        m = rest // 2
        # Gamma(M + qk) / Gamma(qk + M - m + 1)
        if m == 0:
            r = 1 / (qk + M)
        else:
            r = Fraction(1)
            for i in range(M - m + 1, M):
                r *= qk + i
        lhs += q * (j + kf) / math.factorial(m) * r * gs[j]
    # prod_s (1 - b_s t) = 2^(1-q) (t^q T_q(1/t) - cos(xi) t^q) =: 1 + R(t)
    cheb = _chebyshev_coeffs(q)
    R = [Fraction(0)] * (M + 1)
    for deg, c in enumerate(cheb):
        power = q - deg
        if 0 < power <= M and c:
            R[power] += Fraction(c, 2 ** (q - 1))
    if q <= M:
        R[q] -= x / 2 ** (q - 1)
    # [t^M] (1 + R)^(-k) = sum_l (-1)^l (k)_l / l! [t^M] R^l
    rhs = Fraction(0)
    Rl = [Fraction(1)] + [Fraction(0)] * M
    coef = Fraction(1)
    for l in range(M + 1):
        if l:
            Rl = [sum(Rl[i] * R[d - i] for i in range(d + 1)) for d in range(M + 1)]
            coef *= -(kf + l - 1) / l
        rhs += coef * Rl[M]
    rhs *= 2 ** M
    g = math.exp(-math.lgamma(M + q * k))
    return float(lhs) * g, float(rhs) * g


def check_idgeg(M: int, q: int, k: float, xi: float, exact: bool = True) -> tuple[float, float]:
    """Both sides of the Gegenbauer identity

        sum_{2m + qj = M} q(j+k) / (m! Gamma(q(j+k)+m+1)) C_j^(k)(cos xi)
          = 2^M / Gamma(M + qk) * sum_{j_1+..+j_q = M} prod (k)_{j_s} b_s^{j_s} / j_s!.

    With ``exact=True`` both sides, stripped of the common 1/Gamma(M + qk),
    are evaluated in rational arithmetic on the floating inputs k and cos xi:
    the left side term by term, the right side as the t^M coefficient of
    prod_s (1 - b_s t)^(-k), the product being 2^(1-q) (t^q T_q(1/t) - cos(xi) t^q)
    with T_q the Chebyshev polynomial. Sides that vanish identically are then
    exactly zero. With ``exact=False`` the left side is summed in floating point
    and the right side is the multinomial sum over the rounded b_s.
    """
    if M < 0 or q < 1 or not k > 0:
        raise ValueError("need M >= 0, q >= 1, k > 0")
    if exact:
        return _idgeg_exact(M, q, k, xi)
    lhs, rhs, _ = _idgeg_float(M, q, k, xi)
    return lhs, rhs


def idgeg_float_scale(M: int, q: int, k: float, xi: float) -> float:
    """Larger of the absolute-term sums of the two floating sides: the scale of their roundoff."""
    return _idgeg_float(M, q, k, xi)[2]


# ---------------------------------------------------------------------------
# p = 2 reduction to a single symmetric-Beta integral


def p2_simplex_form(k: float, phi: float, v: float, degree: int = 80) -> float:
    """Simplex form for p = 2, written on [0, 1]:

    Gamma(2k)/(Gamma(k)^2 Gamma(4k)) int u^(k-1) (1-u)^(k-1)
        1F1(2; 2k+1/2; v (1 + (1-2u) cos 2phi)/2) du.
    """
    U, W = simplex_rule(2, k, degree)
    z = v * (1 + (1 - 2 * U[:, 0]) * math.cos(2 * phi)) / 2
    lf, sf, _, _ = hyp1f1_log(2.0, 2 * k + 0.5, z)
    const = math.exp(_even_log_const(2, k))
    return const * float(np.dot(W, sf * np.exp(lf)))


def p2_mu_form(k: float, phi: float, v: float, degree: int = 80) -> float:
    """(1/Gamma(4k)) int 1F1(2; 2nu+3/2; v (1 - cos(2phi) u)/2) mu^k(du) on [-1, 1],

    mu^k(du) = Gamma(k+1/2)/(sqrt(pi) Gamma(k)) (1-u^2)^(k-1) du, integrated
    with Gauss-Gegenbauer nodes on [-1, 1].
    """
    nu = k - 0.5
    x, w = roots_jacobi(degree, k - 1, k - 1)
    z = v * (1 - math.cos(2 * phi) * x) / 2
    lf, sf, _, _ = hyp1f1_log(2.0, 2 * nu + 1.5, z)
    mu_norm = math.exp(math.lgamma(k + 0.5) - 0.5 * math.log(math.pi) - math.lgamma(k))
    return mu_norm / math.gamma(4 * k) * float(np.dot(w, sf * np.exp(lf)))
