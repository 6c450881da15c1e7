"""Scalar special-function kernel.

Gamma machinery, the confluent and Gauss hypergeometric series, Gegenbauer
polynomials, the fourth Lauricella function F_D and Fox-Wright type series.
Series magnitudes are tracked in log space with signs carried separately, so
terms far beyond the double-precision range of Gamma are summed safely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np
from scipy import integrate
from scipy.special import erfc, erfcx, gammaln, pbdv, roots_genlaguerre

__all__ = [
    "SeriesControl",
    "Evaluation",
    "FoxWrightParams",
    "DEFAULT_SERIES",
    "log_gamma",
    "pochhammer",
    "log_pochhammer",
    "hyp1f1",
    "hyp1f1_log",
    "hyp1f1_euler",
    "hyp2f1",
    "gegenbauer",
    "gegenbauer_hyp2f1",
    "lauricella_fd",
    "lauricella_fd_euler",
    "fox_wright",
    "fox_wright_series",
    "odd_kernel",
    "odd_kernel_log",
    "odd_kernel_series_log",
    "hyp1f1_int_log",
    "alternating_pochhammer_sum",
]

_EPS = np.finfo(float).eps
_BIG = 2.0**500
_LOG_BIG = 500 * math.log(2)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the infinite series.

    A series stops once three consecutive terms satisfy
    ``|term| <= tol * |partial sum|`` and at least ``n_min`` terms were summed.
    Hitting ``n_max`` first marks the result as not converged.
    """

    tol: float = 1e-15
    n_min: int = 3
    n_max: int = 20000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"SeriesControl.tol must be > 0, got {self.tol}")
        if not 1 <= self.n_min <= self.n_max:
            raise ValueError(
                f"SeriesControl needs 1 <= n_min <= n_max, got {self.n_min}, {self.n_max}")


DEFAULT_SERIES = SeriesControl()


@dataclass(frozen=True)
class Evaluation:
    """A value with an error estimate.

    ``count`` is the number of series terms (or Monte-Carlo samples, or
    quadrature nodes) that produced ``value``. ``meta`` carries diagnostics
    such as the transformation branch that was used.
    """

    value: float
    abs_err_est: float = 0.0
    count: int = 0
    converged: bool = True
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.abs_err_est >= 0:
            raise ValueError(f"abs_err_est must be >= 0, got {self.abs_err_est}")

    def __float__(self):
        return float(self.value)

    @property
    def rel_err_est(self) -> float:
        if self.value == 0:
            return math.inf if self.abs_err_est else 0.0
        return self.abs_err_est / abs(self.value)


@dataclass(frozen=True)
class FoxWrightParams:
    """Parameters of sum_N Gamma(alpha + a_step N) / Gamma(beta + b_step N) z^N / N!.

    ``b_step = 0`` is allowed: the lower Gamma is then the constant Gamma(beta),
    which is how the kernel of the odd-wedge integrand is expressed.
    """

    alpha: float
    a_step: float
    beta: float
    b_step: float

    def __post_init__(self):
        if not self.a_step > 0:
            raise ValueError("a_step must be > 0")
        if self.b_step < 0:
            raise ValueError("b_step must be >= 0")
        if self.b_step == 0 and _is_pole(self.beta):
            raise ValueError(f"beta={self.beta} is a pole of Gamma in every term")
        if self.b_step + 1 - self.a_step <= 0:
            raise ValueError("series is not entire: need 1 + b_step - a_step > 0")


def _is_pole(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def log_gamma(x):
    """ln Gamma(x) for x > 0 (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    out = gammaln(arr)
    return float(out) if out.ndim == 0 else out


def pochhammer(a: float, m: int) -> float:
    """Rising factorial (a)_m = a (a+1) ... (a+m-1); (a)_0 = 1."""
    if m < 0 or int(m) != m:
        raise ValueError(f"pochhammer needs an integer m >= 0, got {m}")
    return math.prod(a + i for i in range(int(m))) if m else 1.0


def log_pochhammer(a, m):
    """ln (a)_m = ln Gamma(a+m) - ln Gamma(a), for a > 0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("log_pochhammer requires a > 0")
    out = gammaln(a + m) - gammaln(a)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# 1F1


def _sum_1f1_nonneg(a, c, z, ctl: SeriesControl):
    """Vectorised 1F1(a; c; z) for z >= 0, returned as (log|F|, sign, rel_err, n, ok).

    Terms are built by multiplying term ratios in a rescaled domain: when the
    current term exceeds 1e150 everything is divided down and the factor is
    moved into the log scale ``L``. This avoids overflow for large z without
    the drift of accumulating logarithms. The scale factor is a power of two,
    so rescaling is exact.
    """
    a, c, z = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (a, c, z)))
    shape = z.shape
    a, c, z = a.ravel(), c.ravel(), z.ravel()
    t = np.ones_like(z)
    L = np.zeros_like(z)
    S = np.ones_like(z)
    A = np.ones_like(z)
    small = np.zeros(z.shape, dtype=int)
    done = z == 0
    last = np.zeros_like(z)
    n_used = np.ones(z.shape, dtype=int)
    live = np.flatnonzero(~done)
    j = 0
    while live.size and j < ctl.n_max:
        num = a[live] + j
        tl = t[live] * (num / (c[live] + j) * z[live] / (j + 1))
        Sl = S[live] + tl
        Al = A[live] + np.abs(tl)
        big = np.abs(tl) > _BIG
        if big.any():
            f = np.where(big, 1.0 / _BIG, 1.0)
            tl, Sl, Al = tl * f, Sl * f, Al * f
            L[live] += np.where(big, _LOG_BIG, 0.0)
        t[live], S[live], A[live] = tl, Sl, Al
        mag = np.abs(tl)
        last[live] = mag
        n_used[live] = j + 2
        sm = np.where(mag <= ctl.tol * np.abs(Sl), small[live] + 1, 0)
        small[live] = sm
        finished = (num == 0) | ((sm >= 3) & (j + 2 >= ctl.n_min))
        done[live[finished]] = True
        live = live[~finished]
        j += 1
    absS = np.abs(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        logF = L + np.log(absS)
        rel = (3 * last + 4 * _EPS * A * np.sqrt(n_used)) / absS
    sign = np.sign(S)
    return (logF.reshape(shape), sign.reshape(shape), rel.reshape(shape),
            n_used.reshape(shape), done.reshape(shape))


def hyp1f1_log(a, c, z, ctl: SeriesControl = DEFAULT_SERIES):
    """Vectorised ln|1F1(a; c; z)| and its sign.

    Negative arguments go through the Kummer transform
    1F1(a; c; z) = e^z 1F1(c-a; c; -z), which removes the alternating
    cancellation. Returns ``(log_abs, sign, rel_err, converged)``.
    """
    a, c, z = np.broadcast_arrays(*(np.asarray(t, dtype=float) for t in (a, c, z)))
    if np.any(_pole_mask(c)):
        raise ValueError("1F1: c must not be a non-positive integer")
    neg = z < 0
    aa = np.where(neg, c - a, a)
    logF, sign, rel, _, ok = _sum_1f1_nonneg(aa, c, np.abs(z), ctl)
    logF = np.where(neg, logF + z, logF)
    return logF, sign, rel, ok


_ASYMPTOTIC_Z = 60.0


def _sum_1f1_dense(a, c, z, ctl: SeriesControl):
    """1F1(a; c; z) for a, c > 0 and 0 <= z < 60 as (log F, rel_err, converged).

    Every term is positive and below e^60, so the whole array is summed in
    lock step without rescaling. The sum stops once each term is below
    ``tol`` times its partial sum and its term ratio is at most 1/2, which
    bounds the remainder by the last term.
    """
    t = np.ones_like(z)
    S = np.ones_like(z)
    j = 0
    ok = False
    while j < ctl.n_max:
        ratio = (a + j) / (c + j) * z / (j + 1)
        t = t * ratio
        S = S + t
        j += 1
        if j >= ctl.n_min and np.all(t <= ctl.tol * S) and np.all(ratio <= 0.5):
            ok = True
            break
    rel = 2 * t / S + 4 * _EPS * math.sqrt(j + 1)
    return np.log(S), rel, np.full(z.shape, ok)


def hyp1f1_int_log(a: int, c: float, z, ctl: SeriesControl = DEFAULT_SERIES):
    """log 1F1(a; c; z) for a positive integer ``a`` and z >= 0.

    For z >= 60 the exponential part of the large-z expansion,
    Gamma(c)/Gamma(a) e^z z^(a-c) sum_{s<a} (c-a)_s (1-a)_s / s! z^(-s),
    terminates; the neglected algebraic part is O(e^(-z)) relative. Smaller
    z use the power series. Returns ``(log_abs, sign, rel_err, converged)``.
    """
    if int(a) != a or a < 1:
        raise ValueError("a must be a positive integer")
    a = int(a)
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("hyp1f1_int_log needs z >= 0")
    shape = z.shape
    zf = z.ravel()
    out = np.empty_like(zf)
    rel = np.full(zf.shape, 16 * _EPS)
    ok = np.ones(zf.shape, dtype=bool)
    big = zf >= _ASYMPTOTIC_Z
    if (~big).any():
        lf, r, o = _sum_1f1_dense(a, c, zf[~big], ctl)
        out[~big], rel[~big], ok[~big] = lf, r, o
    if big.any():
        zb = zf[big]
        acc = np.ones_like(zb)
        term = np.ones_like(zb)
        for s_ in range(a - 1):
            term = term * (c - a + s_) * (1 - a + s_) / ((s_ + 1) * zb)
            acc = acc + term
        out[big] = (math.lgamma(c) - math.lgamma(a) + zb + (a - c) * np.log(zb) + np.log(acc))
    return out.reshape(shape), np.ones(shape), rel.reshape(shape), ok.reshape(shape)


def _pole_mask(c):
    c = np.asarray(c, dtype=float)
    return (c <= 0) & (c == np.round(c))


def hyp1f1(a: float, c: float, z: float, ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """Confluent hypergeometric 1F1(a; c; z) by its power series."""
    if _is_pole(c):
        raise ValueError(f"1F1: c={c} is a non-positive integer")
    aa, zz = (c - a, -z) if z < 0 else (a, z)
    logF, sign, rel, n, ok = _sum_1f1_nonneg(aa, c, zz, ctl)
    logF = float(logF) + (z if z < 0 else 0.0)
    value = float(sign) * math.exp(logF) if logF < 709.7 else float(sign) * math.inf
    return Evaluation(value, abs(value) * float(rel), int(n), bool(ok),
                      {"kummer": bool(z < 0), "log_abs": logF})


def hyp1f1_euler(a: float, c: float, z: float) -> Evaluation:
    """1F1 through its Euler integral; valid for c > a > 0.

    Independent of the series path: adaptive quadrature with the algebraic
    endpoint weight u^(a-1) (1-u)^(c-a-1) handled by QUADPACK.
    """
    if not c > a > 0:
        raise ValueError("Euler integral requires c > a > 0")
    val, err = integrate.quad(lambda u: math.exp(z * u), 0.0, 1.0, weight="alg",
                              wvar=(a - 1, c - a - 1), epsabs=0, epsrel=1e-13, limit=200)
    lognorm = math.lgamma(c) - math.lgamma(a) - math.lgamma(c - a)
    f = math.exp(lognorm)
    return Evaluation(f * val, f * err, 0, True, {"route": "euler"})


# ---------------------------------------------------------------------------
# 2F1


def _terminates(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def _hyp2f1_series(a, b, c, z, ctl):
    t = 1.0
    terms = [1.0]
    small = 0
    n = 1
    ok = False
    for j in range(ctl.n_max):
        t *= (a + j) * (b + j) / ((c + j) * (j + 1)) * z
        terms.append(t)
        n += 1
        if t == 0.0 and (_terminates(a) or _terminates(b)):
            ok = True
            break
        s = math.fsum(terms)
        small = small + 1 if abs(t) <= ctl.tol * abs(s) else 0
        if small >= 3 and n >= ctl.n_min:
            ok = True
            break
    s = math.fsum(terms)
    err = 3 * abs(terms[-1]) + 4 * _EPS * math.fsum(abs(x) for x in terms)
    return s, err, n, ok


def hyp2f1(a: float, b: float, c: float, z: float, ctl: SeriesControl = DEFAULT_SERIES,
           branch: str = "auto") -> Evaluation:
    """Gauss hypergeometric 2F1(a, b; c; z) for real z < 1.

    ``branch`` selects ``"direct"`` summation, the ``"pfaff"`` transform
    2F1(a,b;c;z) = (1-z)^(-a) 2F1(a, c-b; c; z/(z-1)), or ``"auto"`` (Pfaff
    for z < 0, where it maps onto [0, 1)). The branch used is stored in
    ``meta["branch"]``. Terminating series are accepted for any z.
    """
    if _is_pole(c):
        raise ValueError(f"2F1: c={c} is a non-positive integer")
    poly = _terminates(a) or _terminates(b)
    if branch == "auto":
        branch = "pfaff" if (z < 0 and not poly) else "direct"
    if branch == "direct":
        if abs(z) >= 1 and not poly:
            raise ValueError(f"2F1 series diverges at z={z}; use branch='pfaff' for z <= -1")
        s, err, n, ok = _hyp2f1_series(a, b, c, z, ctl)
        return Evaluation(s, err, n, ok, {"branch": "direct"})
    if branch == "pfaff":
        if z >= 1:
            raise ValueError(f"2F1: no applicable transform for z={z} >= 1")
        w = z / (z - 1)
        s, err, n, ok = _hyp2f1_series(a, c - b, c, w, ctl)
        f = (1 - z) ** (-a)
        return Evaluation(f * s, abs(f) * err, n, ok, {"branch": "pfaff", "mapped_z": w})
    raise ValueError(f"unknown branch {branch!r}")


# ---------------------------------------------------------------------------
# Gegenbauer


def gegenbauer(j: int, k: float, x):
    """C_j^(k)(x) by the three-term recurrence.

    j C_j = 2 (j+k-1) x C_{j-1} - (j+2k-2) C_{j-2}, with C_0 = 1, C_1 = 2 k x.
    """
    if j < 0:
        raise ValueError("degree must be >= 0")
    if not k > 0:
        raise ValueError("Gegenbauer parameter must be > 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if j == 0:
        return prev if prev.ndim else float(prev)
    cur = 2 * k * x
    for m in range(2, j + 1):
        prev, cur = cur, (2 * (m + k - 1) * x * cur - (m + 2 * k - 2) * prev) / m
    return cur if cur.ndim else float(cur)


def gegenbauer_all(jmax: int, k: float, x):
    """Stack of C_0..C_jmax at x; shape (jmax+1,) + x.shape."""
    x = np.asarray(x, dtype=float)
    out = np.empty((jmax + 1,) + x.shape)
    out[0] = 1.0
    if jmax >= 1:
        out[1] = 2 * k * x
    for m in range(2, jmax + 1):
        out[m] = (2 * (m + k - 1) * x * out[m - 1] - (m + 2 * k - 2) * out[m - 2]) / m
    return out


def gegenbauer_hyp2f1(j: int, k: float, x: float) -> float:
    """C_j^(k)(x) from its hypergeometric definition (terminating 2F1).

    (2k)_j / j! 2F1(-j, j+2k; k+1/2; (1-x)/2), summed in exact rational
    arithmetic on the floating inputs: the alternating terms cancel badly
    in floating point once (1-x)/2 approaches 1.
    """
    if j < 0:
        raise ValueError("degree must be >= 0")
    kf, z = Fraction(k), (1 - Fraction(x)) / 2
    term, total = Fraction(1), Fraction(1)
    for m in range(j):
        term *= (m - j) * (j + 2 * kf + m) / ((kf + Fraction(1, 2) + m) * (m + 1)) * z
        total += term
    lead = Fraction(1)
    for i in range(j):
        lead *= (2 * kf + i) / (i + 1)
    return float(lead * total)


# ---------------------------------------------------------------------------
# Lauricella F_D


def _fd_series(a, d, c, z, ctl):
    """F_D by total-degree shells.

    The shell sum h_N = sum_{|m|=N} prod (d_s)_{m_s} z_s^{m_s} / m_s! is the
    t^N coefficient of prod_s (1 - z_s t)^(-d_s); it is built incrementally
    by convolving the per-variable coefficient sequences. A parallel
    convolution of |coefficients| feeds the roundoff estimate.
    """
    q = len(d)
    g = [[1.0] for _ in range(q)]
    P = [[1.0] for _ in range(q)]
    Pa = [[1.0] for _ in range(q)]
    ratio = 1.0
    terms = [1.0]
    abs_terms = [1.0]
    small = 0
    ok = False
    N = 0
    while N < ctl.n_max:
        ratio *= (a + N) / (c + N)
        N += 1
        for s in range(q):
            g[s].append(g[s][-1] * (d[s] + N - 1) * z[s] / N)
        P[0].append(g[0][N])
        Pa[0].append(abs(g[0][N]))
        for s in range(1, q):
            gs = g[s]
            P[s].append(math.fsum(P[s - 1][i] * gs[N - i] for i in range(N + 1)))
            Pa[s].append(math.fsum(Pa[s - 1][i] * abs(gs[N - i]) for i in range(N + 1)))
        t = ratio * P[-1][N]
        terms.append(t)
        abs_terms.append(abs(ratio) * Pa[-1][N])
        if ratio == 0.0:
            ok = True
            break
        small = small + 1 if abs(t) <= ctl.tol * abs(math.fsum(terms)) else 0
        if small >= 3 and N + 1 >= ctl.n_min:
            ok = True
            break
    total = math.fsum(terms)
    err = 3 * abs(terms[-1]) + 4 * _EPS * math.fsum(abs_terms) * math.sqrt(q)
    return total, err, N + 1, ok


def lauricella_fd(a: float, d: Sequence[float], c: float, z: Sequence[float],
                  ctl: SeriesControl = DEFAULT_SERIES, branch: str = "auto") -> Evaluation:
    """Fourth Lauricella function F_D(a; d_1..d_q; c; z_1..z_q).

    The multi-index series sum (a)_|m| / (c)_|m| prod (d_s)_{m_s} z_s^{m_s} / m_s!
    is summed shell by shell in the total degree |m| and cut off when three
    consecutive shells fall below ``tol`` relative to the partial sum.

    With every z_s <= 0 the ``"pfaff"`` branch
    F_D(a; d; c; z) = prod (1 - z_s)^(-d_s) F_D(c - a; d; c; z/(z-1))
    maps the arguments into [0, 1) and extends the evaluation to z_s <= -1.
    ``"auto"`` uses it whenever all arguments are non-positive and one of
    them lies below -1/2.
    """
    d = [float(x) for x in d]
    z = [float(x) for x in z]
    if len(d) != len(z) or not d:
        raise ValueError("d and z must be non-empty and of equal length")
    if _is_pole(c):
        raise ValueError(f"F_D: c={c} is a non-positive integer")
    nonpos = all(x <= 0 for x in z)
    if branch == "auto":
        branch = "pfaff" if (nonpos and min(z) < -0.5) else "direct"
    if branch == "direct":
        if any(abs(x) >= 1 for x in z):
            raise ValueError(f"F_D series needs |z_s| < 1, got {z}")
        s, err, n, ok = _fd_series(a, d, c, z, ctl)
        return Evaluation(s, err, n, ok, {"branch": "direct"})
    if branch == "pfaff":
        if not nonpos:
            raise ValueError("Pfaff branch of F_D requires all z_s <= 0")
        w = [x / (x - 1) for x in z]
        s, err, n, ok = _fd_series(c - a, d, c, w, ctl)
        f = math.prod((1 - x) ** (-ds) for x, ds in zip(z, d))
        return Evaluation(f * s, abs(f) * err, n, ok, {"branch": "pfaff", "mapped_z": w})
    raise ValueError(f"unknown branch {branch!r}")


def lauricella_fd_euler(a: float, d: Sequence[float], c: float, z: Sequence[float],
                        quad=None) -> Evaluation:
    """F_D from its Euler integral over the standard simplex.

    F_D = Gamma(c) / prod_{s=1}^{q+1} Gamma(d_s)
          * int prod u_s^(d_s - 1) (1 - sum_{s<=q} u_s z_s)^(-a) du,
    with d_{q+1} = c - sum d_s > 0. Valid for every z with 1 - sum u_s z_s > 0
    on the simplex, in particular for all non-positive z.
    """
    from .simplex import QuadratureControl, simplex_integrate

    d = np.asarray(d, dtype=float)
    z = np.asarray(z, dtype=float)
    d_last = c - d.sum()
    if not (np.all(d > 0) and d_last > 0):
        raise ValueError("Euler integral needs all d_s > 0 and c - sum(d) > 0")
    if quad is None:
        quad = QuadratureControl(method="tensor", degree=40)
    beta = np.append(d, d_last)
    q = len(d)

    def f(u):
        base = 1.0 - u[:, :q] @ z
        if np.any(base <= 0):
            raise ValueError("Euler integrand leaves its domain: 1 - sum u z <= 0")
        return base ** (-a)

    ev = simplex_integrate(q + 1, beta, f, quad)
    lognorm = math.lgamma(c) - sum(math.lgamma(b) for b in beta)
    scale = math.exp(lognorm)
    return Evaluation(scale * ev.value, scale * ev.abs_err_est, ev.count, ev.converged,
                      {"route": "euler", "method": quad.method})


# ---------------------------------------------------------------------------
# Fox-Wright


def _fox_wright_terms_log(params: FoxWrightParams, N):
    lg = gammaln(params.alpha + params.a_step * N) - gammaln(N + 1.0)
    if params.b_step:
        lg = lg - gammaln(params.beta + params.b_step * N)
    else:
        lg = lg - math.lgamma(params.beta)
    return lg


def _fox_wright_log(params: FoxWrightParams, z, ctl: SeriesControl, block: int = 64):
    """Vectorised log|Psi(z)| and sign; terms in log space, signs from z^N."""
    z = np.asarray(z, dtype=float)
    shape = z.shape
    zf = z.ravel()
    with np.errstate(divide="ignore"):
        logz = np.log(np.abs(zf))
    negz = zf < 0
    L = np.full(zf.shape, -np.inf)
    S = np.zeros_like(zf)
    A = np.zeros_like(zf)
    small = np.zeros(zf.shape, dtype=int)
    done = np.zeros(zf.shape, dtype=bool)
    last = np.zeros_like(zf)
    n0 = 0
    while n0 < ctl.n_max and not done.all():
        N = np.arange(n0, min(n0 + block, ctl.n_max), dtype=float)
        coef = _fox_wright_terms_log(params, N)
        live = np.flatnonzero(~done)
        with np.errstate(invalid="ignore"):
            lt = coef[None, :] + N[None, :] * logz[live, None]
        lt[:, N == 0] = coef[N == 0]
        sg = np.where(negz[live, None] & (N[None, :] % 2 == 1), -1.0, 1.0)
        blockmax = lt.max(axis=1)
        Lnew = np.maximum(L[live], blockmax)
        with np.errstate(invalid="ignore"):
            old = np.where(np.isfinite(L[live]), np.exp(L[live] - Lnew), 0.0)
        mags = np.exp(lt - Lnew[:, None])
        Sl = S[live] * old
        Al = A[live] * old
        sm = small[live]
        # sequential termination test inside the block
        csum = Sl[:, None] + np.cumsum(sg * mags, axis=1)
        below = mags <= ctl.tol * np.abs(csum)
        stop_at = np.full(len(live), -1)
        run = sm.copy()
        for i in range(len(N)):
            run = np.where(below[:, i], run + 1, 0)
            hit = (run >= 3) & (N[i] + 1 >= ctl.n_min) & (stop_at < 0)
            stop_at[hit] = i
        take = np.where(stop_at >= 0, stop_at + 1, len(N))
        mask = np.arange(len(N))[None, :] < take[:, None]
        Sl = Sl + np.sum(np.where(mask, sg * mags, 0.0), axis=1)
        Al = Al + np.sum(np.where(mask, mags, 0.0), axis=1)
        last[live] = mags[np.arange(len(live)), take - 1]
        dl = stop_at >= 0
        S[live], A[live], L[live], small[live] = Sl, Al, Lnew, run
        done[live[dl]] = True
        n0 += block
    absS = np.abs(S)
    with np.errstate(divide="ignore", invalid="ignore"):
        logF = L + np.log(absS)
        rel = (3 * last + 4 * _EPS * A * math.sqrt(max(n0, 1))) / absS
    return (logF.reshape(shape), np.sign(S).reshape(shape), rel.reshape(shape),
            done.reshape(shape), n0)


def fox_wright(params: FoxWrightParams, z: float,
               ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """sum_N Gamma(alpha + A N) / Gamma(beta + B N) z^N / N! (entire in z)."""
    logF, sign, rel, ok, n = _fox_wright_log(params, z, ctl)
    value = float(sign) * math.exp(float(logF))
    return Evaluation(value, abs(value) * float(rel), n, bool(ok), {"log_abs": float(logF)})


def fox_wright_series(n: int, k: float, z: float,
                      ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """S(z) = sum_N Gamma((N+n)/2) / ((nk)_N N!) z^N.

    Equal to Gamma(nk) * 1Psi1[((n/2, 1/2)), ((nk, 1)); z].
    """
    params = FoxWrightParams(n / 2, 0.5, n * k, 1.0)
    ev = fox_wright(params, z, ctl)
    scale = math.gamma(n * k)
    return Evaluation(scale * ev.value, scale * ev.abs_err_est, ev.count, ev.converged, ev.meta)


def odd_kernel_series_log(n: int, z, ctl: SeriesControl = DEFAULT_SERIES):
    """log|K_n(z)| and sign from the power series sum_N Gamma((N+n)/2) z^N / N!.

    Returns ``(log_abs, sign, rel_err, converged)``.
    """
    params = FoxWrightParams(n / 2, 0.5, 1.0, 0.0)
    logF, sign, rel, ok, _ = _fox_wright_log(params, z, ctl)
    return logF, sign, rel, ok


_PBDV_LIMIT = 28.0


def _odd_kernel_rec_log(n, z):
    # K_1 = sqrt(pi) e^(z^2/4) erfc(-z/2), K_2 = 1 + z K_1 / 2 and, by parts,
    # K_(m+2) = (z K_(m+1) + m K_m) / 2. For z >= 0 the values are carried
    # scaled by e^(-z^2/4); every term is then positive.
    scaled = z >= 0
    if scaled.all():
        g = z * z / 4
        k1 = erfc(-z / 2)
        e = np.exp(-g)
    else:
        g = np.where(scaled, z * z / 4, 0.0)
        k1 = np.where(scaled, erfc(-z / 2), erfcx(-z / 2))
        e = np.where(scaled, np.exp(-g), 1.0)
    k1 *= math.sqrt(math.pi)
    if n == 1:
        return g + np.log(k1)
    prev, cur = k1, e + z * k1 / 2
    for m in range(1, n - 1):
        prev, cur = cur, (z * cur + m * prev) / 2
    return g + np.log(cur)


def _odd_kernel_neg_log(n, z):
    x = -z
    out = np.empty_like(z)
    mid = x <= _PBDV_LIMIT
    if mid.any():
        d = pbdv(-n, x[mid] / math.sqrt(2))[0]
        out[mid] = ((1 - n / 2) * math.log(2) + math.lgamma(n) + x[mid] ** 2 / 8 + np.log(d))
    far = ~mid
    if far.any():
        # 2 |z|^-n int w^(n-1) e^(-w) e^(-(w/z)^2) dw, smooth for |z| large
        w, wt = roots_genlaguerre(40, n - 1)
        xf = x[far]
        val = (np.exp(-(w[None, :] / xf[:, None]) ** 2) @ wt)
        out[far] = math.log(2) - n * np.log(xf) + np.log(val)
    return out


def odd_kernel_log(n: int, z, ctl: SeriesControl = DEFAULT_SERIES):
    """Vectorised log K_n(z) for K_n(z) = sum_N Gamma((N+n)/2) z^N / N! = 2 int_0^oo s^(n-1) e^(-s^2+zs) ds.

    K_n is the integrand kernel of the odd-wedge simplex representation and is
    positive on the real line. For z >= -24/n it follows from the three-term
    recurrence in n started at K_1 = sqrt(pi) e^(z^2/4) erfc(-z/2) (exact
    for z >= 0, where every term is positive), for -28 <= z < -24/n from the
    parabolic cylinder function
    K_n(z) = 2^(1-n/2) Gamma(n) e^(z^2/8) D_(-n)(-z/sqrt 2), and further out by
    generalised Gauss-Laguerre quadrature. :func:`odd_kernel_series_log` is
    the independent power-series route. Returns
    ``(log_abs, sign, rel_err, converged)``.
    """
    z = np.asarray(z, dtype=float)
    shape = z.shape
    zf = z.ravel()
    out = np.empty_like(zf)
    # the recurrence cancels for z < 0; the loss stays below ~1e-12 above -24/n
    rec = zf >= -24.0 / n
    if rec.any():
        out[rec] = _odd_kernel_rec_log(n, zf[rec])
    if (~rec).any():
        out[~rec] = _odd_kernel_neg_log(n, zf[~rec])
    rel = np.where((zf < 0) & rec, 1e-12, 16 * _EPS).reshape(shape)
    return out.reshape(shape), np.ones(shape), rel, np.ones(shape, dtype=bool)


def odd_kernel(n: int, z: float, ctl: SeriesControl = DEFAULT_SERIES) -> Evaluation:
    """K_n(z) = sum_N Gamma((N+n)/2) z^N / N!, as an Evaluation."""
    return fox_wright(FoxWrightParams(n / 2, 0.5, 1.0, 0.0), z, ctl)


# ---------------------------------------------------------------------------
# identities used in the series-to-integral rearrangement


def alternating_pochhammer_sum(m: int, k: float) -> float:
    """sum_{j=0}^{2m} (-1)^j (k)_j (k)_{2m-j} / (j! (2m-j)!).

    The t^{2m} coefficient of (1+t)^(-k) (1-t)^(-k) = (1-t^2)^(-k), i.e. (k)_m / m!.
    """
    c = [1.0]
    for j in range(1, 2 * m + 1):
        c.append(c[-1] * (k + j - 1) / j)
    return math.fsum((-1) ** j * c[j] * c[2 * m - j] for j in range(2 * m + 1))


def exact_poly_coeff(coeff_lists: Sequence[Sequence[Fraction]], M: int) -> Fraction:
    """t^M coefficient of a product of truncated power series, in exact arithmetic."""
    acc = [Fraction(0)] * (M + 1)
    acc[0] = Fraction(1)
    for co in coeff_lists:
        new = [Fraction(0)] * (M + 1)
        for i, ai in enumerate(acc):
            if ai == 0:
                continue
            for j in range(M + 1 - i):
                new[i + j] += ai * co[j]
        acc = new
    return acc[M]
