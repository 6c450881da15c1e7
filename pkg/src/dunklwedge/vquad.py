"""Adaptive composite Gauss-Legendre quadrature on a bounded interval.

Each round evaluates every unresolved panel, as a whole and as two halves,
in a single vectorised call of the integrand. A panel is accepted when the
two estimates agree to within its share (by width) of ``rtol`` times the
running total; otherwise it is bisected.
"""

from __future__ import annotations

import numpy as np

from .specfun import Evaluation

__all__ = ["adaptive_panels"]


def adaptive_panels(fun, a: float, b: float, rtol: float = 1e-10, atol: float = 0.0,
                    edges=None, order: int = 16, max_rounds: int = 40) -> Evaluation:
    """Integrate a vectorised ``fun`` over [a, b].

    Parameters
    ----------
    fun : callable
        Maps a 1-d array of abscissae to values of the same shape.
    edges : array_like, optional
        Initial panel boundaries; defaults to [a, b].
    """
    if not b > a:
        if b == a:
            return Evaluation(0.0, 0.0, 0, True)
        raise ValueError("need a < b")
    x, w = np.polynomial.legendre.leggauss(order)
    if edges is None:
        edges = np.array([a, b], dtype=float)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1], edges[1:]
    total_width = b - a
    accepted = 0.0
    acc_err = 0.0
    count = 0
    converged = False
    for _ in range(max_rounds):
        mid = (lo + hi) / 2
        # nodes for [lo, mid] and [mid, hi]; the whole-panel rule is evaluated too
        h = (hi - lo)[:, None]
        nodes = np.concatenate([
            (lo + hi)[:, None] / 2 + h / 2 * x,
            (lo[:, None] + mid[:, None]) / 2 + h / 4 * x,
            (mid[:, None] + hi[:, None]) / 2 + h / 4 * x,
        ], axis=1)
        vals = np.asarray(fun(nodes.ravel()), dtype=float).reshape(nodes.shape)
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("non-finite integrand value in adaptive_panels")
        count += vals.size
        m = len(x)
        whole = (vals[:, :m] @ w) * h[:, 0] / 2
        halves = (vals[:, m:2 * m] @ w + vals[:, 2 * m:] @ w) * h[:, 0] / 4
        err = np.abs(whole - halves)
        estimate = accepted + halves.sum()
        budget = np.maximum(rtol * abs(estimate), atol) * (hi - lo) / total_width
        ok = err <= budget
        accepted += halves[ok].sum()
        acc_err += err[ok].sum()
        if ok.all():
            converged = True
            break
        lo, hi, mid = lo[~ok], hi[~ok], mid[~ok]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
    else:
        accepted += halves[~ok].sum()
        acc_err += err[~ok].sum()
    return Evaluation(float(accepted), float(acc_err), count, converged)
