"""Command-line front end.

Subcommands ``density``, ``identities``, ``laplace``, ``simulate`` and
``compare`` write CSV with a ``#`` provenance header listing every resolved
parameter, the seed and the package version. Settings resolve in the order
built-in defaults < ``--config`` JSON file < command-line flags. The exit
status is 0 iff every check requested by the run passed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from typing import Any

import numpy as np

from . import __version__
from .density import (DensityTable, StartPoint, WedgeSpec, check_idgeg, density_cdf,
                      density_values, normalize)
from .laplace import (expected_ratio, laplace_even_closed, laplace_numeric, laplace_odd_closed,
                      laplace_p2_remark)
from .simplex import QuadratureControl
from .simulator import SimConfig, estimate_v0, ks_distance
from .specfun import SeriesControl

COMMON_DEFAULTS: dict[str, Any] = {
    "out": None, "seed": 0, "tol": 1e-15, "quad": "tensor", "samples": 100_000,
    "degree": 24, "workers": 1, "config": None,
}
WEDGE_DEFAULTS: dict[str, Any] = {"parity": "even", "p": None, "n": None, "k": None}
DEFAULTS: dict[str, dict[str, Any]] = {
    "density": {**WEDGE_DEFAULTS, "phi": None, "v": None, "v_grid": None, "form": "integral",
                "rel_tol": 1e-6},
    "identities": {"idgeg_M": None, "idgeg_q": None, "xi": None, "k": None, "poch_m": None},
    "laplace": {**WEDGE_DEFAULTS, "y": None, "y_grid": None, "odd_form": "kernel",
                "flat_tol": None},
    "simulate": {**WEDGE_DEFAULTS, "phi": None, "rho": 1.0, "dt": 1e-4, "eps": None,
                 "wall_band": None, "t_max": 1e3, "paths": 10_000, "substeps": 1,
                 "bridge": False, "hit_min": None},
}
DEFAULTS["compare"] = {**DEFAULTS["simulate"], "ks_tol": 0.02, "hit_min": 0.99}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:count``, inclusive and linear; a plain number is a one-point grid."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise UsageError(f"grid {text!r} is not of the form start:stop:count")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise UsageError(f"grid {text!r}: count must be >= 1")
    if count == 1:
        return np.array([start])
    return np.linspace(start, stop, count)


def _grid(cfg, single, grid, name):
    if cfg.get(grid) is not None:
        return parse_grid(cfg[grid])
    if cfg.get(single) is not None:
        vals = cfg[single]
        return np.atleast_1d(np.asarray(vals, dtype=float))
    raise UsageError(f"give --{name} or --{name}-grid")


def _wedge(cfg, allow_nonhitting=False) -> WedgeSpec:
    if cfg.get("k") is None:
        raise UsageError("--k is required")
    parity = cfg["parity"]
    index = cfg["p"] if parity == "even" else cfg["n"]
    if index is None:
        raise UsageError(f"--{'p' if parity == 'even' else 'n'} is required for parity={parity}")
    hitting = 0.5 < cfg["k"] <= 1
    if allow_nonhitting and not hitting:
        warnings.warn(f"multiplicity 1-k = {1 - cfg['k']:g} is not strictly less than 1/2: "
                      "the wall is hit with probability < 1, expect a hit fraction near 0",
                      stacklevel=2)
        return WedgeSpec(parity, int(index), float(cfg["k"]), require_hitting=False)
    return WedgeSpec(parity, int(index), float(cfg["k"]))


def _quad(cfg) -> QuadratureControl:
    return QuadratureControl(method=cfg["quad"], samples=int(cfg["samples"]),
                             degree=int(cfg["degree"]), seed=int(cfg["seed"]),
                             workers=int(cfg["workers"]))


def _ctl(cfg) -> SeriesControl:
    return SeriesControl(tol=float(cfg["tol"]))


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("global options")
    g.add_argument("--out", help="output CSV path (default: stdout)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument("--tol", type=float, help="series truncation tolerance (default 1e-15)")
    g.add_argument("--quad", choices=["mc", "tensor"], help="simplex quadrature (default tensor)")
    g.add_argument("--samples", type=int, help="Monte-Carlo simplex samples (default 1e5)")
    g.add_argument("--degree", type=int, help="Gauss-Jacobi points per coordinate (default 24)")
    g.add_argument("--workers", type=int, help="worker threads (default 1)")
    g.add_argument("--config", help="JSON file with option values; flags override it")
    return p


def _wedge_args(p):
    p.add_argument("--parity", choices=["even", "odd"])
    p.add_argument("--p", type=int, help="even wedge index (angle pi/(2p))")
    p.add_argument("--n", type=int, help="odd wedge index (angle pi/n)")
    p.add_argument("--k", type=float, help="k in (1/2, 1]; the multiplicity is 1-k")


def _sim_args(p):
    _wedge_args(p)
    p.add_argument("--phi", type=float, help="start angle in radians")
    p.add_argument("--rho", type=float, help="start radius (default 1)")
    p.add_argument("--dt", type=float, help="base time step (default 1e-4)")
    p.add_argument("--eps", type=float, help="absorption band in radians (default 1e-3 chamber)")
    p.add_argument("--wall-band", dest="wall_band", type=float,
                   help="angular width of step refinement near walls (default 0.15 chamber)")
    p.add_argument("--t-max", dest="t_max", type=float, help="censoring horizon (default 1e3)")
    p.add_argument("--paths", type=int, help="number of paths (default 1e4)")
    p.add_argument("--substeps", type=int, help="Euler sub-steps per step (default 1)")
    p.add_argument("--bridge", action="store_true", help="Brownian-bridge crossing test")
    p.add_argument("--hit-min", dest="hit_min", type=float, help="required hit fraction")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="dunklwedge",
        description="Density of V0 = rho^2/(2 T0) for radial Dunkl processes in dihedral wedges.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("density", parents=[common], argument_default=argparse.SUPPRESS,
                       help="tabulate the density of V0")
    _wedge_args(d)
    d.add_argument("--phi", type=float, help="start angle in radians")
    d.add_argument("--v", type=float, nargs="+", help="evaluation points")
    d.add_argument("--v-grid", dest="v_grid", help="start:stop:count")
    d.add_argument("--form", choices=["series", "integral", "both"])
    d.add_argument("--rel-tol", dest="rel_tol", type=float,
                   help="series/integral agreement required with --form both (default 1e-6)")

    i = sub.add_parser("identities", parents=[common], argument_default=argparse.SUPPRESS,
                       help="run the special-function identity suites")
    i.add_argument("--idgeg-M", dest="idgeg_M", type=int, help="only the Gegenbauer identity at this M")
    i.add_argument("--idgeg-q", dest="idgeg_q", type=int, help="restrict q")
    i.add_argument("--xi", type=float, help="restrict xi")
    i.add_argument("--k", type=float, help="restrict k")
    i.add_argument("--poch-m", dest="poch_m", type=int, help="only the Pochhammer sum at this m")

    la = sub.add_parser("laplace", parents=[common], argument_default=argparse.SUPPRESS,
                        help="closed vs numerical weighted Laplace transform")
    _wedge_args(la)
    la.add_argument("--y", type=float, nargs="+", help="transform parameters")
    la.add_argument("--y-grid", dest="y_grid", help="start:stop:count")
    la.add_argument("--odd-form", dest="odd_form", choices=["kernel", "fd", "printed"])
    la.add_argument("--flat-tol", dest="flat_tol", type=float,
                    help="allowed coefficient of variation of the ratio")

    s = sub.add_parser("simulate", parents=[common], argument_default=argparse.SUPPRESS,
                       help="simulate hitting times")
    _sim_args(s)
    c = sub.add_parser("compare", parents=[common], argument_default=argparse.SUPPRESS,
                       help="simulate and compare with the analytic density")
    _sim_args(c)
    c.add_argument("--ks-tol", dest="ks_tol", type=float, help="KS bound (default 0.02)")
    return parser


def resolve(ns: argparse.Namespace) -> dict[str, Any]:
    """defaults < JSON config < explicit flags; unknown config keys are rejected."""
    cmd = ns.command
    flags = {k: v for k, v in vars(ns).items() if k != "command"}
    allowed = {**COMMON_DEFAULTS, **DEFAULTS[cmd]}
    file_cfg: dict[str, Any] = {}
    path = flags.get("config")
    if path:
        with open(path) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        if file_cfg.pop("command", cmd) != cmd:
            raise UsageError("config file is for a different subcommand")
        unknown = sorted(set(file_cfg) - set(allowed) - {"config"})
        if unknown:
            raise UsageError(f"unknown config keys for {cmd}: {', '.join(unknown)}")
    cfg = {**allowed, **file_cfg, **flags}
    cfg["command"] = cmd
    return cfg


# ---------------------------------------------------------------------------
# output


def _header(cfg) -> list[str]:
    items = {k: cfg[k] for k in sorted(cfg) if k not in ("config", "out")}
    return [f"dunklwedge {__version__}", "params " + json.dumps(items, sort_keys=True, default=str)]


def _emit(cfg, text: str):
    if cfg.get("out"):
        with open(cfg["out"], "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, columns, rows) -> str:
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _report(msg: str):
    print(msg, file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def cmd_density(cfg) -> int:
    spec = _wedge(cfg)
    if cfg.get("phi") is None:
        raise UsageError("--phi is required")
    phi = float(cfg["phi"])
    StartPoint(1.0, phi).check(spec)
    v = _grid(cfg, "v", "v_grid", "v")
    if np.any(v <= 0):
        raise UsageError("v must be > 0 (the density is defined for v > 0)")
    if np.any(np.diff(v) <= 0):
        raise UsageError("v values must be strictly increasing")
    ctl, quad = _ctl(cfg), _quad(cfg)
    c = normalize(spec, phi, "integral", ctl=ctl, quad=quad)
    forms = ["series", "integral"] if cfg["form"] == "both" else [cfg["form"]]
    tables = {}
    for form in forms:
        vals, errs = density_values(spec, phi, v, form, ctl, quad)
        tables[form] = DensityTable(v, vals, vals / c, form, c, errs)
    header = _header(cfg) + [f"normalizing_constant {float(c)!r}"]
    ok = True
    if cfg["form"] == "both":
        s, t = tables["series"], tables["integral"]
        gap = np.abs(s.unnormalized - t.unnormalized) / np.abs(t.unnormalized)
        if quad.method == "mc":
            limit = np.maximum(cfg["rel_tol"], 3 * np.hypot(s.abs_err, t.abs_err) / np.abs(t.unnormalized))
        else:
            limit = np.full_like(gap, cfg["rel_tol"])
        ok = bool(np.all(gap <= limit))
        rows = []
        for i in range(len(v)):
            for tb in (s, t):
                rows.append((v[i], tb.unnormalized[i], tb.normalized[i], tb.form, tb.abs_err[i], gap[i]))
        text = _csv(header, ["v", "unnormalized", "normalized", "form", "abs_err", "rel_gap"], rows)
        _report(f"density: max rel_gap {gap.max():.3e} -> {'PASS' if ok else 'FAIL'}")
    else:
        text = tables[forms[0]].to_csv(header)
    _emit(cfg, text)
    return 0 if ok else 1


def _identity_rows(cfg):
    from .specfun import (alternating_pochhammer_sum, gegenbauer, gegenbauer_hyp2f1, hyp1f1,
                          hyp1f1_euler, lauricella_fd, lauricella_fd_euler, pochhammer)

    rows = []

    def add(check, params, lhs, rhs, tol):
        rel = abs(lhs - rhs) / max(abs(lhs), 1e-300)
        if lhs == rhs:
            rel = 0.0
        rows.append((check, params, lhs, rhs, rel, tol, rel <= tol))

    only = [name for name in ("idgeg_M", "poch_m") if cfg.get(name) is not None]
    run_all = not only
    if run_all or cfg.get("idgeg_M") is not None:
        Ms = [cfg["idgeg_M"]] if cfg.get("idgeg_M") is not None else range(9)
        qs = [cfg["idgeg_q"]] if cfg.get("idgeg_q") is not None else (2, 3, 4, 5)
        ks = [cfg["k"]] if cfg.get("k") is not None else (0.6, 1.0)
        xis = [cfg["xi"]] if cfg.get("xi") is not None else (0.0, 0.5, 1.5, math.pi)
        for M in Ms:
            for q in qs:
                for k in ks:
                    for xi in xis:
                        lhs, rhs = check_idgeg(M, q, k, xi)
                        add("idgeg", f"M={M} q={q} k={k} xi={xi!r}", lhs, rhs, 1e-10)
    if run_all or cfg.get("poch_m") is not None:
        ms = [cfg["poch_m"]] if cfg.get("poch_m") is not None else range(13)
        ks = [cfg["k"]] if cfg.get("k") is not None else (0.6, 0.75, 1.0)
        for m in ms:
            for k in ks:
                add("pochhammer", f"m={m} k={k}", alternating_pochhammer_sum(m, k),
                    pochhammer(k, m) / math.factorial(m), 1e-12)
    if run_all:
        for j in range(31):
            for k in (0.6, 1.0, 2.5):
                for x in (-0.9, 0.3, 0.99):
                    add("gegenbauer", f"j={j} k={k} x={x}", gegenbauer(j, k, x),
                        gegenbauer_hyp2f1(j, k, x), 1e-10)
        for a, c, z in ((0.5, 1.7, 3.0), (2.0, 2.25, 10.0), (1.2, 4.0, -6.0), (3.0, 5.5, 25.0)):
            add("1f1_euler", f"a={a} c={c} z={z}", hyp1f1(a, c, z).value,
                hyp1f1_euler(a, c, z).value, 1e-9)
        for a, d, c, z in ((1.5, (0.7, 0.9), 2.4, (0.3, -0.5)), (2.0, (0.75,), 1.5, (-0.6,)),
                           (3.0, (0.8, 0.8), 2.4, (-0.4, 0.2))):
            add("fd_euler", f"a={a} d={d} c={c} z={z}", lauricella_fd(a, d, c, z).value,
                lauricella_fd_euler(a, d, c, z, QuadratureControl(degree=60)).value, 1e-8)
        for x in (0.3, 1.0, 2.75, 7.5, 40.0):
            lhs = math.lgamma(2 * x)
            rhs = ((2 * x - 1) * math.log(2) + math.lgamma(x) + math.lgamma(x + 0.5)
                   - 0.5 * math.log(math.pi))
            add("duplication", f"x={x}", math.exp(lhs), math.exp(rhs), 1e-12)
    return rows


def cmd_identities(cfg) -> int:
    rows = _identity_rows(cfg)
    ok = all(r[-1] for r in rows)
    text = _csv(_header(cfg), ["check", "params", "lhs", "rhs", "rel_err", "tol", "pass"], rows)
    _emit(cfg, text)
    worst = {}
    for r in rows:
        worst[r[0]] = max(worst.get(r[0], 0.0), r[4])
    for name, err in worst.items():
        _report(f"identities: {name} max rel_err {err:.3e}")
    _report(f"identities: {sum(r[-1] for r in rows)}/{len(rows)} pass")
    return 0 if ok else 1


def cmd_laplace(cfg) -> int:
    spec = _wedge(cfg)
    ys = _grid(cfg, "y", "y_grid", "y")
    if np.any(ys <= 0):
        raise UsageError("y must be > 0")
    ctl, quad = _ctl(cfg), _quad(cfg)
    rows = []
    p2 = spec.parity == "even" and spec.index == 2
    for y in ys:
        if spec.parity == "even":
            closed = laplace_even_closed(spec, float(y), ctl).value
            numeric = laplace_numeric(spec, float(y), ctl, QuadratureControl(degree=quad.degree)).value
        else:
            closed = laplace_odd_closed(spec, float(y), quad, ctl, form=cfg["odd_form"]).value
            # the same simplex rule (or draws) on both sides
            numeric = laplace_numeric(spec, float(y), ctl, quad).value
        row = [y, closed, numeric, numeric / closed]
        if p2:
            row.append(abs(closed - 8 * laplace_p2_remark(spec.k, float(y), ctl)) / closed)
        rows.append(row)
    ratios = np.array([r[3] for r in rows])
    cv = float(ratios.std() / abs(ratios.mean())) if len(ratios) > 1 else 0.0
    tol = cfg["flat_tol"] if cfg["flat_tol"] is not None else (1e-3 if quad.method == "mc" else 1e-4)
    ok = cv <= tol
    if p2:
        ok = ok and all(r[4] <= 1e-9 for r in rows)
    cols = ["y", "closed", "numeric", "ratio"] + (["2f1_check"] if p2 else [])
    header = _header(cfg) + [f"ratio_cv {cv!r}", f"expected_ratio {float(expected_ratio(spec))!r}"]
    _emit(cfg, _csv(header, cols, rows))
    _report(f"laplace: ratio cv {cv:.3e} (tol {tol:g}) -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _simulate(cfg, allow_nonhitting):
    spec = _wedge(cfg, allow_nonhitting=allow_nonhitting)
    if cfg.get("phi") is None:
        raise UsageError("--phi is required")
    start = StartPoint(float(cfg["rho"]), float(cfg["phi"])).check(spec)
    kw = dict(dt=cfg["dt"], t_max=cfg["t_max"], paths=cfg["paths"], seed=cfg["seed"],
              substeps=cfg["substeps"], bridge=bool(cfg["bridge"]), workers=cfg["workers"])
    if cfg.get("eps") is not None:
        kw["eps"] = cfg["eps"]
    if cfg.get("wall_band") is not None:
        kw["wall_band"] = cfg["wall_band"]
    sim = SimConfig.default(spec, **kw)
    samples = estimate_v0(spec, start, sim)
    return spec, start, sim, samples


def _summary(samples, ks, sim):
    return ("n_paths,hit_frac,ks,dt,eps,seed\n"
            f"{len(samples)},{_fmt(samples.hit_fraction)},{'' if ks is None else _fmt(ks)},"
            f"{_fmt(sim.dt)},{_fmt(sim.eps)},{sim.seed}\n")


def _finish_sim(cfg, samples, sim, ks, ok):
    header = _header(cfg) + [f"eps {float(sim.eps)!r}", f"wall_band {float(sim.wall_band)!r}"]
    _emit(cfg, samples.to_csv(header))
    summary = _summary(samples, ks, sim)
    if cfg.get("out"):
        sys.stdout.write(summary)
    else:
        sys.stderr.write(summary)
    return 0 if ok else 1


def cmd_simulate(cfg) -> int:
    spec, start, sim, samples = _simulate(cfg, allow_nonhitting=True)
    ok = True
    if cfg.get("hit_min") is not None:
        ok = samples.hit_fraction >= cfg["hit_min"]
    return _finish_sim(cfg, samples, sim, None, ok)


def cmd_compare(cfg) -> int:
    spec, start, sim, samples = _simulate(cfg, allow_nonhitting=False)
    cdf = density_cdf(spec, start.phi, _ctl(cfg), QuadratureControl(degree=int(cfg["degree"])))
    ks = ks_distance(samples, cdf)
    ok = ks <= cfg["ks_tol"] and samples.hit_fraction >= cfg["hit_min"]
    _report(f"compare: ks {ks:.4f} (tol {cfg['ks_tol']}), hit_frac {samples.hit_fraction:.5f}"
            f" -> {'PASS' if ok else 'FAIL'}")
    return _finish_sim(cfg, samples, sim, ks, ok)


COMMANDS = {"density": cmd_density, "identities": cmd_identities, "laplace": cmd_laplace,
            "simulate": cmd_simulate, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve(ns)
        return COMMANDS[cfg["command"]](cfg)
    except (UsageError, ValueError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
