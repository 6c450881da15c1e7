"""Monte-Carlo oracle for the first wall-hitting time of a radial Dunkl process.

In polar coordinates the radial Dunkl process with common multiplicity
m = 1 - k on the wedge {0 < theta < pi/n} solves

    dr     = dW_1 + (2 n m + 1) / (2 r) dt,
    dtheta = dW_2 / r + a(theta) / r^2 dt,

with a(theta) = p m (cot p theta - tan p theta) for the even wedge of index p
(n = 2p) and a(theta) = n m cot(n theta) for odd n. The radius is a Bessel
process of dimension 2 n m + 2.

The scheme is Euler-Maruyama with a step proportional to r^2 (so the angular
noise per step is scale free) that shrinks quadratically as the path nears a
wall. A path is absorbed once theta leaves [eps, chamber - eps], or when a
Brownian-bridge estimate says the band was crossed inside the step.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .density import StartPoint, WedgeSpec

__all__ = [
    "SimConfig",
    "HitSample",
    "HitSamples",
    "simulate_path",
    "estimate_v0",
    "ks_distance",
    "radial_mean_square",
    "BLOCK",
]

BLOCK = 8192


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls.

    ``eps`` and ``wall_band`` are angles in radians; :meth:`default` sets
    them to 1e-3 and 0.15 of the chamber angle. The local step is
    dt (r/rho)^2 min(1, (d/wall_band)^2), d being the angular distance to the
    nearest wall, so halving ``dt`` refines every step. ``bridge`` adds a
    driftless Brownian-bridge crossing test between steps; it ignores the
    repulsive wall drift and biases T0 low unless the wall band is fine.

    ``substeps`` splits every step into that many Euler sub-steps driven by
    the same Brownian path (Levy refinement), so ``substeps=2`` is the dt/2
    scheme coupled path by path to the ``substeps=1`` run.
    """

    dt: float = 1e-4
    eps: float = 1e-3 * math.pi / 4
    t_max: float = 1e3
    paths: int = 10_000
    seed: int = 0
    wall_band: float = 0.15 * math.pi / 4
    bridge: bool = False
    substeps: int = 1
    workers: int = 1

    def __post_init__(self):
        if not 0 < self.dt <= 1e-3:
            raise ValueError(f"dt must lie in (0, 1e-3], got {self.dt}")
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0")
        if self.paths < 0:
            raise ValueError("paths must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if not self.wall_band > 0:
            raise ValueError("wall_band must be > 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.substeps < 1 or self.substeps & (self.substeps - 1):
            raise ValueError("substeps must be a power of two")

    @classmethod
    def default(cls, spec: WedgeSpec, **kw) -> "SimConfig":
        kw.setdefault("eps", 1e-3 * spec.chamber)
        kw.setdefault("wall_band", 0.15 * spec.chamber)
        return cls(**kw)

    def check(self, spec: WedgeSpec) -> "SimConfig":
        if not self.eps < 0.1 * spec.chamber:
            raise ValueError(f"eps={self.eps} is not small against the chamber angle {spec.chamber}")
        return self


@dataclass(frozen=True)
class HitSample:
    t_hit: float
    censored: bool
    v0: float

    @property
    def hit(self) -> bool:
        return not self.censored


@dataclass
class HitSamples:
    """Column storage for many paths; ``v0`` is NaN for censored paths."""

    t_hit: np.ndarray
    censored: np.ndarray
    v0: np.ndarray
    rho: float

    def __len__(self):
        return len(self.t_hit)

    def __getitem__(self, i) -> HitSample:
        return HitSample(float(self.t_hit[i]), bool(self.censored[i]), float(self.v0[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def hit_fraction(self) -> float:
        return float(np.mean(~self.censored)) if len(self) else float("nan")

    def to_csv(self, header_lines=()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path_id", "t_hit", "censored", "v0"])
        for i in range(len(self)):
            w.writerow([i, repr(float(self.t_hit[i])), int(self.censored[i]),
                        "" if self.censored[i] else repr(float(self.v0[i]))])
        return buf.getvalue()


def _drift(spec: WedgeSpec, theta):
    m = spec.multiplicity
    if spec.parity == "even":
        p = spec.index
        return p * m * (1 / np.tan(p * theta) - np.tan(p * theta))
    n = spec.n
    return n * m / np.tan(n * theta)


# ---------------------------------------------------------------------------
# counter-based normals: path i, step j, slot q -> two N(0, 1) draws


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix(x):
    """splitmix64 finaliser (wrapping uint64 arithmetic)."""
    with np.errstate(over="ignore"):
        x = x + _GOLDEN
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _path_keys(seed: int, path_ids):
    s = _mix(np.uint64(seed))
    return _mix(s ^ np.asarray(path_ids, dtype=np.uint64))


def _uniforms(keys, steps, slot: int):
    """Two U(0, 1) draws per path for draw ``slot`` of step ``steps``; the first is never 0."""
    with np.errstate(over="ignore"):
        base = keys ^ _mix(steps.astype(np.uint64) * np.uint64(1 << 16) + np.uint64(slot))
        a = _mix(base)
        b = _mix(base + _GOLDEN)
    u1 = ((a >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    u2 = (b >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    return u1, u2


def _normals(keys, steps, slot: int):
    """Two standard normals per path (Box-Muller) for draw ``slot`` of step ``steps``."""
    u1, u2 = _uniforms(keys, steps, slot)
    rad = np.sqrt(-2.0 * np.log(u1))
    return rad * np.cos(2 * np.pi * u2), rad * np.sin(2 * np.pi * u2)


_BRIDGE_SLOT = 1 << 15


def _increments(keys, steps, H, substeps):
    """Brownian increments over a step of length H split into ``substeps`` pieces.

    The whole-step increment always comes from slot 0; finer pieces are added
    by Levy midpoint refinement with further slots. Runs that differ only in
    ``substeps`` are therefore driven by the same Brownian path.
    """
    z1, z2 = _normals(keys, steps, 0)
    sq = np.sqrt(H)
    pieces = [(sq * z1, sq * z2)]
    length = H
    slot = 1
    while len(pieces) < substeps:
        finer = []
        for d1, d2 in pieces:
            w1, w2 = _normals(keys, steps, slot)
            slot += 1
            half = np.sqrt(length) / 2
            finer.append((d1 / 2 + half * w1, d2 / 2 + half * w2))
            finer.append((d1 / 2 - half * w1, d2 / 2 - half * w2))
        pieces = finer
        length = length / 2
    return pieces


def _run_block(spec: WedgeSpec, start: StartPoint, cfg: SimConfig, path_ids):
    """Simulate the given paths; returns (t_hit, censored) arrays."""
    chamber = spec.chamber
    eps = cfg.eps
    rho = start.rho
    radial = (2 * spec.n * spec.multiplicity + 1) / 2
    path_ids = np.asarray(path_ids, dtype=np.int64)
    n_paths = len(path_ids)
    t_hit = np.full(n_paths, np.nan)
    censored = np.zeros(n_paths, dtype=bool)
    if n_paths == 0:
        return t_hit, censored
    if min(start.phi, chamber - start.phi) <= eps:
        t_hit[:] = 0.0
        return t_hit, censored

    keys = _path_keys(cfg.seed, path_ids)
    idx = np.arange(n_paths)
    r = np.full(n_paths, rho)
    th = np.full(n_paths, start.phi)
    t = np.zeros(n_paths)
    shrink = np.ones(n_paths)
    step = np.zeros(n_paths, dtype=np.int64)
    S = cfg.substeps
    while idx.size:
        d = np.minimum(th, chamber - th)
        # step ~ r^2 keeps the angular increment scale free; inside the wall
        # band it shrinks like d^2, tracking the singular drift
        H = cfg.dt * (r / rho) ** 2 * np.minimum(1.0, (d / cfg.wall_band) ** 2) * shrink
        H = np.minimum(H, cfg.t_max - t)
        pieces = _increments(keys[idx], step, H, S)
        h = H / S
        rr, tt, ts = r, th, t
        hit = np.zeros(idx.size, dtype=bool)
        bad = np.zeros(idx.size, dtype=bool)
        for sub, (dw1, dw2) in enumerate(pieces):
            live = ~(hit | bad)
            r_new = rr + dw1 + radial / rr * h
            th_new = tt + dw2 / rr + _drift(spec, tt) / rr ** 2 * h
            bad |= live & (r_new <= 0)
            live &= ~bad
            d_new = np.minimum(th_new, chamber - th_new)
            new_hit = live & (d_new <= eps)
            if cfg.bridge:
                dd = np.minimum(tt, chamber - tt)
                same = (th_new < chamber / 2) == (tt < chamber / 2)
                gap = np.maximum(dd - eps, 0) * np.maximum(d_new - eps, 0)
                with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                    pc = np.exp(-2 * gap * rr * np.abs(r_new) / np.maximum(h, 1e-300))
                u = _uniforms(keys[idx], step, _BRIDGE_SLOT + sub)[0]
                new_hit |= live & same & (u < pc)
            rr = np.where(live, r_new, rr)
            tt = np.where(live, th_new, tt)
            ts = np.where(live | new_hit, ts + h, ts)
            hit |= new_hit
        # a negative radius rejects the whole step, which is retried with half the length
        shrink = np.where(bad, shrink * 0.5, 1.0)
        r_new = np.where(bad, r, rr)
        th_new = np.where(bad, th, tt)
        t_new = np.where(bad, t, ts)
        done_c = (t_new >= cfg.t_max) & ~hit
        t_hit[idx[hit]] = t_new[hit]
        censored[idx[done_c]] = True
        t_hit[idx[done_c]] = cfg.t_max
        keep = ~(hit | done_c)
        step = step + 1
        idx, r, th, t, shrink, step = (idx[keep], r_new[keep], th_new[keep], t_new[keep],
                                       shrink[keep], step[keep])
    return t_hit, censored


def simulate_path(spec: WedgeSpec, start: StartPoint, cfg: SimConfig,
                  rng_state: int = 0) -> HitSample:
    """One path, driven by the random stream of path index ``rng_state``."""
    start.check(spec)
    t, c = _run_block(spec, start, cfg, [rng_state])
    return _to_sample(float(t[0]), bool(c[0]), start.rho)


def _to_sample(t, c, rho):
    if c:
        return HitSample(t, True, float("nan"))
    return HitSample(t, False, rho * rho / (2 * t) if t > 0 else math.inf)


def estimate_v0(spec: WedgeSpec, start: StartPoint, cfg: SimConfig) -> HitSamples:
    """Simulate ``cfg.paths`` independent paths.

    Path i is driven by a counter-based stream keyed on ``(seed, i)``, so a
    path does not depend on the other paths, on ``cfg.workers`` or on the
    block size; the first N paths of a larger run are the N-path run.
    """
    start.check(spec)
    cfg.check(spec)
    blocks = [np.arange(b, min(b + BLOCK, cfg.paths)) for b in range(0, cfg.paths, BLOCK)]

    def job(ids):
        return _run_block(spec, start, cfg, ids)

    if cfg.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            parts = list(ex.map(job, blocks))
    else:
        parts = [job(ids) for ids in blocks]
    if parts:
        t_hit = np.concatenate([p[0] for p in parts])
        censored = np.concatenate([p[1] for p in parts])
    else:
        t_hit, censored = np.zeros(0), np.zeros(0, dtype=bool)
    with np.errstate(divide="ignore"):
        v0 = np.where(censored, np.nan, start.rho ** 2 / (2 * t_hit))
    return HitSamples(t_hit, censored, v0, start.rho)


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the V0 sample and a model CDF.

    ``samples`` is a :class:`HitSamples` or an array of V0 values with NaN
    marking censored paths. A censored path has V0 below rho^2/(2 t_max);
    it enters as V0 = 0, which leaves the empirical CDF exact above that
    level.
    """
    from scipy.stats import kstest

    v = samples.v0 if isinstance(samples, HitSamples) else np.asarray(samples, dtype=float)
    n_hit = int(np.sum(np.isfinite(v) | np.isposinf(v)))
    if n_hit < 100:
        raise ValueError(f"need at least 100 uncensored samples, got {n_hit}")
    v = np.where(np.isnan(v), 0.0, v)
    return float(kstest(v, cdf).statistic)


def radial_mean_square(spec: WedgeSpec, rho: float, t: float, dt: float, paths: int,
                       seed: int = 0):
    """Euler simulation of the radius alone up to time t.

    Returns (mean of r_t^2, its standard error, rho^2 + dim t) with
    dim = 2 n m + 2 the Bessel dimension.
    """
    rng = np.random.default_rng([seed, 0])
    radial = (2 * spec.n * spec.multiplicity + 1) / 2
    steps = int(math.ceil(t / dt))
    h = t / steps
    r = np.full(paths, float(rho))
    for _ in range(steps):
        r = np.abs(r + math.sqrt(h) * rng.standard_normal(paths) + radial / r * h)
    r2 = r * r
    dim = 2 * spec.n * spec.multiplicity + 2
    return float(r2.mean()), float(r2.std(ddof=1) / math.sqrt(paths)), rho * rho + dim * t
