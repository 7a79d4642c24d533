"""Dynamical Markov and Lagrange values over the Poincare map and the flow.

For an observable f on the section, m(x) = sup_n f(P^n x) and
l(x) = limsup_n f(P^n x). For the flow the sup runs over continuous time.
A flow observable F is reduced to the section through
maxF(x) = max of F along the flow segment from x to P(x); the Markov value of
P for maxF then equals the Markov value of the flow for F.

Flow segment from (x0, y0, 1): the linear saddle flow for time tau(x0) up to
the exit face |x| = 1, then a straight exterior transit of fixed duration
EXTERIOR_TIME back to P(x0, y0) on the section.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SamplingError, SingularLeafError, SingularOrbitError
from .geo_model import GeoParams, SectionPoint, g_eval, poincare_jacobian

EXTERIOR_TIME = 1.0
SINGULAR_TOL = 1e-10


# -- observables -------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticForm:
    """c + <lin, u> + u^T quad u for u = (x, y) on the section or (x, y, z) in space."""

    const: float = 0.0
    lin: tuple = ()
    quad: tuple = ()

    def __call__(self, *coords):
        u = [np.asarray(c, dtype=float) for c in coords]
        out = np.full(np.broadcast(*u).shape, float(self.const))
        for a, c in zip(self.lin, u):
            out = out + a * c
        for i, row in enumerate(self.quad):
            for j, q in enumerate(row):
                if q:
                    out = out + q * u[i] * u[j]
        return out

    def to_dict(self) -> dict:
        return {"const": self.const, "lin": list(self.lin), "quad": [list(r) for r in self.quad]}

    @classmethod
    def from_dict(cls, d: dict) -> "QuadraticForm":
        return cls(float(d.get("const", 0.0)), tuple(d.get("lin", ())),
                   tuple(tuple(r) for r in d.get("quad", ())))


def named_function(name: str) -> Callable:
    """Built-in observables: 'x', 'y', 'z', 'const:<c>', 'radius2'."""
    if name == "x":
        return lambda *u: np.asarray(u[0], dtype=float)
    if name == "y":
        return lambda *u: np.asarray(u[1], dtype=float)
    if name == "z":
        def fz(*u):
            if len(u) >= 3:
                return np.asarray(u[2], dtype=float)
            return np.ones(np.shape(u[0]))  # the section sits at z = 1
        return fz
    if name == "radius2":
        return lambda *u: sum(np.asarray(c, dtype=float) ** 2 for c in u)
    if name.startswith("const:"):
        c = float(name.split(":", 1)[1])
        return lambda *u: np.full(np.shape(u[0]), c)
    raise ValueError(f"unknown function {name!r}")


def as_function(spec) -> Callable:
    if callable(spec):
        return spec
    if isinstance(spec, str):
        return named_function(spec)
    if isinstance(spec, dict):
        return QuadraticForm.from_dict(spec)
    raise TypeError(f"cannot build an observable from {spec!r}")


# -- the flow -------------------------------------------------------------------------

def return_time(p: GeoParams, x0: float) -> float:
    if x0 == 0:
        raise SingularLeafError("x = 0 lies on the stable manifold")
    return -math.log(abs(x0)) / p.lambda1 + EXTERIOR_TIME


class FlowSegments:
    """Flow segments from section points (x0, y0, 1) back to the section.

    Segment k runs the linear saddle flow for tau_k, then a straight
    exterior transit of duration EXTERIOR_TIME ending at P(x0_k, y0_k).
    Evaluation takes segment indices and local times.
    """

    def __init__(self, p: GeoParams, pts, model=None):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x0, y0 = pts[:, 0], pts[:, 1]
        if np.any(x0 == 0):
            raise SingularLeafError("x = 0 lies on the stable manifold")
        m = model if model is not None else p.map_model()
        self.p = p
        self.x0, self.y0 = x0, y0
        ax = np.abs(x0)
        self.tau = -np.log(ax) / p.lambda1
        self.exit = (np.sign(x0), y0 * ax ** p.beta, ax ** p.alpha)
        self.entry = (m.f(x0), g_eval(p, x0, y0), np.ones_like(x0))

    @property
    def t_plus(self) -> np.ndarray:
        return self.tau + EXTERIOR_TIME

    def __call__(self, idx, t):
        p = self.p
        idx = np.asarray(idx)
        t = np.asarray(t, dtype=float)
        tau = self.tau[idx]
        inside = t <= tau
        ti = np.minimum(t, tau)
        s = np.clip((t - tau) / EXTERIOR_TIME, 0.0, 1.0)
        out = []
        for lam, start, e, q in ((p.lambda1, self.x0, self.exit[0], self.entry[0]),
                                 (p.lambda2, self.y0, self.exit[1], self.entry[1]),
                                 (p.lambda3, np.ones_like(self.x0), self.exit[2], self.entry[2])):
            ek = e[idx]
            out.append(np.where(inside, start[idx] * np.exp(lam * ti), ek + s * (q[idx] - ek)))
        return tuple(out)


def segment_points(p: GeoParams, x0: float, y0: float, t):
    """Flow position at local times ``t`` on the segment started at (x0, y0, 1)."""
    t = np.asarray(t, dtype=float)
    return FlowSegments(p, [(x0, y0)])(np.zeros(t.shape, dtype=int), t)


def _pieces_max(h: Callable, lo: np.ndarray, hi: np.ndarray, n: np.ndarray,
                rounds: int = 24) -> np.ndarray:
    """Max of smooth functions h(piece, t) over the pieces [lo_i, hi_i].

    Each piece gets a grid of n_i nodes; every grid local maximum (endpoints
    included) is refined by zooming: each round resamples a bracket around
    the current best node on 9 nodes and shrinks it fourfold.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    n = np.asarray(n, dtype=int)
    starts = np.concatenate([[0], np.cumsum(n)[:-1]])
    ids = np.repeat(np.arange(len(n)), n)
    offs = np.arange(ids.size) - starts[ids]
    step = (hi - lo) / (n - 1)
    t = lo[ids] + step[ids] * offs
    v = np.asarray(h(ids, t), dtype=float)
    best = np.maximum.reduceat(v, starts)
    first = offs == 0
    last = offs == n[ids] - 1
    left = np.where(first, -np.inf, np.concatenate([[-np.inf], v[:-1]]))
    right = np.where(last, -np.inf, np.concatenate([v[1:], [-np.inf]]))
    cand = (v >= left) & (v >= right)
    cid = ids[cand]
    centre = t[cand]
    half = step[cid]
    k = np.linspace(-1.0, 1.0, 9)
    rows = np.arange(cid.size)
    for _ in range(rounds):
        nodes = np.clip(centre[:, None] + half[:, None] * k[None, :], lo[cid, None], hi[cid, None])
        vals = np.asarray(h(np.repeat(cid, 9), nodes.ravel()), dtype=float).reshape(nodes.shape)
        j = np.argmax(vals, axis=1)
        np.maximum.at(best, cid, vals[rows, j])
        centre = nodes[rows, j]
        half = half / 4.0
    return best


def max_f_values(p: GeoParams, F, pts, quadrature_steps: int = 64, model=None) -> np.ndarray:
    """maxF at every section point of ``pts`` (segment-local time grids)."""
    if quadrature_steps < 16:
        raise ValueError("quadrature_steps must be >= 16")
    F = as_function(F)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    if np.any(np.abs(pts[:, 0]) < SINGULAR_TOL):
        raise SingularLeafError("a point lies on the singular leaf")
    seg = FlowSegments(p, pts, model)
    K = len(pts)
    lo = np.concatenate([np.zeros(K), seg.tau])
    hi = np.concatenate([seg.tau, seg.t_plus])
    n = np.full(2 * K, quadrature_steps)

    def h(piece, t):
        return F(*seg(piece % K, t))

    both = _pieces_max(h, lo, hi, n)
    return np.maximum(both[:K], both[K:])


def max_f_reduction(p: GeoParams, F, x: SectionPoint, quadrature_steps: int = 64,
                    model=None) -> float:
    """max of F along the flow segment from ``x`` to P(x)."""
    return float(max_f_values(p, F, [(float(x[0]), float(x[1]))], quadrature_steps, model)[0])


def section_orbit(p: GeoParams, x: SectionPoint, n: int) -> np.ndarray:
    """n points x, P x, ..., P^{n-1} x; raises SingularOrbitError near x = 0."""
    m = p.map_model()
    out = np.empty((n, 2))
    cx, cy = float(x[0]), float(x[1])
    for i in range(n):
        if abs(cx) < SINGULAR_TOL:
            raise SingularOrbitError(f"orbit reached |x| < {SINGULAR_TOL:g} at step {i}")
        out[i] = cx, cy
        cx, cy = float(m.f(cx)), float(g_eval(p, cx, cy))
    return out


def flow_values(p: GeoParams, F, orbit: np.ndarray, steps_per_unit: int = 8,
                min_steps: int = 16) -> np.ndarray:
    """Per-return maxima of F computed on one global time axis.

    The orbit's segments are laid end to end; the grid is uniform in global
    time (``steps_per_unit`` nodes per time unit, at least ``min_steps`` per
    piece) with segment joins and exit times as nodes, and every grid local
    maximum is refined with the continuous-time flow.
    """
    F = as_function(F)
    seg = FlowSegments(p, orbit)
    K = len(orbit)
    starts = np.concatenate([[0.0], np.cumsum(seg.t_plus)[:-1]])
    lo = np.concatenate([starts, starts + seg.tau])
    hi = np.concatenate([starts + seg.tau, starts + seg.t_plus])
    n = np.maximum(min_steps, np.ceil((hi - lo) * steps_per_unit).astype(int) + 1)

    def h(piece, t):
        k = piece % K
        return F(*seg(k, t - starts[k]))

    both = _pieces_max(h, lo, hi, n)
    return np.maximum(both[:K], both[K:])


# -- orbit functionals --------------------------------------------------------------

@dataclass
class OrbitSpectrumSample:
    seed_point: tuple
    m_value: float
    l_value: float
    horizon: int
    tail_start: int


def orbit_functionals(system: str, p: GeoParams, f, seed: SectionPoint, horizon: int,
                      tail_fraction: float = 0.25, quadrature_steps: int = 64) -> OrbitSpectrumSample:
    """m = max over the orbit segment, l = max over its final ``tail_fraction``.

    ``system`` is 'map' (f evaluated on P^n x) or 'flow' (F maximised over
    continuous time along the same ``horizon`` returns).
    """
    if horizon < 100:
        raise ValueError("horizon must be >= 100")
    if not 0 < tail_fraction <= 0.5:
        raise ValueError("tail_fraction must lie in (0, 1/2]")
    orb = section_orbit(p, seed, horizon)
    if system == "map":
        vals = np.asarray(as_function(f)(orb[:, 0], orb[:, 1]), dtype=float) * np.ones(horizon)
    elif system == "flow":
        vals = flow_values(p, f, orb)
    elif system == "map-maxF":
        vals = max_f_values(p, f, orb, quadrature_steps)
    else:
        raise ValueError(f"unknown system {system!r}")
    tail = horizon - max(1, int(round(horizon * tail_fraction)))
    return OrbitSpectrumSample((float(seed[0]), float(seed[1])), float(vals.max()),
                               float(vals[tail:].max()), horizon, tail)


# -- spectrum sampling ---------------------------------------------------------------

@dataclass
class SpectrumReport:
    values: np.ndarray
    gaps: np.ndarray
    intervals: list[tuple[float, float]]
    threshold: float
    variant: str
    samples: list[OrbitSpectrumSample] = field(default_factory=list)
    failures: int = 0

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "values": self.values.tolist(),
            "gaps": self.gaps.tolist(),
            "candidate_intervals": [list(iv) for iv in self.intervals],
            "threshold": self.threshold,
            "failures": self.failures,
            "samples": [s.__dict__ for s in self.samples],
            "note": "candidate intervals are gap-structure evidence, not interior certificates",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def rows(self):
        gaps = np.concatenate([self.gaps, [np.nan]])
        return [(float(v), float(g)) for v, g in zip(self.values, gaps)]


def build_report(values, variant: str = "m", threshold: float | None = None,
                 factor: float = 5.0) -> SpectrumReport:
    """Sort values, list gaps and the maximal runs whose gaps stay <= threshold.

    The default threshold is ``factor`` times the median nearest-neighbour
    spacing.
    """
    v = np.sort(np.asarray(values, dtype=float))
    gaps = np.diff(v)
    if threshold is None:
        if v.size < 2:
            threshold = 0.0
        else:
            left = np.concatenate([[np.inf], gaps])
            right = np.concatenate([gaps, [np.inf]])
            threshold = factor * float(np.median(np.minimum(left, right)))
    intervals = []
    start = 0
    for i, g in enumerate(gaps):
        if g > threshold:
            intervals.append((float(v[start]), float(v[i])))
            start = i + 1
    if v.size:
        intervals.append((float(v[start]), float(v[-1])))
    return SpectrumReport(v, gaps, intervals, float(threshold), variant)


def _seed_point(rng: np.random.Generator) -> tuple[float, float]:
    while True:
        x, y = rng.uniform(-0.5, 0.5, 2)
        if x != 0.0:
            return float(x), float(y)


def spectrum_sample(p: GeoParams, f, seeds: int = 100, horizon: int = 1000, rng_seed: int = 0,
                    system: str = "map", burn_in: int = 100, tail_fraction: float = 0.25,
                    variant: str = "m", threshold: float | None = None) -> SpectrumReport:
    """Markov ('m') or Lagrange ('l') values of ``f`` along ``seeds`` orbits.

    Each seed has its own RNG stream spawned from ``rng_seed``; seed points
    are drawn uniformly on the section and burned in for ``burn_in`` returns.
    """
    if seeds < 100:
        raise ValueError("seeds must be >= 100")
    streams = np.random.SeedSequence(rng_seed).spawn(seeds)
    samples, failures = [], 0
    for ss in streams:
        rng = np.random.default_rng(ss)
        try:
            start = section_orbit(p, _seed_point(rng), burn_in + 1)[-1]
            samples.append(orbit_functionals(system, p, f, start, horizon, tail_fraction))
        except SingularOrbitError:
            failures += 1
    if failures > seeds / 2:
        raise SamplingError(f"{failures} of {seeds} orbits hit the singular leaf")
    vals = [s.m_value if variant == "m" else s.l_value for s in samples]
    rep = build_report(vals, variant, threshold)
    rep.samples = samples
    rep.failures = failures
    return rep


# -- H1 membership ---------------------------------------------------------------------

def _preimage(p: GeoParams, x: float, y: float):
    """A preimage of (x, y) under P inside the section, or None."""
    m = p.map_model()
    for side in (1, -1):
        img = m.branch_image(side)
        if not img.lo <= x <= img.hi:
            continue
        px = float(m.f_inv(x, side))
        if px == 0.0:
            continue
        py = (y - math.copysign(p.g_offset, px)) / (p.g_gain * abs(px) ** p.beta)
        if abs(py) <= 0.5:
            return px, py
    return None


def stable_unstable(p: GeoParams, z, n: int = 20):
    """Stable and unstable unit directions at z by tangent pushes over n iterates.

    Stable: the least expanded right-singular vector of DP^n at z.
    Unstable: a tangent vector pushed forward from the n-th backward
    preimage (None when no backward orbit exists inside the section).
    """
    m = p.map_model()
    A = np.eye(2)
    cx, cy = float(z[0]), float(z[1])
    for _ in range(n):
        if abs(cx) < SINGULAR_TOL:
            break
        A = poincare_jacobian(p, (cx, cy), m) @ A
        A /= np.abs(A).max()
        cx, cy = float(m.f(cx)), float(g_eval(p, cx, cy))
    _, _, vt = np.linalg.svd(A)
    es = vt[-1]
    back = [(float(z[0]), float(z[1]))]
    for _ in range(n):
        pre = _preimage(p, *back[-1])
        if pre is None:
            break
        back.append(pre)
    eu = None
    if len(back) > 1:
        v = np.array([1.0, 0.0])
        for pt in reversed(back[1:]):
            v = poincare_jacobian(p, pt, m) @ v
            v /= np.linalg.norm(v)
        eu = v
    if es[np.argmax(np.abs(es))] < 0:
        es = -es
    return es, eu, len(back) - 1


def h1_membership(p: GeoParams, f, points, grid: float = 1e-3, deriv_tol: float = 1e-8,
                  tie_tol: float = 1e-12) -> tuple[bool, dict]:
    """Unique sampled maximiser of f and non-degenerate DP along e^s, e^u there."""
    F = as_function(f)
    pts = np.asarray(points, dtype=float)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    if pts.shape[0] < 1000:
        raise ValueError("need at least 1000 sample points")
    vals = np.asarray(F(pts[:, 0], pts[:, 1]), dtype=float) * np.ones(len(pts))
    i = int(np.argmax(vals))
    M = float(vals[i])
    ties = np.flatnonzero(vals >= M - tie_tol * max(1.0, abs(M)))
    spread = float(np.max(np.linalg.norm(pts[ties] - pts[i], axis=1)))
    diag = {"max_value": M, "maximizer": pts[i].tolist(), "ties": int(ties.size),
            "tie_spread": spread, "grid": grid}
    if spread > grid:
        diag["reason"] = "tie at grid resolution"
        return False, diag
    z = pts[i]
    if abs(z[0]) < SINGULAR_TOL:
        diag["reason"] = "maximiser on the singular leaf"
        return False, diag
    es, eu, nback = stable_unstable(p, z)
    D = poincare_jacobian(p, z)
    ds = float(np.linalg.norm(D @ es))
    diag.update({"e_s": es.tolist(), "DP_e_s": ds, "backward_steps": nback})

    # directional derivatives of f o P, reported for reference
    eps = 1e-7

    def fP(q):
        qx, qy = float(q[0]), float(q[1])
        m = p.map_model()
        return float(F(np.array([m.f(qx)]), np.array([g_eval(p, qx, qy)]))[0])

    def dfp(e):
        return (fP(z + eps * e) - fP(z - eps * e)) / (2 * eps)

    diag["d_fP_e_s"] = dfp(es)
    ok = ds > deriv_tol
    if eu is None:
        diag["reason"] = "no backward orbit: unstable direction unavailable"
        return False, diag
    du = float(np.linalg.norm(D @ eu))
    diag.update({"e_u": eu.tolist(), "DP_e_u": du, "d_fP_e_u": dfp(eu)})
    ok = ok and du > deriv_tol
    if not ok:
        diag["reason"] = "degenerate derivative along e^s or e^u"
    return bool(ok), diag
