"""Regular Cantor sets for the Lorenz map.

Two builders share one output type:

* :func:`build_theorem_cantor` replays the inductive gap construction with
  equal-measure splitting, the three filters on the pieces and an
  almost-LEO run per survivor, at a capped scale m_k.
* :func:`build_direct_cantor` pulls a fixed base interval back under f^n,
  keeping the cylinders whose orbit stays away from (-delta, delta).
  It gives much better dimension bounds at desk scale.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionError,
    DependencyError,
    EmptySpecError,
    NumericError,
    SingularLeafError,
)
from .one_d import (
    ENDPOINT_TOL,
    Interval,
    MapModel,
    MeasureApprox,
    almost_leo,
    iterate_interval,
    pull_back,
    ulam_measure,
)

SQRT2 = math.sqrt(2.0)


@dataclass
class Branch:
    """One interval of a regular Cantor set and its expanding return map.

    ``sides`` is the branch itinerary (one entry per iterate); the first
    ``pre_iterates`` of them form the bounded-distortion prefix f^j.
    """

    domain: Interval
    iterates: int
    sides: tuple[int, ...]
    lambda_min: float
    lambda_max: float
    pre_iterates: int = 0

    def image(self, m: MapModel) -> Interval:
        return iterate_interval(m, self.domain, self.sides)[-1]

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "iterates": self.iterates,
                "lambda_min": self.lambda_min, "lambda_max": self.lambda_max,
                "sides": list(self.sides), "pre_iterates": self.pre_iterates}

    @classmethod
    def from_dict(cls, d: dict) -> "Branch":
        sides = tuple(d.get("sides", ()))
        return cls(Interval(*d["domain"]), int(d["iterates"]), sides,
                   float(d["lambda_min"]), float(d["lambda_max"]), int(d.get("pre_iterates", 0)))


@dataclass
class CantorSpec:
    base: Interval
    branches: list[Branch]
    mode: str = "direct"

    def __len__(self):
        return len(self.branches)

    def to_dict(self) -> dict:
        return {"base": list(self.base), "mode": self.mode,
                "branches": [b.to_dict() for b in self.branches]}

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "CantorSpec":
        return cls(Interval(*d["base"]), [Branch.from_dict(b) for b in d["branches"]],
                   d.get("mode", "direct"))

    def validate(self, m: MapModel | None = None, tol: float = ENDPOINT_TOL) -> list[str]:
        """Violated invariants (empty list when all hold).

        The image check needs the branch itineraries and the map.
        """
        bad = []
        doms = sorted(b.domain for b in self.branches)
        for p, q in zip(doms, doms[1:]):
            if q.lo < p.hi:
                bad.append(f"overlap {p} {q}")
        for b in self.branches:
            if b.domain.contains_zero():
                bad.append(f"{b.domain} contains 0")
            if not b.lambda_min > 1.0:
                bad.append(f"lambda_min {b.lambda_min} <= 1")
            if b.lambda_min > b.lambda_max:
                bad.append("lambda_min > lambda_max")
            if m is not None and b.sides:
                img = b.image(m)
                if abs(img.lo - self.base.lo) > tol or abs(img.hi - self.base.hi) > tol:
                    bad.append(f"image {img} != base {self.base}")
        return bad


def orbit_points(m: MapModel, x, sides) -> np.ndarray:
    """Orbit of the points ``x`` along a fixed itinerary; shape (len(sides) + 1, len(x))."""
    x = np.asarray(x, dtype=float)
    out = np.empty((len(sides) + 1, x.size))
    out[0] = x
    for i, s in enumerate(sides):
        out[i + 1] = m.f_closed(out[i], s)
    return out


def log_derivative(m: MapModel, x, sides) -> np.ndarray:
    """log (f^n)'(x) along the itinerary ``sides``."""
    orb = orbit_points(m, x, sides)[:-1]
    with np.errstate(divide="ignore"):
        return len(sides) * math.log(m.theta * m.alpha) \
            + (m.alpha - 1.0) * np.log(np.abs(orb)).sum(axis=0)


def derivative_extrema(m: MapModel, dom: Interval, sides, n_grid: int = 65) -> tuple[float, float]:
    """(min, max) of (f^n)' sampled on an even grid of ``dom`` (endpoints included)."""
    g = np.linspace(dom.lo, dom.hi, n_grid)
    ld = log_derivative(m, g, sides)
    return float(np.exp(ld.min())), float(np.exp(ld.max()))


def _make_branch(m: MapModel, dom: Interval, sides, pre: int = 0) -> Branch:
    lo, hi = derivative_extrema(m, dom, sides)
    return Branch(dom, len(sides), tuple(int(s) for s in sides), lo, hi, pre)


# -- direct builder --------------------------------------------------------------

def default_direct_base(m: MapModel) -> Interval:
    """[f(0.05+), -0.05]: a fixed base on the left of 0 (independent of delta)."""
    lo = float(m.f_closed(0.05, 1))
    if lo >= -0.05:
        raise ConstructionError("default base is empty for this map", stage="base")
    return Interval(lo, -0.05)


def build_direct_cantor(m: MapModel, delta: float, depth: int,
                        base: Interval | None = None) -> CantorSpec:
    """Cylinders of f^depth mapped onto ``base`` and lying inside it.

    Every itinerary of length ``depth`` is followed backwards from the base;
    a pullback is dropped as soon as it comes within ``delta`` of 0 or the
    interval to pull back is not inside the branch image. The survivors
    that sit inside the base are the branches (distinct itineraries give
    disjoint domains). Shrinking ``delta`` can only add branches.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    if not 1 <= depth <= 12:
        raise ValueError("depth must lie in [1, 12]")
    B = base if base is not None else default_direct_base(m)
    if B.contains_zero() or B.dist_to_zero() < delta:
        raise EmptySpecError(f"delta={delta} swallows the base {B}", stage="base")
    images = {s: m.branch_image(s) for s in (-1, 1)}
    frontier: list[tuple[Interval, tuple[int, ...]]] = [(B, ())]
    for _t in range(depth):
        nxt = []
        for U, suffix in frontier:
            for s in (-1, 1):
                if not images[s].contains(U, 1e-15):
                    continue
                V = Interval(float(m.f_inv(U.lo, s)), float(m.f_inv(U.hi, s)))
                if V.dist_to_zero() < delta:
                    continue
                nxt.append((V, (s,) + suffix))
        frontier = nxt
    found = sorted((V, sides) for V, sides in frontier if B.contains(V))
    if not found:
        raise EmptySpecError(f"no cylinder survives delta={delta}, depth={depth}", stage="direct")
    return CantorSpec(B, [_make_branch(m, V, sides) for V, sides in found], mode="direct")


# -- bounded distortion ----------------------------------------------------------

def distortion_H(m: MapModel) -> float:
    """H = exp(-(2/3) C C1 sqrt2 (sqrt2 + 1))."""
    C, C1 = m.distortion_constants
    return math.exp(-(2.0 / 3.0) * C * C1 * SQRT2 * (SQRT2 + 1.0))


def distortion_ratio(m: MapModel, branch: Branch, x: float, y: float) -> float:
    """(f^j)'(y) / (f^j)'(x) for the branch prefix of length j = pre_iterates."""
    d = branch.domain
    if not (d.lo <= x <= d.hi and d.lo <= y <= d.hi):
        raise ValueError("x and y must lie in the branch domain")
    j = branch.pre_iterates
    if j == 0 or x == y:
        return 1.0
    sides = branch.sides[:j]
    ld = log_derivative(m, np.array([x, y]), sides)
    return float(np.exp(ld[1] - ld[0]))


# -- theorem-faithful builder ----------------------------------------------------

@dataclass
class TheoremRunLog:
    k: int
    m_k: int
    m_uncapped: int
    epsilon_k: float
    c: float
    base: Interval
    core_intervals: list[dict] = field(default_factory=list)
    gaps: list[Interval] = field(default_factory=list)
    pieces_total: int = 0
    counts: dict = field(default_factory=dict)
    per_gap: list[dict] = field(default_factory=list)
    claim1_fraction: float = 0.0
    claim2_fraction: float = 0.0
    claim2_cardinality_ok: bool = True
    slack: dict = field(default_factory=dict)
    distortion_samples: list[float] = field(default_factory=list)
    H: float = 0.0
    mass_tolerance: float = 1e-6

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["base"] = list(self.base)
        d["gaps"] = [list(g) for g in self.gaps]
        return d


def _gap_structure(m: MapModel, base: Interval, k: int):
    """k rounds of: put an almost-LEO interval inside every gap, keep the complements."""
    gaps = [base]
    cores = []
    for level in range(1, k + 1):
        new = []
        for g in gaps:
            third = g.length / 3.0
            res = almost_leo(m, Interval(g.lo + third, g.hi - third))
            core = res.j_prime
            cores.append({"level": level, "interval": list(core), "n": res.n})
            new += [Interval(g.lo, core.lo), Interval(core.hi, g.hi)]
        gaps = new
    return gaps, cores


def _piece(mu: MeasureApprox, gap: Interval, r: np.ndarray, mk: int):
    """Boundaries of the equal-mu pieces with indices ``r`` (lazy splitting)."""
    q0 = mu.cdf(gap.lo)
    mass = mu.cdf(gap.hi) - q0
    lo = mu.cdf_inv(q0 + mass * r / 2.0 ** mk)
    hi = mu.cdf_inv(q0 + mass * (r + 1) / 2.0 ** mk)
    lo = np.maximum(lo, gap.lo)
    hi = np.minimum(hi, gap.hi)
    return lo, hi


def _orbit_any_side(m: MapModel, x: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n + 1, x.size))
    out[0] = x
    for i in range(n):
        out[i + 1] = m.f(out[i])
    return out


def _claim3(m: MapModel, J: Interval, mk: int):
    """Minimal j <= 4 m_k with |f^j(J)| > 1/(3 m_k^3), or None with a reason."""
    thr = 1.0 / (3.0 * mk ** 3)
    cur = J
    sides = []
    for j in range(1, 4 * mk + 1):
        if cur.contains_zero() or cur.dist_to_zero() == 0.0:
            return None, "zero"
        s = cur.side()
        sides.append(s)
        cur = Interval(float(m.f_closed(cur.lo, s)), float(m.f_closed(cur.hi, s)))
        if cur.length > thr:
            if cur.contains_zero():
                return None, "zero"
            return (j, tuple(sides), cur), None
    return None, "short"


def slack_bound_bits(m: MapModel, mk: int) -> float:
    """log2 of H^-2 E^(D log m) m^(F log m) 2^m (m + 1), F = D xi."""
    c = m.aleo_constants
    H = distortion_H(m)
    D, E, xi = c["D"], c["E"], c["xi"]
    lm = math.log(mk)
    ln = -2.0 * math.log(H) + D * lm * math.log(E) + D * xi * lm * lm + mk * math.log(2.0) \
        + math.log(mk + 1.0)
    return ln / math.log(2.0)


def build_theorem_cantor(m: MapModel, k: int, m_cap: int = 12, budget: int = 256,
                         seed: int = 0, measure: MeasureApprox | None = None,
                         samples_per_piece: int = 64) -> tuple[CantorSpec, TheoremRunLog]:
    """Capped replay of the inductive Cantor construction inside L_1^a."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 8 <= m_cap <= 24:
        raise ValueError("m_cap must lie in [8, 24]")
    if measure is None:
        try:
            measure = ulam_measure(m, 1024)
        except NumericError as e:
            raise DependencyError(f"invariant measure unavailable: {e}") from e
    mu = measure
    a = m.require_cut()
    base = Interval(float(m.f(1.0 - a)), 0.0)
    gaps, cores = _gap_structure(m, base, k)

    c = mu.c
    eps = min(float(mu.measure(g.lo, g.hi)) for g in gaps) / c
    m_unc = int(math.floor(1.0 / eps))
    mk = max(1, min(m_unc, m_cap))
    log = TheoremRunLog(k=k, m_k=mk, m_uncapped=m_unc, epsilon_k=eps, c=c, base=base,
                        core_intervals=cores, gaps=gaps, H=distortion_H(m))

    rng = np.random.default_rng(seed)
    n_pieces = 2 ** mk
    near = 1.0 / mk ** 3
    short = 1.0 / (3.0 * mk ** 3)
    counts = {"sampled": 0, "claim1": 0, "claim2": 0, "claim3": 0, "aleo": 0}
    branches = []
    worst_bits = 0.0
    for gi, gap in enumerate(gaps):
        take = min(budget, n_pieces)
        r = np.sort(rng.choice(n_pieces, size=take, replace=False)) if take < n_pieces \
            else np.arange(n_pieces)
        lo, hi = _piece(mu, gap, r.astype(float), mk)
        gc = {"gap": gi, "sampled": take, "claim1": 0, "claim2": 0, "claim3": 0, "aleo": 0}
        # filter 1: some sample point whose orbit (times 0..4m_k) avoids (-1/m^3, 1/m^3)
        t = (np.arange(samples_per_piece) + 0.5) / samples_per_piece
        pts = lo[:, None] + (hi - lo)[:, None] * t[None, :]
        orb = _orbit_any_side(m, pts.ravel(), 4 * mk)
        with np.errstate(invalid="ignore"):
            ok_pt = np.all(np.abs(orb) >= near, axis=0).reshape(pts.shape)
        c1 = ok_pt.any(axis=1)
        c2 = c1 & ((hi - lo) < short)
        gc["claim1"], gc["claim2"] = int(c1.sum()), int(c2.sum())
        for idx in np.flatnonzero(c2):
            J = Interval(float(lo[idx]), float(hi[idx]))
            hit, _why = _claim3(m, J, mk)
            if hit is None:
                continue
            gc["claim3"] += 1
            j, pre_sides, fJ = hit
            try:
                res = almost_leo(m, fJ)
            except (ConstructionError, SingularLeafError):
                continue
            tilde = pull_back(m, res.j_prime, pre_sides)
            sides = pre_sides + tuple(res.sides)
            br = _make_branch(m, tilde, sides, pre=j)
            img = br.image(m)
            if abs(img.lo - base.lo) > ENDPOINT_TOL or abs(img.hi - base.hi) > ENDPOINT_TOL:
                continue
            gc["aleo"] += 1
            branches.append(br)
            worst_bits = max(worst_bits, math.log2(br.lambda_max))
            if len(log.distortion_samples) < 32:
                log.distortion_samples.append(distortion_ratio(m, br, tilde.lo, tilde.hi))
        for key in counts:
            counts[key] += gc[key]
        log.per_gap.append(gc)

    log.counts = counts
    log.pieces_total = n_pieces * len(gaps)
    log.claim1_fraction = counts["claim1"] / max(counts["sampled"], 1)
    long_pieces = counts["claim1"] - counts["claim2"]
    log.claim2_fraction = long_pieces / max(counts["sampled"], 1)
    log.claim2_cardinality_ok = log.claim2_fraction < 0.25
    bound_bits = slack_bound_bits(m, mk)
    log.slack = {"max_log2_lambda": worst_bits, "bound_log2": bound_bits,
                 "epsilon_slack": bound_bits / mk - 1.0, "ok": worst_bits <= bound_bits}
    if not branches:
        stage = next((s for s in ("claim1", "claim2", "claim3", "aleo") if counts[s] == 0), "aleo")
        err = ConstructionError(f"no surviving pieces (filter counts {counts})", stage=stage)
        err.log = log
        raise err
    branches.sort(key=lambda b: b.domain)
    return CantorSpec(base, branches, mode="theorem"), log


def nested_gaps_ok(coarse: TheoremRunLog, fine: TheoremRunLog) -> bool:
    """Every gap of the coarser run contains some gap of the finer one."""
    return all(any(g.contains(h, 1e-15) for h in fine.gaps) for g in coarse.gaps)
