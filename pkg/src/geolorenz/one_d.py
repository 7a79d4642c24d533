"""The one-dimensional Lorenz map and its expansion machinery.

The map is the quotient of the Poincare map along the contracting y-fibres::

    f(x) =  theta * |x|**alpha + b_right    for x > 0
    f(x) = -theta * |x|**alpha + b_left     for x < 0

With the default offsets (-1/2, 1/2) it is discontinuous at 0 with lateral
limits +-1/2, increasing on each side, and its derivative blows up at 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import optimize, sparse

from .errors import (
    ConfigurationError,
    ConstructionError,
    InfeasibleError,
    ModelDegenerateError,
    NonTerminationError,
    NumericError,
    SingularLeafError,
)

LEO_CAP = 10_000
ENDPOINT_TOL = 1e-9
SQRT2 = math.sqrt(2.0)


class Interval(NamedTuple):
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains_zero(self) -> bool:
        """True when 0 is an interior point."""
        return self.lo < 0.0 < self.hi

    def side(self) -> int:
        """+1 if the interval lies in [0, 1/2], -1 if in [-1/2, 0]."""
        if self.lo >= 0.0:
            return 1
        if self.hi <= 0.0:
            return -1
        raise SingularLeafError(f"{self} straddles 0")

    def dist_to_zero(self) -> float:
        if self.contains_zero():
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def contains(self, other: "Interval", tol: float = 0.0) -> bool:
        return self.lo - tol <= other.lo and other.hi <= self.hi + tol


@dataclass(frozen=True)
class MapModel:
    """Power-law Lorenz map.

    ``offsets`` are the constants of the right and left branches. ``a`` is
    the cut parameter used by :func:`almost_leo`; leave it ``None`` and use
    :meth:`with_cut` (or :func:`default_model`) to set it.
    """

    alpha: float = 0.75
    theta: float = 1.65
    offsets: tuple[float, float] = (-0.5, 0.5)
    a: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(float(v) for v in self.offsets))

    # -- evaluation -------------------------------------------------------
    def f(self, x):
        """Vectorised f. Scalars at 0 raise; array entries at 0 give NaN."""
        b_r, b_l = self.offsets
        if np.isscalar(x):
            if x == 0:
                raise SingularLeafError("f is undefined at 0")
            u = self.theta * abs(x) ** self.alpha
            return u + b_r if x > 0 else b_l - u
        x = np.asarray(x, dtype=float)
        u = self.theta * np.abs(x) ** self.alpha
        return np.where(x > 0, u + b_r, np.where(x < 0, b_l - u, np.nan))

    def df(self, x):
        if np.isscalar(x):
            if x == 0:
                raise SingularLeafError("f' is undefined at 0")
            return self.theta * self.alpha * abs(x) ** (self.alpha - 1.0)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            d = self.theta * self.alpha * np.abs(x) ** (self.alpha - 1.0)
        return np.where(x == 0, np.nan, d)

    def d2f(self, x):
        """Second derivative (odd in x)."""
        c = self.theta * self.alpha * (self.alpha - 1.0)
        if np.isscalar(x):
            if x == 0:
                raise SingularLeafError("f'' is undefined at 0")
            return c * abs(x) ** (self.alpha - 2.0) * math.copysign(1.0, x)
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            d = c * np.abs(x) ** (self.alpha - 2.0) * np.sign(x)
        return np.where(x == 0, np.nan, d)

    def limit(self, side: int) -> float:
        """One-sided limit f(0+) (side=+1) or f(0-) (side=-1)."""
        return self.offsets[0] if side > 0 else self.offsets[1]

    def f_closed(self, x, side: int):
        """f extended continuously to the closed half-interval on ``side``."""
        x = np.asarray(x, dtype=float)
        u = self.theta * np.abs(x) ** self.alpha
        return u + self.offsets[0] if side > 0 else self.offsets[1] - u

    def f_inv(self, y, side: int):
        """Inverse of the branch on ``side`` (+1 right, -1 left)."""
        b_r, b_l = self.offsets
        y = np.asarray(y, dtype=float)
        if side > 0:
            u = (y - b_r) / self.theta
            return np.clip(u, 0.0, None) ** (1.0 / self.alpha)
        u = (b_l - y) / self.theta
        return -np.clip(u, 0.0, None) ** (1.0 / self.alpha)

    def branch_image(self, side: int) -> Interval:
        """Closure of f([0, 1/2]) or f([-1/2, 0])."""
        if side > 0:
            return Interval(self.offsets[0], float(self.f(0.5)))
        return Interval(float(self.f(-0.5)), self.offsets[1])

    def range_bounds(self) -> tuple[float, float]:
        r, l = self.branch_image(1), self.branch_image(-1)
        return min(r.lo, l.lo), max(r.hi, l.hi)

    def image(self, j: Interval) -> Interval:
        """f(J) for an interval not containing 0 in its interior."""
        s = j.side()
        lo, hi = self.f_closed(j.lo, s), self.f_closed(j.hi, s)
        return Interval(float(lo), float(hi))

    def with_cut(self, a: float | None = None, margin: float = 0.005) -> "MapModel":
        if a is None:
            a = choose_a(self, margin)
        return MapModel(self.alpha, self.theta, self.offsets, float(a))

    # -- derived constants ---------------------------------------------------
    @cached_property
    def eta(self) -> float:
        """inf |f'| on I \\ {0}; f' decreases in |x|, so it sits at |x| = 1/2."""
        return self.theta * self.alpha * 2.0 ** (1.0 - self.alpha)

    @cached_property
    def distortion_constants(self) -> tuple[float, float]:
        """(C, C1) with 1/C <= f'(x)/|x|^(alpha-1) <= C and
        |f''(x)|/|x|^(alpha-2) <= C1. Both ratios are constant for a power law."""
        r = self.theta * self.alpha
        return max(r, 1.0 / r), self.theta * self.alpha * (1.0 - self.alpha)

    @property
    def C(self) -> float:
        return self.distortion_constants[0]

    @property
    def C1(self) -> float:
        return self.distortion_constants[1]

    @cached_property
    def zeros(self) -> "ZeroPreimages":
        return zero_preimages(self)

    @cached_property
    def kappa(self) -> float:
        return compute_kappa(self)

    @property
    def base(self) -> Interval:
        """L_1^a = [f(1 - a), 0], the common target of the almost-LEO runs."""
        a = self.require_cut()
        return Interval(float(self.f(1.0 - a)), 0.0)

    def require_cut(self) -> float:
        if self.a is None:
            raise ConfigurationError("cut parameter a is not set; use MapModel.with_cut()")
        return self.a

    @cached_property
    def aleo_constants(self) -> dict:
        """Constants D, E, xi of the almost-LEO length/derivative bounds."""
        a = self.require_cut()
        rate = a * a * self.eta ** 2 / 2.0
        return {
            "a": a,
            "rate": rate,
            "D": 5.0 / math.log(rate),
            "E": self.C * (1.0 - a) ** (self.alpha - 1.0) * 6.0 ** (1.0 - self.alpha),
            "xi": 3.0 * (1.0 - self.alpha),
        }


def default_model() -> MapModel:
    return MapModel().with_cut(margin=0.005)


def f_eval(m: MapModel, x: float) -> float:
    return float(m.f(x))


def f_deriv(m: MapModel, x: float) -> float:
    return float(m.df(x))


# -- property checks ----------------------------------------------------------

def estimate_eta(m: MapModel, n: int = 2000) -> float:
    """Grid estimate of inf f' (log-spaced towards 0, both sides)."""
    g = np.logspace(-12, math.log10(0.5), n)
    return float(min(np.min(m.df(g)), np.min(m.df(-g))))


def estimate_distortion_constants(m: MapModel, n: int = 2000) -> tuple[float, float]:
    g = np.logspace(-12, math.log10(0.5), n)
    x = np.concatenate([-g, g])
    r = m.df(x) / np.abs(x) ** (m.alpha - 1.0)
    r2 = np.abs(m.d2f(x)) / np.abs(x) ** (m.alpha - 2.0)
    return float(max(r.max(), 1.0 / r.min())), float(r2.max())


def check_properties(m: MapModel, n: int = 1000) -> dict:
    """Numerical verification of (f1)-(f3) and the distortion bounds.

    Returns a dict of booleans plus the measured quantities.
    """
    eps = 1e-20
    lim_left, lim_right = float(m.f(-eps)), float(m.f(eps))
    g = np.logspace(-10, math.log10(0.5), n)
    d_near = [float(m.df(10.0 ** -k)) for k in range(3, 11)]
    d_near_l = [float(m.df(-(10.0 ** -k))) for k in range(3, 11)]
    C, C1 = m.distortion_constants
    x = np.concatenate([-g, g])
    ratio = m.df(x) / np.abs(x) ** (m.alpha - 1.0)
    ratio2 = np.abs(m.d2f(x)) / np.abs(x) ** (m.alpha - 2.0)
    eta = min(float(np.min(m.df(x))), m.eta)
    out = {
        "f1": abs(lim_left - 0.5) < 1e-12 and abs(lim_right + 0.5) < 1e-12,
        "f2": eta > SQRT2,
        "f3": all(np.diff(d_near) > 0) and all(np.diff(d_near_l) > 0),
        "distortion": bool(np.all(ratio >= 1 / C - 1e-12) and np.all(ratio <= C + 1e-12)
                           and np.all(ratio2 <= C1 + 1e-12)),
        "endpoints": abs(float(m.f(-0.5)) + 0.5) > 1e-12 and abs(float(m.f(0.5)) - 0.5) > 1e-12,
        "eta": eta,
        "C": C,
        "C1": C1,
        "f0_minus": lim_left,
        "f0_plus": lim_right,
    }
    if m.a is not None:
        out["cut"] = (m.a ** 2 * m.eta ** 2 > 2.0) and (1.0 - m.a < m.kappa)
    return out


# -- zero preimages and kappa -----------------------------------------------

class ZeroPreimages(NamedTuple):
    """Preimages of 0 and of the zeros 0_1 < 0 < 0_2.

    ``z{i}_{j}`` is the preimage of 0_i in branch j (1 = left, 2 = right).
    """

    z1: float
    z2: float
    z1_1: float
    z1_2: float
    z2_1: float
    z2_2: float


def _branch_root(m: MapModel, target: float, side: int) -> float:
    img = m.branch_image(side)
    if not img.lo <= target <= img.hi:
        raise ModelDegenerateError(
            f"{target:.6g} has no preimage in the {'right' if side > 0 else 'left'} branch "
            f"(image {img.lo:.6g}..{img.hi:.6g})")
    lo, hi = (0.0, 0.5) if side > 0 else (-0.5, 0.0)

    def h(x):
        return float(m.f_closed(x, side)) - target

    if h(lo) == 0:
        return lo
    if h(hi) == 0:
        return hi
    return optimize.bisect(h, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)


def zero_preimages(m: MapModel) -> ZeroPreimages:
    """Bisection for 0_1, 0_2 and their preimages in each branch."""
    z1 = _branch_root(m, 0.0, -1)
    z2 = _branch_root(m, 0.0, 1)
    return ZeroPreimages(
        z1=z1, z2=z2,
        z1_1=_branch_root(m, z1, -1), z1_2=_branch_root(m, z1, 1),
        z2_1=_branch_root(m, z2, -1), z2_2=_branch_root(m, z2, 1),
    )


def compute_kappa(m: MapModel) -> float:
    z = m.zeros
    lengths = (z.z1 - z.z1_1, z.z2_1 - z.z1, z.z2 - z.z1_2, z.z2_2 - z.z2)
    k = min(lengths)
    if k <= 0:
        raise ModelDegenerateError(f"non-positive kappa from lengths {lengths}")
    return k


def choose_a(m: MapModel, margin: float = 0.005) -> float:
    """Smallest admissible cut parameter plus ``margin`` (kept below 1).

    Admissible means a^2 eta^2 > 2 and 1 - a < kappa.
    """
    if not 0 < margin < 1:
        raise ValueError("margin must lie in (0, 1)")
    if m.eta <= SQRT2:
        raise InfeasibleError(f"eta = {m.eta:.6g} <= sqrt(2): no cut parameter a < 1 exists")
    a_min = max(SQRT2 / m.eta, 1.0 - m.kappa)
    a = a_min + margin
    if a >= 1.0:
        a = 0.5 * (a_min + 1.0)
    return a


def r2_check(m: MapModel) -> dict:
    """Runtime test of the 'a close to 1' requirement for the terminal step.

    The worst case of |f([b, 0_1])| < |f([0_1, a - 1])| over b in [-1/2, 0_1]
    is b = -1/2 (and symmetrically c = 1/2 on the right).
    """
    a = m.require_cut()
    z = m.zeros
    left_small = abs(float(m.f(-0.5)) - 0.0)
    left_big = abs(float(m.f(a - 1.0)))
    right_small = abs(float(m.f(0.5)))
    right_big = abs(float(m.f(1.0 - a)))
    psi = abs(m.limit(-1)) - left_small
    return {
        "psi": psi,
        "left_ok": left_small < left_big,
        "right_ok": right_small < right_big,
        "z1_inside": z.z1 < a - 1.0,
        "z2_inside": 1.0 - a < z.z2,
        "case2_reaches_z2": float(m.f(a - 1.0)) > z.z2,
    }


# -- locally eventually onto ------------------------------------------------

def _split_bigger(m: MapModel, j: Interval) -> Interval:
    """Bigger of the two closed halves 0 cuts j into."""
    left, right = Interval(j.lo, 0.0), Interval(0.0, j.hi)
    return right if right.length >= left.length else left


def _image_pieces(m: MapModel, j: Interval) -> list[Interval]:
    if j.contains_zero():
        return [m.image(Interval(j.lo, 0.0)), m.image(Interval(0.0, j.hi))]
    return [m.image(j)]


def _merge(pieces: list[Interval], tol: float = 1e-12) -> list[Interval]:
    pieces = sorted(pieces)
    out = [pieces[0]]
    for p in pieces[1:]:
        if p.lo <= out[-1].hi + tol:
            if p.hi > out[-1].hi:
                out[-1] = Interval(out[-1].lo, p.hi)
        else:
            out.append(p)
    return out


@dataclass
class LeoResult:
    n: int
    chain: list[Interval]
    hits: list[bool]
    growth_ok: bool
    image: list[Interval]


def leo_iterate(m: MapModel, j: Interval, cap: int = LEO_CAP) -> LeoResult:
    """First n with f^n(J) = I, replaying the bigger-half recursion alongside.

    The image f^n(J) is tracked exactly as a merged union of closed
    intervals; the recursion chain J_i is kept for the growth check
    |J_{i+2}| >= (eta^2/2)|J_i| at every pair that is not a double hit.
    """
    j = Interval(*map(float, j))
    if j.length <= 0:
        raise ValueError("interval must have positive length")
    chain = [_split_bigger(m, j) if j.contains_zero() else j]
    hits = []
    image = [j]
    n = 0
    while True:
        lo, hi = image[0].lo, image[-1].hi
        if len(image) == 1 and lo <= -0.5 + ENDPOINT_TOL and hi >= 0.5 - ENDPOINT_TOL:
            break
        if n >= cap:
            raise NonTerminationError(f"f^n(J) did not cover I within {cap} iterates")
        image = _merge([p for piece in image for p in _image_pieces(m, piece)])
        n += 1
        cur = chain[-1]
        fj = m.image(cur)
        hit = fj.contains_zero()
        hits.append(hit)
        nxt = _split_bigger(m, fj) if hit else fj
        chain.append(nxt)

    rate = m.eta ** 2 / 2.0
    growth_ok = True
    for i in range(len(chain) - 2):
        if hits[i] and hits[i + 1]:
            continue
        if chain[i + 2].length < rate * chain[i].length - 1e-12:
            # the chain saturates once a half of I is reached
            if chain[i + 2].length < 0.5 - ENDPOINT_TOL:
                growth_ok = False
    return LeoResult(n=n, chain=chain, hits=hits, growth_ok=growth_ok, image=image)


# -- almost locally eventually onto -----------------------------------------

def cut_relative(a: float, j: Interval) -> Interval:
    """J_a: drop a piece of length (1 - a)|J| on the side nearest 0."""
    b, c = j
    if c <= 0:
        return Interval(b, a * c + (1.0 - a) * b)
    if b >= 0:
        return Interval(a * b + (1.0 - a) * c, c)
    raise SingularLeafError(f"{j} contains 0")


def cut_absolute(a: float, j: Interval) -> Interval:
    """_aJ: drop a piece of fixed length 1 - a next to 0."""
    b, c = j
    if c <= 0:
        if c - b <= 1.0 - a or abs(c) > 1e-15:
            raise ConstructionError(f"cannot cut {1 - a:.3g} from {j}", stage="terminal")
        return Interval(b, a - 1.0)
    if b >= 0:
        if c - b <= 1.0 - a or abs(b) > 1e-15:
            raise ConstructionError(f"cannot cut {1 - a:.3g} from {j}", stage="terminal")
        return Interval(1.0 - a, c)
    raise SingularLeafError(f"{j} contains 0")


@dataclass
class AleoResult:
    """Output of :func:`almost_leo`.

    ``step_images[i]`` is f^i(J') for i = 0..n-1 and ``step_gaps[i]`` its
    distance to 0; ``terminal_image`` is f^n(J') obtained by forward
    iteration of the endpoints of J'. ``chain`` holds the cut recursion J_i.
    """

    j: Interval
    j_prime: Interval
    n: int
    step_images: list[Interval]
    step_gaps: list[float]
    chain: list[Interval]
    terminal_image: Interval
    case: int
    r2_ok: bool
    a: float
    sides: list[int] = field(default_factory=list)

    def length_bound(self, eta: float) -> float:
        """3 + log(1/(2|J|)) / log(a^2 eta^2 / 2).

        The formula is stated for |J| <= 1/2; longer intervals are treated as
        having length 1/2, which gives the value 3.
        """
        rate = self.a ** 2 * eta ** 2 / 2.0
        return 3.0 + math.log(1.0 / (2.0 * min(self.j.length, 0.5))) / math.log(rate)

    def to_dict(self) -> dict:
        return {
            "j": list(self.j), "j_prime": list(self.j_prime), "n": self.n,
            "step_images": [list(s) for s in self.step_images],
            "step_gaps": list(self.step_gaps),
            "chain": [list(c) for c in self.chain],
            "terminal_image": list(self.terminal_image),
            "case": self.case, "r2_ok": self.r2_ok, "a": self.a, "sides": list(self.sides),
        }


def iterate_interval(m: MapModel, j: Interval, sides) -> list[Interval]:
    """Forward images of ``j`` along a known itinerary (closed branches)."""
    out = [j]
    cur = j
    for s in sides:
        cur = Interval(float(m.f_closed(cur.lo, s)), float(m.f_closed(cur.hi, s)))
        out.append(cur)
    return out


def pull_back(m: MapModel, target: Interval, sides) -> Interval:
    """Preimage of ``target`` under the branch composition with itinerary ``sides``."""
    lo, hi = target
    for s in reversed(list(sides)):
        lo, hi = float(m.f_inv(lo, s)), float(m.f_inv(hi, s))
    return Interval(lo, hi)


def almost_leo(m: MapModel, j: Interval, cap: int = LEO_CAP) -> AleoResult:
    """Find J' in J and n with f^n: J' -> L_1^a a diffeomorphism avoiding 0.

    Runs the cut recursion J_{i+1} = (f(J_i) or its bigger half)_a until
    0 lies in f(J_{n-2}) and in f(J_{n-1}), then resolves the terminal step
    through [1 - a, 0_2] (directly, or after one extra step from the left)
    and pulls that interval back along the chain.
    """
    a = m.require_cut()
    j = Interval(*map(float, j))
    if j.length <= 0:
        raise ValueError("interval must have positive length")
    z = m.zeros

    start = _split_bigger(m, j) if j.contains_zero() else j
    chain = [cut_relative(a, start)]
    hits: list[bool] = []
    pieces: list[Interval] = []  # f(J_i) or its bigger half
    while True:
        if len(chain) > cap:
            raise NonTerminationError(f"almost-LEO recursion exceeded {cap} steps")
        fj = m.image(chain[-1])
        hit = fj.contains_zero()
        hits.append(hit)
        piece = _split_bigger(m, fj) if hit else fj
        pieces.append(piece)
        if hit and len(hits) >= 2 and hits[-2]:
            break
        chain.append(cut_relative(a, piece))

    n = len(chain)  # chain = J_0..J_{n-1}; hits at n-2 and n-1
    piece = pieces[n - 2]  # f(J_{n-2})^+
    j_tilde = cut_absolute(a, piece)
    core = Interval(1.0 - a, z.z2)
    if j_tilde.lo >= 0:
        case = 1
        r2_ok = abs(float(m.f(j_tilde.hi))) < abs(float(m.f(core.lo)))
        if not j_tilde.contains(core):
            raise ConstructionError(f"0_2 not in {j_tilde}", stage="terminal")
        tail = [core]
        n_total = n
    else:
        case = 2
        r2_ok = abs(float(m.f(j_tilde.lo))) < abs(float(m.f(a - 1.0)))
        if not j_tilde.lo <= z.z1 <= j_tilde.hi:
            raise ConstructionError(f"0_1 not in {j_tilde}", stage="terminal")
        if not float(m.f(a - 1.0)) > z.z2:
            raise ConstructionError("f(a - 1) <= 0_2", stage="terminal")
        left = Interval(float(m.f_inv(core.lo, -1)), float(m.f_inv(core.hi, -1)))
        tail = [left, core]
        n_total = n + 1

    # pull the tail back through J_{n-2}, ..., J_0
    images = list(tail)
    cur = tail[0]
    for i in range(n - 2, -1, -1):
        s = chain[i].side()
        cur = Interval(float(m.f_inv(cur.lo, s)), float(m.f_inv(cur.hi, s)))
        images.insert(0, cur)
    sides = [im.side() for im in images]
    j_prime = images[0]
    fwd = iterate_interval(m, j_prime, sides)
    return AleoResult(
        j=j, j_prime=j_prime, n=n_total, step_images=images,
        step_gaps=[im.dist_to_zero() for im in images],
        chain=chain, terminal_image=fwd[-1], case=case, r2_ok=bool(r2_ok), a=a,
        sides=sides,
    )


def check_aleo(m: MapModel, res: AleoResult, m_k: int | None = None) -> dict:
    """Per-run assertions: bound on n, terminal image, avoidance of 0, gaps."""
    base = m.base
    c = m.aleo_constants
    out = {
        "n_bound": res.n <= res.length_bound(m.eta) + 1e-12,
        "terminal": abs(res.terminal_image.lo - base.lo) <= ENDPOINT_TOL
        and abs(res.terminal_image.hi - base.hi) <= ENDPOINT_TOL,
        "avoids_zero": all(g > 0 for g in res.step_gaps),
        "inside_j": res.j.contains(res.j_prime, 1e-15),
    }
    gaps_ok = True
    for i in range(2, res.n):
        if i - 2 < len(res.chain):
            if res.step_gaps[i] < 0.5 * (1.0 - res.a) * res.chain[i - 2].length - 1e-15:
                gaps_ok = False
    out["gap_remark"] = gaps_ok
    if m_k is not None:
        out["n_log_bound"] = res.n <= c["D"] * math.log(m_k)
    return out


class DerivativeSup(NamedTuple):
    value: float
    bound: float
    ok: bool


def derivative_sup_on_run(m: MapModel, res: AleoResult, m_k: int) -> DerivativeSup:
    """max_i sup |f'| on f^i(J'), compared with E * m_k^xi."""
    c = m.aleo_constants
    sup = max(float(m.df(g if s > 0 else -g)) for g, s in zip(res.step_gaps, res.sides))
    bound = c["E"] * m_k ** c["xi"]
    return DerivativeSup(sup, bound, sup <= bound * (1 + 1e-12))


# -- invariant density ---------------------------------------------------------

@dataclass
class MeasureApprox:
    """Ulam approximation of the absolutely continuous invariant measure.

    ``residual`` is the L1 defect of the stationary density, split evenly
    onto twice as many bins, under the transfer operator at that resolution;
    ``convergence_residual`` is the power-iteration defect ||pi P - pi||_1
    at the working resolution.
    ``c`` (the density sup) stands in for the constant of mu(J) <= c|J|;
    it is an approximation, not a certified bound.
    """

    bins: int
    masses: np.ndarray
    residual: float
    convergence_residual: float
    sweeps: int
    rigorous: bool = False

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(-0.5, 0.5, self.bins + 1)

    @property
    def density(self) -> np.ndarray:
        return self.masses * self.bins

    @property
    def c(self) -> float:
        return float(self.density.max())

    def cdf(self, x):
        """mu([-1/2, x]), piecewise linear between bin edges."""
        cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        return np.interp(x, self.edges, cum)

    def cdf_inv(self, q):
        cum = np.concatenate([[0.0], np.cumsum(self.masses)])
        return np.interp(q, cum, self.edges)

    def measure(self, lo, hi):
        return self.cdf(hi) - self.cdf(lo)

    def to_dict(self) -> dict:
        return {"bins": self.bins, "masses": self.masses.tolist(), "residual": self.residual,
                "convergence_residual": self.convergence_residual, "sweeps": self.sweeps,
                "c": self.c, "rigorous": self.rigorous}


def ulam_matrix(m: MapModel, bins: int, sub: int = 32) -> sparse.csr_matrix:
    """Row-stochastic bin transfer matrix.

    Each bin is cut into ``sub`` cells; a cell carries 1/sub of the bin's
    mass, which is spread uniformly over the image interval of the cell.
    """
    h = 1.0 / bins
    k = np.arange(bins * sub)
    u0 = -0.5 + k * (h / sub)
    u1 = u0 + h / sub
    side = np.where(u0 >= 0.0, 1, -1)
    v0 = np.where(side > 0, m.f_closed(u0, 1), m.f_closed(u0, -1))
    v1 = np.where(side > 0, m.f_closed(u1, 1), m.f_closed(u1, -1))
    width = v1 - v0
    src = k // sub
    b0 = np.clip(np.floor((v0 + 0.5) / h).astype(int), 0, bins - 1)
    b1 = np.clip(np.floor((v1 + 0.5) / h).astype(int), 0, bins - 1)
    rows, cols, vals = [], [], []
    for off in range(int((b1 - b0).max()) + 1):
        tgt = b0 + off
        mask = tgt <= b1
        lo = np.maximum(v0[mask], -0.5 + tgt[mask] * h)
        hi = np.minimum(v1[mask], -0.5 + (tgt[mask] + 1) * h)
        frac = np.clip(hi - lo, 0.0, None) / width[mask]
        rows.append(src[mask])
        cols.append(tgt[mask])
        vals.append(frac / sub)
    P = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(bins, bins)).tocsr()
    return P


def _stationary(P, tol: float, max_sweeps: int):
    n = P.shape[0]
    pi = np.full(n, 1.0 / n)
    PT = P.T.tocsr()
    for sweep in range(1, max_sweeps + 1):
        nxt = PT @ pi
        nxt /= nxt.sum()
        diff = np.abs(nxt - pi).sum()
        pi = nxt
        if diff < tol:
            return pi, sweep
    raise NumericError(f"power iteration did not converge in {max_sweeps} sweeps")


def ulam_measure(m: MapModel, bins: int = 1024, sub: int = 32, tol: float = 1e-13,
                 max_sweeps: int = 100_000) -> MeasureApprox:
    if bins < 64 or bins & (bins - 1):
        raise ValueError("bins must be a power of two >= 64")
    P = ulam_matrix(m, bins, sub)
    pi, sweeps = _stationary(P, tol, max_sweeps)
    conv = float(np.abs(P.T @ pi - pi).sum())
    P2 = ulam_matrix(m, 2 * bins, sub)
    fine = np.repeat(pi / 2.0, 2)
    resid = float(np.abs(P2.T @ fine - fine).sum())
    return MeasureApprox(bins=bins, masses=pi, residual=resid,
                         convergence_residual=conv, sweeps=sweeps)


def resolution_gap(coarse: MeasureApprox, fine: MeasureApprox) -> float:
    """L1 distance between two Ulam densities after coarsening the finer one."""
    r = fine.bins // coarse.bins
    return float(np.abs(fine.masses.reshape(coarse.bins, r).sum(axis=1) - coarse.masses).sum())
