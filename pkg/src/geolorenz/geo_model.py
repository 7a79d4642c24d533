"""The geometric Lorenz model.

Linearised saddle flow in the cube [-1, 1]^3, the cross-section maps, the
Poincare map P(x, y) = (f(x), g(x, y)) on S = {|x| <= 1/2, |y| <= 1/2, z = 1},
and the reference Lorenz ODE that motivates the model.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import BlowUpError, ParameterError, SingularLeafError
from .one_d import MapModel


class Point3(NamedTuple):
    x: float
    y: float
    z: float


class SectionPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class OdeParams:
    a: float = 10.0
    r: float = 28.0
    b: float = 8.0 / 3.0

    def eigenvalues(self):
        """Eigenvalues of the linearisation at the origin, ordered as
        (unstable, strong stable, weak stable)."""
        disc = math.sqrt((self.a + 1.0) ** 2 + 4.0 * self.a * (self.r - 1.0))
        lam_u = 0.5 * (-(self.a + 1.0) + disc)
        lam_ss = 0.5 * (-(self.a + 1.0) - disc)
        return lam_u, lam_ss, -self.b


@dataclass(frozen=True)
class GeoParams:
    """Eigenvalues of the saddle plus the affine constants of f and g.

    ``alpha`` and ``beta`` are derived from the eigenvalues and never set by
    hand. ``f_offsets`` are the constants of the right (x > 0) and left
    (x < 0) branches of f; g(x, y) = g_gain * y * |x|^beta + sgn(x) * g_offset.
    """

    lambda1: float = 1.0
    lambda2: float = -3.75
    lambda3: float = -0.75
    theta: float = 1.65
    f_offsets: tuple[float, float] = (-0.5, 0.5)
    g_gain: float = 1.0
    g_offset: float = 0.25
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "f_offsets", tuple(float(v) for v in self.f_offsets))
        object.__setattr__(self, "alpha", -self.lambda3 / self.lambda1 if self.lambda1 else math.nan)
        object.__setattr__(self, "beta", -self.lambda2 / self.lambda1 if self.lambda1 else math.nan)

    @classmethod
    def from_ode(cls, ode: OdeParams, **kw) -> "GeoParams":
        lam1, lam2, lam3 = ode.eigenvalues()
        return cls(lambda1=lam1, lambda2=lam2, lambda3=lam3, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "GeoParams":
        known = {"lambda1", "lambda2", "lambda3", "theta", "f_offsets", "g_gain", "g_offset"}
        unknown = set(d) - known - {"alpha", "beta"}
        if unknown:
            raise ParameterError(f"unknown parameter keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def from_json(cls, path) -> "GeoParams":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["f_offsets"] = list(self.f_offsets)
        return d

    def map_model(self, a: float | None = None) -> MapModel:
        return MapModel(alpha=self.alpha, theta=self.theta, offsets=self.f_offsets, a=a)


def validate_params(p: GeoParams) -> list[str]:
    """Return the list of violated invariants (empty when ``p`` is valid)."""
    bad = []
    vals = (p.lambda1, p.lambda2, p.lambda3, p.theta, *p.f_offsets, p.g_gain, p.g_offset)
    if not all(math.isfinite(v) for v in vals):
        return ["non-finite field"]
    if not 0 < -p.lambda3:
        bad.append("0<-lambda3")
    if not -p.lambda3 < p.lambda1:
        bad.append("-lambda3<lambda1")
    if not p.lambda1 < -p.lambda2:
        bad.append("lambda1<-lambda2")
    if bad:
        return bad
    if not 0 < p.alpha < 1:
        bad.append("0<alpha<1")
    if not p.beta > 1:
        bad.append("beta>1")
    if p.theta <= 0:
        bad.append("theta>0")
        return bad

    m = p.map_model()
    lo, hi = m.range_bounds()
    if lo < -0.5 - 1e-12 or hi > 0.5 + 1e-12:
        bad.append("f maps into [-1/2,1/2]")
    if abs(m.f(-0.5) + 0.5) < 1e-12:
        bad.append("f(-1/2)!=-1/2")
    if abs(m.f(0.5) - 0.5) < 1e-12:
        bad.append("f(1/2)!=1/2")
    # sup |g| over S
    if abs(p.g_gain) * 0.5 * 0.5 ** p.beta + abs(p.g_offset) > 0.5:
        bad.append("g maps S into S")
    return bad


def flight_time(p: GeoParams, x0: float) -> float:
    """Time for the linear flow to carry (x0, y, 1) to the exit face |x| = 1."""
    if x0 == 0:
        raise SingularLeafError("x0 = 0 lies on the stable manifold of the origin")
    return -math.log(abs(x0)) / p.lambda1


def l_map(p: GeoParams, x: float, y: float) -> Point3:
    """Exit point on |x| = 1 of the linear flow started at (x, y, 1)."""
    if x == 0:
        raise SingularLeafError("x = 0 lies on the stable manifold of the origin")
    ax = abs(x)
    return Point3(math.copysign(1.0, x), y * ax ** p.beta, ax ** p.alpha)


def g_eval(p: GeoParams, x, y):
    """Second component of the Poincare map (vectorised over arrays)."""
    x = np.asarray(x, dtype=float)
    return p.g_gain * np.asarray(y, dtype=float) * np.abs(x) ** p.beta + np.sign(x) * p.g_offset


def poincare(p: GeoParams, pt: SectionPoint, model: MapModel | None = None) -> SectionPoint:
    x, y = float(pt[0]), float(pt[1])
    if x == 0:
        raise SingularLeafError("P is undefined on the singular leaf x = 0")
    m = model if model is not None else p.map_model()
    fx = m.f(x)
    gy = p.g_gain * y * abs(x) ** p.beta + math.copysign(p.g_offset, x)
    if abs(gy) > 0.5 + 1e-12 or abs(fx) > 0.5 + 1e-12:
        raise ParameterError(f"P({x}, {y}) = ({fx}, {gy}) leaves S; check the g constants")
    return SectionPoint(fx, gy)


def poincare_jacobian(p: GeoParams, pt: SectionPoint, model: MapModel | None = None) -> np.ndarray:
    """Derivative DP at ``pt`` (lower triangular: the y-fibres are invariant)."""
    x, y = float(pt[0]), float(pt[1])
    if x == 0:
        raise SingularLeafError("DP is undefined on x = 0")
    m = model if model is not None else p.map_model()
    ax = abs(x)
    dgdx = p.g_gain * y * p.beta * ax ** (p.beta - 1.0) * math.copysign(1.0, x)
    return np.array([[m.df(x), 0.0], [dgdx, p.g_gain * ax ** p.beta]])


def poincare_orbit(p: GeoParams, seeds, n_iter: int, model: MapModel | None = None,
                   singular_tol: float = 0.0) -> np.ndarray:
    """Iterate P on a batch of seeds; returns array of shape (n_iter + 1, n_seeds, 2).

    Orbits that reach |x| <= ``singular_tol`` are frozen as NaN from then on.
    """
    m = model if model is not None else p.map_model()
    pts = np.atleast_2d(np.asarray(seeds, dtype=float))
    out = np.empty((n_iter + 1, pts.shape[0], 2))
    out[0] = pts
    x, y = pts[:, 0].copy(), pts[:, 1].copy()
    for i in range(1, n_iter + 1):
        dead = ~(np.abs(x) > singular_tol)
        xs = np.where(dead, 1.0, x)
        nx = m.f(xs)
        ny = p.g_gain * y * np.abs(xs) ** p.beta + np.sign(xs) * p.g_offset
        nx[dead] = np.nan
        ny[dead] = np.nan
        x, y = nx, ny
        out[i, :, 0] = x
        out[i, :, 1] = y
    return out


def lorenz_rhs(p: OdeParams, state):
    x, y, z = state
    return np.array([p.a * (y - x), p.r * x - y - x * z, x * y - p.b * z])


def ode_orbit(p: OdeParams, x0, dt: float, n_steps: int, transient: int = 0) -> np.ndarray:
    """Fixed-step RK4 orbit of the Lorenz system.

    Returns the ``n_steps`` states after discarding ``transient`` steps.
    """
    if not 0 < dt <= 0.02:
        raise ParameterError("dt must lie in (0, 0.02]")
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    a, r, b = p.a, p.r, p.b
    x, y, z = (float(v) for v in x0)
    h2, h6 = 0.5 * dt, dt / 6.0
    out = np.empty((n_steps, 3))
    for i in range(transient + n_steps):
        k1x = a * (y - x); k1y = r * x - y - x * z; k1z = x * y - b * z
        xa, ya, za = x + h2 * k1x, y + h2 * k1y, z + h2 * k1z
        k2x = a * (ya - xa); k2y = r * xa - ya - xa * za; k2z = xa * ya - b * za
        xa, ya, za = x + h2 * k2x, y + h2 * k2y, z + h2 * k2z
        k3x = a * (ya - xa); k3y = r * xa - ya - xa * za; k3z = xa * ya - b * za
        xa, ya, za = x + dt * k3x, y + dt * k3y, z + dt * k3z
        k4x = a * (ya - xa); k4y = r * xa - ya - xa * za; k4z = xa * ya - b * za
        x += h6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        y += h6 * (k1y + 2 * k2y + 2 * k3y + k4y)
        z += h6 * (k1z + 2 * k2z + 2 * k3z + k4z)
        if not x * x + y * y + z * z <= 1e6:
            raise BlowUpError(f"state norm exceeded 1e3 at step {i} (dt={dt})")
        if i >= transient:
            out[i - transient] = (x, y, z)
    return out


def ode_ensemble(p: OdeParams, x0s, dt: float, n_steps: int, transient: int = 0) -> np.ndarray:
    """RK4 for many initial conditions at once (the shardable form of
    :func:`ode_orbit`). Returns shape (n_steps, n_ic, 3); each column matches
    the corresponding single-orbit run up to floating-point reassociation."""
    if not 0 < dt <= 0.02:
        raise ParameterError("dt must lie in (0, 0.02]")
    if n_steps < 1:
        raise ParameterError("n_steps must be >= 1")
    s = np.array(x0s, dtype=float).T.copy()  # (3, n_ic)
    out = np.empty((n_steps, s.shape[1], 3))

    def rhs(u):
        x, y, z = u
        return np.stack((p.a * (y - x), p.r * x - y - x * z, x * y - p.b * z))

    for i in range(transient + n_steps):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * dt * k1)
        k3 = rhs(s + 0.5 * dt * k2)
        k4 = rhs(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.einsum("ij,ij->j", s, s) <= 1e6):
            raise BlowUpError(f"state norm exceeded 1e3 at step {i} (dt={dt})")
        if i >= transient:
            out[i - transient] = s.T
    return out


def attractor_sample(p: OdeParams, n_points: int, n_ic: int = 2000, dt: float = 0.01,
                     transient: int = 2000, stride: int = 10, seed: int = 0) -> np.ndarray:
    """Post-transient points of the Lorenz attractor, shape (n_points, 3).

    ``n_ic`` orbits started near the origin (seeded RNG) are integrated
    together; after ``transient`` steps every ``stride``-th state is kept.
    """
    if not 0 < dt <= 0.02:
        raise ParameterError("dt must lie in (0, 0.02]")
    rng = np.random.default_rng(seed)
    s = (rng.standard_normal((3, n_ic)) + np.array([[1.0], [1.0], [1.0]]))
    per = -(-n_points // n_ic)
    out = np.empty((per, n_ic, 3))

    def rhs(u):
        x, y, z = u
        return np.stack((p.a * (y - x), p.r * x - y - x * z, x * y - p.b * z))

    total = transient + per * stride
    for i in range(total):
        k1 = rhs(s)
        k2 = rhs(s + 0.5 * dt * k1)
        k3 = rhs(s + 0.5 * dt * k2)
        k4 = rhs(s + dt * k3)
        s = s + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        j = i - transient + 1
        if j > 0 and j % stride == 0:
            out[j // stride - 1] = s.T
    if not np.all(np.isfinite(out)):
        raise BlowUpError("non-finite state in the ensemble")
    return out.reshape(-1, 3)[:n_points]
