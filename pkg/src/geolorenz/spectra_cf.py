"""Classical Lagrange and Markov spectra through continued fractions.

For a sequence (a_n) the Lagrange value is limsup (alpha_n + beta_n) with
alpha_n = [a_n; a_{n+1}, ...] and beta_n = [0; a_{n-1}, a_{n-2}, ..., a_1].
For eventually periodic sequences the limsup is a maximum over one period of
the bi-infinite periodic word, and each term is a quadratic irrational.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import signal

from .errors import DomainError, ResourceError, UnsupportedError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class CFWord:
    """Eventually periodic continued fraction preperiod + period^infinity.

    Only the first entry of the whole word may be 0 (an integer part of 0).
    """

    preperiod: tuple[int, ...] = ()
    period: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(int(a) for a in self.preperiod))
        object.__setattr__(self, "period", tuple(int(a) for a in self.period))
        seq = self.preperiod + self.period
        if any(a < 0 for a in seq) or any(a == 0 for a in seq[1:]):
            raise DomainError(f"entries must be positive (only the first may be 0): {seq}")
        if not self.preperiod and self.period and self.period[0] == 0:
            raise DomainError("a periodic part cannot contain 0")

    def terms(self, n: int) -> list[int]:
        out = list(self.preperiod)
        if not self.period:
            return out[:n]
        while len(out) < n:
            out.extend(self.period)
        return out[:n]

    @classmethod
    def parse(cls, text: str) -> "CFWord":
        """Parse ``[a0;a1,a2,(p1,p2,...)]``; the integer part may be empty."""
        t = text.strip().replace(" ", "")
        mt = re.fullmatch(r"\[(\d*);?([\d,]*?),?(?:\(([\d,]+)\))?\]", t)
        if not mt:
            raise DomainError(f"cannot parse continued fraction {text!r}")
        head, mid, per = mt.groups()
        pre = ([int(head)] if head else []) + [int(a) for a in mid.split(",") if a]
        period = [int(a) for a in per.split(",")] if per else []
        return cls(tuple(pre), tuple(period))

    def __str__(self) -> str:
        pre = list(self.preperiod)
        head = str(pre.pop(0)) if pre else ""
        body = ",".join(map(str, pre))
        if self.period:
            per = "(" + ",".join(map(str, self.period)) + ")"
            body = f"{body},{per}" if body else per
        return f"[{head};{body}]"


@dataclass(frozen=True)
class SpectrumValue:
    value: float
    witness: CFWord
    shift: int

    def row(self):
        return (self.value, str(self.witness), self.shift)


def cf_value(w: CFWord, terms: int = 60) -> float:
    """Backward recurrence over ``terms`` unrolled entries."""
    if terms < 30:
        raise ValueError("terms must be >= 30")
    a = w.terms(terms)
    if not a:
        raise DomainError("empty word")
    x = float(a[-1])
    for ai in reversed(a[:-1]):
        x = ai + 1.0 / x
    return x


def periodic_value(period) -> float:
    """Exact value of the purely periodic [b0; b1, ..., b_{p-1}, b0, ...].

    The fixed point of the Moebius map of the period matrix
    M = prod [[b_i, 1], [1, 0]] solves M10 x^2 + (M11 - M00) x - M01 = 0.
    """
    M = np.eye(2, dtype=object)
    for b in period:
        if b < 1:
            raise DomainError("periodic entries must be >= 1")
        M = M.dot(np.array([[b, 1], [1, 0]], dtype=object))
    a, b, c = int(M[1, 0]), int(M[1, 1] - M[0, 0]), -int(M[0, 1])
    disc = b * b - 4 * a * c
    return (-b + math.sqrt(disc)) / (2 * a)


def perron_k(w: CFWord) -> SpectrumValue:
    """limsup (alpha_n + beta_n) for an eventually periodic word.

    The preperiod does not affect the limsup; for shift j of the period the
    term is [b_j; b_{j+1}, ...] + 1 / [b_{j-1}; b_{j-2}, ...].
    """
    if not w.period:
        raise UnsupportedError("perron_k needs a periodic word")
    per = list(w.period)
    p = len(per)
    best, where = -math.inf, 0
    for j in range(p):
        fwd = per[j:] + per[:j]
        back = [per[(j - 1 - i) % p] for i in range(p)]
        v = periodic_value(fwd) + 1.0 / periodic_value(back)
        if v > best:
            best, where = v, j
    return SpectrumValue(best, w, where + len(w.preperiod))


def _canonical(word: tuple[int, ...]) -> bool:
    """True for primitive words that are the least rotation in their class."""
    p = len(word)
    for d in range(1, p):
        if p % d == 0 and word == word[:d] * (p // d):
            return False
    return all(word <= word[i:] + word[:i] for i in range(1, p))


def rational_square(v: float, max_den: int = 10_000) -> Fraction:
    return Fraction(v * v).limit_denominator(max_den)


def enumerate_head(max_period: int = 4, alphabet_max: int = 2, below: float = 3.0,
                   dedupe_tol: float = 1e-9) -> list[SpectrumValue]:
    """Lagrange values below 3 of periodic words over {1..alphabet_max}."""
    if not 1 <= max_period <= 8:
        raise ValueError("max_period must lie in [1, 8]")
    if not 1 <= alphabet_max <= 4:
        raise ValueError("alphabet_max must lie in [1, 4]")
    found: list[SpectrumValue] = []
    for p in range(1, max_period + 1):
        for word in itertools.product(range(1, alphabet_max + 1), repeat=p):
            if not _canonical(word):
                continue
            sv = perron_k(CFWord((), word))
            if sv.value < below:
                found.append(sv)
    found.sort(key=lambda s: s.value)
    out: list[SpectrumValue] = []
    for sv in found:
        if not out or sv.value - out[-1].value > dedupe_tol:
            out.append(sv)
    return out


# -- Hall's interval ----------------------------------------------------------------

TAIL_MIN = 1.0 + (SQRT2 - 1.0) / 2.0   # [1; 4, 1, 4, ...]
TAIL_MAX = 4.0 + 2.0 * (SQRT2 - 1.0)   # [4; 1, 4, 1, ...]


def cylinder_interval(word) -> tuple[float, float]:
    """Hull of {[0; a_1, .., a_d, t] : t in [TAIL_MIN, TAIL_MAX]} for digits <= 4."""
    pp, qp, p, q = 1, 0, 0, 1
    for a in word:
        if not 1 <= a <= 4:
            raise DomainError("cylinder digits must lie in 1..4")
        pp, qp, p, q = p, q, a * p + pp, a * q + qp
    u = (p * TAIL_MIN + pp) / (q * TAIL_MIN + qp)
    v = (p * TAIL_MAX + pp) / (q * TAIL_MAX + qp)
    return min(u, v), max(u, v)


def _cylinder_hulls(max_digit: int, width: float, budget: int):
    """Hulls of the depth-adaptive cylinders of C(max_digit) with width < ``width``.

    Cylinder (a1..ad) = {[0; a1, .., ad, t] : t in [TAIL_MIN, TAIL_MAX]}; the
    hull endpoints come from the extreme tails, which are points of C(4).
    """
    if max_digit != 4:
        raise UnsupportedError("only digits <= 4 are supported (tail bounds are for C(4))")
    out_lo, out_hi = [], []
    # stack of (p_prev, q_prev, p, q): [0; a1..ad, t] = (p t + p_prev) / (q t + q_prev)
    stack = [(1, 0, 0, 1)]
    while stack:
        pp, qp, p, q = stack.pop()
        for a in range(1, max_digit + 1):
            np_, nq = a * p + pp, a * q + qp
            u = (np_ * TAIL_MIN + p) / (nq * TAIL_MIN + q)
            v = (np_ * TAIL_MAX + p) / (nq * TAIL_MAX + q)
            lo, hi = min(u, v), max(u, v)
            if hi - lo < width:
                out_lo.append(lo)
                out_hi.append(hi)
                if len(out_lo) > budget:
                    raise ResourceError(f"more than {budget} cylinders at width {width:g}")
            else:
                stack.append((p, q, np_, nq))
    return np.array(out_lo), np.array(out_hi)


def _merge(lo: np.ndarray, hi: np.ndarray):
    order = np.argsort(lo, kind="stable")
    lo, hi = lo[order], hi[order]
    run_hi = np.maximum.accumulate(hi)
    new = np.concatenate([[True], lo[1:] > run_hi[:-1]])
    starts = np.flatnonzero(new)
    ends = np.concatenate([starts[1:], [lo.size]]) - 1
    return lo[starts], run_hi[ends]


@dataclass
class HallResult:
    verified: bool
    target: tuple[float, float]
    resolution: float
    cylinders: int
    pieces: int
    max_gap: float
    hull: tuple[float, float]
    note: str = "numerical covering of the sum set, not a proof"

    def contains(self, x: float) -> bool:
        i = np.searchsorted(self._lo, x, side="right") - 1
        return bool(i >= 0 and x <= self._hi[i])

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if not k.startswith("_")}


def _grid_mask(lo, hi, origin: float, step: float, n: int) -> np.ndarray:
    """Cells of width ``step`` meeting any interval [lo_i, hi_i]."""
    a = np.floor((lo - origin) / step).astype(np.int64)
    b = np.floor((hi - origin) / step).astype(np.int64)
    diff = np.zeros(n + 1, dtype=np.int64)
    np.add.at(diff, a, 1)
    np.add.at(diff, b + 1, -1)
    return np.cumsum(diff[:n]) > 0


def hall_sum_check(resolution: float = 1e-3, budget: int = 2_000_000) -> HallResult:
    """Check that C(4) + C(4) has no gap longer than ``resolution``.

    C(4) is covered by cylinder hulls of width < resolution/8 whose endpoints
    lie in C(4); the hulls are rasterised to cells of width resolution/8 and
    the Minkowski sum of the two cell covers is an FFT convolution. A covered
    point is within resolution/4 of C(4) in each summand, hence within
    resolution/2 of a true sum, so a gap-free cover of the target implies that
    every gap of the true sum set inside it is shorter than ``resolution``.
    """
    if not 1e-5 <= resolution <= 1e-2:
        raise ValueError("resolution must lie in [1e-5, 1e-2]")
    step = resolution / 8.0
    lo, hi = _cylinder_hulls(4, step, budget=budget)
    org = float(lo.min())
    n = int(math.floor((hi.max() - org) / step)) + 1
    if 2 * n > budget * 8:
        raise ResourceError(f"grid of {2 * n} cells exceeds the budget")
    mask = _grid_mask(lo, hi, org, step, n).astype(float)
    occ = signal.fftconvolve(mask, mask) > 0.5
    # cell k of the sum covers [2 org + k step, 2 org + (k + 2) step)
    k = np.flatnonzero(occ)
    ulo, uhi = _merge(2 * org + k * step, 2 * org + (k + 2) * step)
    a, b = SQRT2 - 1.0 + resolution, 4.0 * (SQRT2 - 1.0) - resolution
    inside = (uhi >= a) & (ulo <= b)
    clo, chi = ulo[inside], uhi[inside]
    gaps = clo[1:] - chi[:-1] if clo.size > 1 else np.array([])
    covered = clo.size >= 1 and clo[0] <= a and chi[-1] >= b
    max_gap = float(gaps.max()) if gaps.size else 0.0
    res = HallResult(bool(covered and max_gap <= 0.0), (a, b), resolution, int(lo.size),
                     int(ulo.size), max_gap, (float(ulo[0]), float(uhi[-1])))
    res._lo, res._hi = ulo, uhi
    return res


def freiman_constant() -> float:
    """(2221564096 + 283748 sqrt(462)) / 491993569."""
    return (2221564096 + 283748 * math.sqrt(462)) / 491993569
