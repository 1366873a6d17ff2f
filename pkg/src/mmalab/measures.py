"""Jump measures (lambda) and mixing measures (pi).

A jump measure is stored as two one-sided components acting on ``|z|``: the
positive side and the mirrored negative side. Every one-sided family exposes
closed-form tails and partial moments plus an exact sampler for the jumps above
a threshold. Compound-Poisson laws and tabulated tails are assembled from the
same building blocks (power pieces and tempered-power pieces).

Regions are half-open intervals ``lo < |z| <= hi`` so that ``(0, 1)`` means
``|z| <= 1`` and ``(1, inf)`` means ``|z| > 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special as sc

from . import quadrature as quad
from .special import gammainc_lower, gammainc_upper, upper_gamma

Z0, ZINF = "z→0", "z→∞"
X0, XINF = "x→0", "x→∞"
INF = math.inf
DEFAULT_SLACK = 0.01


def _finite_or_inf(value: float, where: list[str]) -> quad.Integral:
    if where:
        return quad.Integral(INF, False, where)
    return quad.Integral(float(value), True)


def power_integral(c: float, e: float, lo: float, hi: float,
                   names: tuple[str, str] = (Z0, ZINF)) -> quad.Integral:
    """``int_lo^hi c z^e dz`` with divergence diagnosis at 0 and infinity."""
    if hi <= lo or c == 0:
        return quad.Integral(0.0, True)
    where = []
    if lo == 0 and e <= -1:
        where.append(names[0])
    if math.isinf(hi) and e >= -1:
        where.append(names[1])
    if where:
        return quad.Integral(INF, False, where)
    if e == -1:
        return quad.Integral(c * math.log(hi / lo), True)
    q = e + 1.0
    top = 0.0 if math.isinf(hi) else hi ** q
    bot = 0.0 if lo == 0 else lo ** q
    return quad.Integral(c * (top - bot) / q, True)


@dataclass(frozen=True)
class IndexValue:
    """A Blumenthal-Getoor or tail index with its attained flag.

    ``usable`` is the value the rate bounds should use: the index itself when
    the boundary moment is finite, otherwise the index moved inward by the slack.
    """

    value: float
    attained: bool
    usable: float
    per_side: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# one-sided building blocks

class Side:
    """A measure on ``(0, inf)`` describing one sign of the jumps."""

    kind = "side"

    def tail(self, r) -> np.ndarray:
        raise NotImplementedError

    def moment(self, p: float, lo: float = 0.0, hi: float = INF) -> quad.Integral:
        raise NotImplementedError

    def density(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def moment_vec(self, p: float, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, str | None]:
        """Elementwise ``moment`` over arrays of bounds: ``(values, divergence label or None)``."""
        out = np.zeros(lo.shape)
        for idx in np.ndindex(lo.shape):
            res = self.moment(p, float(lo[idx]), float(hi[idx]))
            if not res.convergent:
                return out, (res.divergent_at[0] if res.divergent_at else "inner")
            out[idx] = res.value
        return out, None

    def atoms(self) -> list[tuple[float, float]]:
        return []

    def breakpoints(self) -> list[float]:
        return []

    def bg(self) -> tuple[float, bool]:
        raise NotImplementedError

    def eta(self) -> tuple[float, bool]:
        raise NotImplementedError

    def sample_above(self, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def scale(self) -> float:
        return 1.0

    def scaled(self, w: float) -> "Side":
        raise NotImplementedError


class PowerSide(Side):
    """Density ``c z^(-1-a)`` on ``(lo, hi)``; ``a`` may be any real number."""

    kind = "power"

    def __init__(self, c: float, a: float, lo: float = 0.0, hi: float = INF):
        if c < 0 or not (0 <= lo < hi):
            raise ValueError("power piece needs c >= 0 and 0 <= lo < hi")
        self.c, self.a, self.lo, self.hi = float(c), float(a), float(lo), float(hi)

    def scaled(self, w):
        return PowerSide(self.c * w, self.a, self.lo, self.hi)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        inside = (z > self.lo) & (z < self.hi)
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(inside, self.c * np.power(np.where(inside, z, 1.0), -1.0 - self.a), 0.0)

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        low = np.maximum(r, self.lo)
        a, c = self.a, self.c
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if a == 0:
                out = c * np.log(self.hi / low)
            else:
                hi_term = 0.0 if math.isinf(self.hi) else (self.hi ** -a if self.hi > 0 else 0.0)
                if math.isinf(self.hi) and a < 0:
                    hi_term = INF
                out = (c / a) * (np.power(low, -a) - hi_term)
        out = np.where(low >= self.hi, 0.0, out)
        if self.lo == 0 and a >= 0:
            out = np.where(r <= 0, INF, out)
        return out

    def moment(self, p, lo=0.0, hi=INF):
        return power_integral(self.c, p - 1.0 - self.a, max(lo, self.lo), min(hi, self.hi))

    def moment_vec(self, p, lo, hi):
        e = p - 1.0 - self.a
        l, h = np.maximum(lo, self.lo), np.minimum(hi, self.hi)
        live = (h > l) & (self.c > 0)
        if np.any(live & (l == 0)) and e <= -1:
            return np.zeros(lo.shape), Z0
        if np.any(live & np.isinf(h)) and e >= -1:
            return np.zeros(lo.shape), ZINF
        l = np.where(live, l, 1.0)
        h = np.where(live, h, 1.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if e == -1:
                val = self.c * np.log(h / l)
            else:
                q = e + 1.0
                top = np.where(np.isinf(h), 0.0, np.power(h, q))
                bot = np.where(l == 0, 0.0, np.power(l, q))
                val = self.c * (top - bot) / q
        return np.where(live, val, 0.0), None

    def breakpoints(self):
        return [b for b in (self.lo, self.hi) if 0 < b < INF]

    def bg(self):
        if self.c == 0 or self.lo > 0 or self.a < 0:
            return 0.0, True
        return min(max(self.a, 0.0), 2.0), False

    def eta(self):
        if self.c == 0 or math.isfinite(self.hi) or self.a <= 0:
            return INF, True
        return self.a, False

    def scale(self):
        if self.lo > 0:
            return self.lo
        return self.hi if math.isfinite(self.hi) else 1.0

    def _invert(self, y, low):
        a, c = self.a, self.c
        if a == 0:
            return self.hi * np.exp(-y / c)
        hi_term = 0.0 if math.isinf(self.hi) else self.hi ** -a
        return np.power(a * y / c + hi_term, -1.0 / a)

    def sample_above(self, eps, n, rng):
        low = max(eps, self.lo)
        if n == 0:
            return np.empty(0)
        total = float(self.tail(low))
        if not total > 0:
            raise ValueError("no mass above the threshold")
        u = 1.0 - rng.random(n)
        z = self._invert(u * total, low)
        return np.clip(z, low, self.hi)


class TemperedSide(Side):
    """Density ``c z^(-1-a) e^(-theta z)`` on ``(0, inf)`` with ``a < 2``."""

    kind = "tempered"

    def __init__(self, c: float, a: float, theta: float):
        if c < 0 or theta <= 0 or a >= 2:
            raise ValueError("tempered piece needs c >= 0, theta > 0, a < 2")
        self.c, self.a, self.theta = float(c), float(a), float(theta)

    def scaled(self, w):
        return TemperedSide(self.c * w, self.a, self.theta)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        pos = z > 0
        zz = np.where(pos, z, 1.0)
        with np.errstate(over="ignore", divide="ignore"):
            return np.where(pos, self.c * np.power(zz, -1.0 - self.a) * np.exp(-self.theta * zz), 0.0)

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        pos = r > 0
        s = -self.a
        pref = self.c * self.theta ** self.a
        if pos.any():
            out[pos] = pref * upper_gamma(s, self.theta * r[pos])
        if (~pos).any():
            out[~pos] = pref * math.gamma(s) if s > 0 else INF
        return out

    def moment(self, p, lo=0.0, hi=INF):
        s = p - self.a
        if hi <= lo or self.c == 0:
            return quad.Integral(0.0, True)
        if s <= 0 and lo == 0:
            return quad.Integral(INF, False, [Z0])
        th = self.theta
        xl, xh = th * lo, th * hi
        if s > 0:
            # difference of regularized functions on whichever side avoids cancellation
            if xl >= s + 1.0:
                diff = float(gammainc_upper(s, xl)) - float(gammainc_upper(s, xh))
            else:
                diff = float(gammainc_lower(s, xh)) - float(gammainc_lower(s, xl))
            val = diff * math.exp(math.lgamma(s) - s * math.log(th))
        else:
            val = (float(upper_gamma(s, xl)) - float(upper_gamma(s, np.asarray(xh)))) * th ** (-s)
        return quad.Integral(self.c * max(val, 0.0), True)

    def moment_vec(self, p, lo, hi):
        s = p - self.a
        live = (hi > lo) & (self.c > 0)
        if s <= 0 and np.any(live & (lo == 0)):
            return np.zeros(lo.shape), Z0
        th = self.theta
        xl = np.where(live, th * lo, 1.0)
        xh = np.where(live, th * hi, 2.0)
        if s > 0:
            up = xl >= s + 1.0
            diff = np.where(up, gammainc_upper(s, xl) - gammainc_upper(s, xh),
                            gammainc_lower(s, xh) - gammainc_lower(s, xl))
            val = diff * math.exp(math.lgamma(s) - s * math.log(th))
        else:
            val = (upper_gamma(s, xl) - upper_gamma(s, xh)) * th ** (-s)
        return np.where(live, self.c * np.maximum(val, 0.0), 0.0), None

    def bg(self):
        if self.c == 0 or self.a < 0:
            return 0.0, True
        return self.a, False

    def eta(self):
        return INF, True

    def scale(self):
        return 1.0 / self.theta

    def sample_above(self, eps, n, rng):
        if n == 0:
            return np.empty(0)
        th, a = self.theta, self.a
        if a < 0:
            # finite mass: exact inversion of the regularized upper gamma
            q_eps = float(gammainc_upper(-a, th * eps)) if eps > 0 else 1.0
            u = 1.0 - rng.random(n)
            return sc.gammainccinv(-a, u * q_eps) / th
        z0 = max(eps, 1.0 / th)
        m1 = self.moment(0.0, eps, z0).value
        m2 = self.moment(0.0, z0, INF).value
        n1 = rng.binomial(n, m1 / (m1 + m2)) if m1 > 0 else 0
        out = []
        if n1:
            env = PowerSide(1.0, a, eps, z0)
            got = np.empty(0)
            while got.size < n1:
                k = max(2 * (n1 - got.size), 16)
                z = env.sample_above(eps, k, rng)
                keep = rng.random(k) < np.exp(-th * (z - eps))
                got = np.concatenate([got, z[keep]])
            out.append(got[:n1])
        n2 = n - n1
        if n2:
            got = np.empty(0)
            while got.size < n2:
                k = max(2 * (n2 - got.size), 16)
                z = z0 + rng.exponential(1.0 / th, k)
                keep = rng.random(k) < np.power(z / z0, -1.0 - a)
                got = np.concatenate([got, z[keep]])
            out.append(got[:n2])
        return rng.permutation(np.concatenate(out))


class AtomSide(Side):
    kind = "atoms"

    def __init__(self, atoms: Sequence[tuple[float, float]]):
        self._z = np.array([float(z) for z, _ in atoms])
        self._m = np.array([float(m) for _, m in atoms])
        if np.any(self._z <= 0) or np.any(self._m < 0):
            raise ValueError("atoms need |z| > 0 and nonnegative mass")

    def scaled(self, w):
        return AtomSide([(z, m * w) for z, m in zip(self._z, self._m)])

    def atoms(self):
        return list(zip(self._z.tolist(), self._m.tolist()))

    def density(self, z):
        return np.zeros_like(np.asarray(z, dtype=float))

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        return (self._m[None, :] * (self._z[None, :] > r.reshape(-1, 1))).sum(axis=1).reshape(r.shape)

    def moment(self, p, lo=0.0, hi=INF):
        sel = (self._z > lo) & (self._z <= hi)
        return quad.Integral(float(np.sum(self._m[sel] * self._z[sel] ** p)), True)

    def moment_vec(self, p, lo, hi):
        z = self._z
        sel = (z > lo[..., None]) & (z <= hi[..., None])
        return (sel * (self._m * z ** p)).sum(axis=-1), None

    def bg(self):
        return 0.0, True

    def eta(self):
        return INF, True

    def scale(self):
        return float(self._z.max()) if self._z.size else 1.0

    def sample_above(self, eps, n, rng):
        sel = self._z > eps
        m = self._m[sel]
        if n and m.sum() <= 0:
            raise ValueError("no mass above the threshold")
        if n == 0:
            return np.empty(0)
        idx = rng.choice(m.size, size=n, p=m / m.sum())
        return self._z[sel][idx]


class LogParetoSide(Side):
    """Tail ``c (1 + log(z / xm))^-theta`` above ``xm``: finite mass, every power moment infinite."""

    kind = "log-pareto"

    def __init__(self, c: float, theta: float, xm: float = 1.0):
        if c < 0 or theta <= 0 or xm <= 0:
            raise ValueError("log-pareto piece needs c >= 0, theta > 0, xm > 0")
        self.c, self.theta, self.xm = float(c), float(theta), float(xm)

    def scaled(self, w):
        return LogParetoSide(self.c * w, self.theta, self.xm)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        inside = z > self.xm
        zz = np.where(inside, z, self.xm)
        val = self.c * self.theta * np.power(1.0 + np.log(zz / self.xm), -self.theta - 1.0) / zz
        return np.where(inside, val, 0.0)

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        rr = np.maximum(r, self.xm)
        return self.c * np.power(1.0 + np.log(rr / self.xm), -self.theta)

    def moment(self, p, lo=0.0, hi=INF):
        lo, hi = max(lo, self.xm), hi
        if hi <= lo or self.c == 0:
            return quad.Integral(0.0, True)
        if p == 0:
            return quad.Integral(float(self.tail(lo) - (0.0 if math.isinf(hi) else self.tail(hi))), True)
        if math.isinf(hi) and p > 0:
            return quad.Integral(INF, False, [ZINF])
        # substitute u = log(z / xm)
        a, b = math.log(lo / self.xm), math.log(hi / self.xm) if math.isfinite(hi) else INF
        g = lambda u: self.c * self.theta * self.xm ** p * np.exp(p * u) * np.power(1.0 + u, -self.theta - 1.0)
        return quad.integrate(g, a, b, names=(Z0, ZINF))

    def log_moment(self, lo=1.0):
        """``int_{z > lo} log z`` against this piece."""
        L = max(lo, self.xm)
        if self.theta <= 1:
            return quad.Integral(INF, False, [ZINF])
        # int_L^inf log z dT = log L * T(L) + int_L^inf T(z)/z dz
        u0 = 1.0 + math.log(L / self.xm)
        val = math.log(L) * float(self.tail(L)) + self.c * u0 ** (1.0 - self.theta) / (self.theta - 1.0)
        return quad.Integral(val, True)

    def bg(self):
        return 0.0, True

    def eta(self):
        return 0.0, True

    def scale(self):
        return self.xm

    def sample_above(self, eps, n, rng):
        if n == 0:
            return np.empty(0)
        low = max(eps, self.xm)
        top = float(self.tail(low)) / self.c
        u = (1.0 - rng.random(n)) * top
        return self.xm * np.exp(np.power(u, -1.0 / self.theta) - 1.0)


class SumSide(Side):
    """Sum of one-sided pieces (used for compound-Poisson laws and tables)."""

    kind = "sum"

    def __init__(self, pieces: Sequence[Side], scan_indices: bool = False):
        self.pieces = list(pieces)
        self.scan_indices = scan_indices

    def scaled(self, w):
        return SumSide([p.scaled(w) for p in self.pieces], self.scan_indices)

    def density(self, z):
        return sum(p.density(z) for p in self.pieces)

    def atoms(self):
        return [a for p in self.pieces for a in p.atoms()]

    def tail(self, r):
        return sum(p.tail(r) for p in self.pieces)

    def moment(self, p, lo=0.0, hi=INF):
        total = quad.Integral(0.0, True)
        for piece in self.pieces:
            total = total + piece.moment(p, lo, hi)
        if not total.convergent:
            total.value = INF
        return total

    def moment_vec(self, p, lo, hi):
        out = np.zeros(lo.shape)
        for piece in self.pieces:
            val, bad = piece.moment_vec(p, lo, hi)
            if bad:
                return out, bad
            out = out + val
        return out, None

    def breakpoints(self):
        return sorted({b for p in self.pieces for b in p.breakpoints()})

    def bg(self):
        if self.scan_indices:
            return scan_bg(self)
        vals = [p.bg() for p in self.pieces]
        top = max(v for v, _ in vals)
        return top, all(att for v, att in vals if v == top)

    def eta(self):
        if self.scan_indices:
            return scan_eta(self)
        vals = [p.eta() for p in self.pieces]
        low = min(v for v, _ in vals)
        return low, all(att for v, att in vals if v == low)

    def scale(self):
        return max(p.scale() for p in self.pieces)

    def sample_above(self, eps, n, rng):
        if n == 0:
            return np.empty(0)
        masses = np.array([float(p.tail(eps)) for p in self.pieces])
        counts = rng.multinomial(n, masses / masses.sum())
        parts = [p.sample_above(eps, int(k), rng) for p, k in zip(self.pieces, counts) if k]
        return rng.permutation(np.concatenate(parts))


def tabulated_side(r: Sequence[float], tail: Sequence[float]) -> SumSide:
    """Tail given by samples ``(r_i, T_i)``, piecewise power in log-log coordinates.

    Beyond the table the end slopes are extended, so every piece is a power
    density and the tail stays monotone exactly.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(tail, dtype=float)
    if r.size < 2 or np.any(np.diff(r) <= 0) or np.any(r <= 0):
        raise ValueError("tabulated tail needs increasing positive abscissae")
    if np.any(t <= 0) or np.any(np.diff(t) > 0):
        raise ValueError("tabulated tail must be positive and non-increasing")
    slopes = np.diff(np.log(t)) / np.diff(np.log(r))
    if slopes[-1] >= 0:
        raise ValueError("tabulated tail must decay beyond the last sample")
    pieces: list[Side] = []
    a0 = -slopes[0]
    if a0 > 0:
        pieces.append(PowerSide(a0 * t[0] * r[0] ** a0, a0, 0.0, r[0]))
    for i, k in enumerate(slopes):
        a = -k
        if a > 0:
            pieces.append(PowerSide(a * t[i] * r[i] ** a, a, r[i], r[i + 1]))
    an = -slopes[-1]
    pieces.append(PowerSide(an * t[-1] * r[-1] ** an, an, r[-1], INF))
    return SumSide(pieces, scan_indices=True)


def compound_poisson_side(rate: float, dist: str, **par) -> Side:
    """One-sided compound-Poisson jump law ``rate * F``."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    if dist in ("exponential", "gamma"):
        k = float(par.get("shape", 1.0))
        s = float(par.get("scale", 1.0))
        return TemperedSide(rate / (math.gamma(k) * s ** k), -k, 1.0 / s)
    if dist == "pareto":
        al = float(par["shape"])
        xm = float(par.get("scale", 1.0))
        return PowerSide(rate * al * xm ** al, al, xm, INF)
    if dist == "log-pareto":
        return LogParetoSide(rate, float(par["shape"]), float(par.get("scale", 1.0)))
    if dist == "uniform":
        lo, hi = float(par.get("low", 0.0)), float(par["high"])
        return PowerSide(rate / (hi - lo), -1.0, lo, hi)
    raise ValueError(f"unknown compound-poisson distribution {dist!r}")


# --------------------------------------------------------------------------
# index scans

def _bisect_sign(fn, lo, hi, iters=60):
    # fn(lo) < 0 <= fn(hi) or reversed; returns the crossing
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if (fn(mid) < 0) == (flo < 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _slope_at(side: Side, p: float, toward: str) -> float:
    return quad.endpoint_slope(side.density, toward, power=p)


def scan_bg(side: Side) -> tuple[float, bool]:
    """Blumenthal-Getoor index from the divergence of shell masses toward 0."""
    div = lambda p: _slope_at(side, p, "zero")
    if div(0.0) < 0:
        return 0.0, True
    if div(2.0) >= 0:
        return 2.0, False
    b = _bisect_sign(div, 0.0, 2.0)
    return b, div(b) < quad.DIVERGENCE_SLOPE


def scan_eta(side: Side, p_max: float = 50.0) -> tuple[float, bool]:
    """Tail index from the divergence of shell masses toward infinity."""
    div = lambda p: _slope_at(side, p, "inf")
    if div(p_max) < 0:
        return INF, True
    if div(0.0) >= 0:
        return 0.0, False
    e = _bisect_sign(div, 0.0, p_max)
    return e, div(e) < quad.DIVERGENCE_SLOPE


# --------------------------------------------------------------------------
# two-sided Levy measure

@dataclass(frozen=True)
class LevyMeasureSpec:
    """Jump measure split into positive and negative one-sided parts."""

    family: str
    pos: Side | None
    neg: Side | None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        c = small_large_mass(self)
        if not math.isfinite(c):
            raise ValueError("not a Levy measure: int (1 ^ z^2) lambda(dz) diverges")

    def sides(self, side: str = "both"):
        out = []
        if side in ("pos", "both") and self.pos is not None:
            out.append(("pos", self.pos))
        if side in ("neg", "both") and self.neg is not None:
            out.append(("neg", self.neg))
        return out

    @property
    def is_zero(self) -> bool:
        return not self.sides()

    def scale(self) -> float:
        return max([s.scale() for _, s in self.sides()] or [1.0])

    def signed_atoms(self) -> list[tuple[float, float]]:
        out = [(z, m) for _, s in self.sides("pos") for z, m in s.atoms()]
        out += [(-z, m) for _, s in self.sides("neg") for z, m in s.atoms()]
        return out


def _split(side: Side, sign_mix: float):
    pos = side.scaled(sign_mix) if sign_mix > 0 else None
    neg = side.scaled(1.0 - sign_mix) if sign_mix < 1 else None
    return pos, neg


def levy_measure(family: str, **par) -> LevyMeasureSpec:
    """Build a jump measure from a tagged parameter record.

    Families and keys::

        power-density     exponent, scale=1, support=(0, inf), sign_mix=1
        tempered-power    exponent, rate (tempering), scale=1, sign_mix=1
        gamma-type        scale (mass near 0), decay, sign_mix=1
        atom-list         atoms=[(z, mass), ...]  (signed z)
        compound-poisson  rate, distribution, shape/scale/low/high, sign_mix=1
        tabulated         r=[...], tail=[...], sign_mix=1
        zero              no jumps
    """
    sign_mix = float(par.pop("sign_mix", 1.0))
    if not 0 <= sign_mix <= 1:
        raise ValueError("sign_mix must lie in [0, 1]")
    record = dict(par, sign_mix=sign_mix)
    if family == "zero":
        return LevyMeasureSpec(family, None, None, {})
    if family == "power-density":
        a = float(par["exponent"])
        if a <= 0:
            raise ValueError("power-density exponent must be positive")
        lo, hi = (float(v) for v in par.get("support", (0.0, INF)))
        side = PowerSide(float(par.get("scale", 1.0)), a, lo, hi)
    elif family == "tempered-power":
        side = TemperedSide(float(par.get("scale", 1.0)), float(par["exponent"]), float(par["rate"]))
    elif family == "gamma-type":
        side = TemperedSide(float(par.get("scale", 1.0)), 0.0, float(par.get("decay", 1.0)))
    elif family == "compound-poisson":
        extra = {k: v for k, v in par.items() if k not in ("rate", "distribution")}
        side = compound_poisson_side(float(par["rate"]), par.get("distribution", "exponential"), **extra)
    elif family == "tabulated":
        side = tabulated_side(par["r"], par["tail"])
    elif family == "atom-list":
        atoms = [(float(z), float(m)) for z, m in par["atoms"]]
        if any(z == 0 for z, _ in atoms):
            raise ValueError("lambda({0}) must be 0")
        pos = [(z, m) for z, m in atoms if z > 0]
        neg = [(-z, m) for z, m in atoms if z < 0]
        return LevyMeasureSpec(family, AtomSide(pos) if pos else None,
                               AtomSide(neg) if neg else None, {"atoms": atoms})
    else:
        raise ValueError(f"unknown Levy family {family!r}")
    pos, neg = _split(side, sign_mix)
    return LevyMeasureSpec(family, pos, neg, record)


def zero_measure() -> LevyMeasureSpec:
    return LevyMeasureSpec("zero", None, None, {})


def small_large_mass(lam: LevyMeasureSpec) -> float:
    """``int (1 ^ z^2) lambda(dz)``."""
    total = 0.0
    for _, s in lam.sides():
        total += s.moment(2.0, 0.0, 1.0).value + float(s.tail(1.0))
    return total


def tail_mass(lam: LevyMeasureSpec, r, side: str = "both"):
    """``lambda({|z| > r})`` on the requested sign side; ``inf`` below a singular support."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("tail_mass needs r > 0")
    out = np.zeros_like(r_arr)
    for _, s in lam.sides(side):
        out = out + s.tail(r_arr)
    return float(out) if np.ndim(r) == 0 else out


def partial_moment(Q, p: float, region: tuple[float, float] = (0.0, INF), *,
                   side: str = "both", method: str = "auto",
                   rtol: float = quad.DEFAULT_RTOL) -> quad.Integral:
    """``int_{lo < |z| <= hi} |z|^p Q(dz)`` (or ``x^p`` for a mixing measure).

    ``method="auto"`` uses the closed forms; ``"quadrature"`` integrates the
    density numerically with divergence detection (atoms are summed exactly).
    The result names the endpoint that drives a divergence.
    """
    lo, hi = (float(v) for v in region)
    if hi < lo:
        raise ValueError("region endpoints must be ordered")
    if isinstance(Q, MixingMeasureSpec):
        return Q.moment(p, lo, hi, method=method)
    total = quad.Integral(0.0, True)
    for _, s in Q.sides(side):
        if method == "auto":
            part = s.moment(p, lo, hi)
        elif method == "quadrature":
            part = _quadrature_moment(s, p, lo, hi, rtol)
        else:
            raise ValueError(f"unknown method {method!r}")
        total = total + part
    if not total.convergent:
        total.value = INF
    return total


def _quadrature_moment(s: Side, p, lo, hi, rtol):
    atoms = quad.Integral(sum(m * z ** p for z, m in s.atoms() if lo < z <= hi), True)
    if isinstance(s, AtomSide):
        return atoms
    f = lambda z: np.power(z, p) * s.density(z)
    res = quad.integrate(f, lo, hi, breakpoints=s.breakpoints(), rtol=rtol, names=(Z0, ZINF))
    return res + atoms


def _combine_sides(vals: dict, pick) -> tuple[float, bool]:
    if not vals:
        return None
    best = pick(v for v, _ in vals.values())
    return best, all(att for v, att in vals.values() if v == best)


def bg_index(lam: LevyMeasureSpec, slack: float = DEFAULT_SLACK) -> IndexValue:
    """Blumenthal-Getoor index: the max over sides, with the slack rule applied."""
    per = {name: s.bg() for name, s in lam.sides()}
    if not per:
        return IndexValue(0.0, True, 0.0, {})
    value, attained = _combine_sides(per, max)
    usable = value if attained else min(value + slack, 2.0)
    return IndexValue(value, attained, usable, per)


def tail_index(lam: LevyMeasureSpec, slack: float = DEFAULT_SLACK) -> IndexValue:
    """Tail index: the min over sides, with the slack rule applied."""
    per = {name: s.eta() for name, s in lam.sides()}
    if not per:
        return IndexValue(INF, True, INF, {})
    value, attained = _combine_sides(per, min)
    usable = value if (attained or math.isinf(value)) else max(value - slack, 0.0)
    return IndexValue(value, attained, usable, per)


def c_lambda(a: float, b: float, lam: LevyMeasureSpec) -> float:
    """``|a| + b + int (1 ^ z^2) lambda(dz)``."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    return abs(a) + b + small_large_mass(lam)


def sample_above(lam: LevyMeasureSpec, eps: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. signed jumps from ``lambda`` restricted to ``|z| > eps``."""
    if n == 0:
        return np.empty(0)
    sides = lam.sides()
    masses = np.array([float(s.tail(eps)) for _, s in sides])
    if not np.all(np.isfinite(masses)):
        raise ValueError(f"tail mass above eps={eps} is infinite")
    counts = rng.multinomial(n, masses / masses.sum())
    parts = []
    for (name, s), k in zip(sides, counts):
        if k:
            z = s.sample_above(eps, int(k), rng)
            parts.append(z if name == "pos" else -z)
    return rng.permutation(np.concatenate(parts))


def sample_jumps(lam: LevyMeasureSpec, eps: float, rate_window: float,
                 rng: np.random.Generator) -> np.ndarray:
    """Jumps of a Poisson random measure with intensity ``rate_window * lambda`` above ``eps``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    mass = tail_mass(lam, eps) if not lam.is_zero else 0.0
    if not math.isfinite(mass):
        raise ValueError(f"tail mass above eps={eps} is infinite")
    if rate_window <= 0 or mass == 0:
        return np.empty(0)
    n = rng.poisson(mass * rate_window)
    return sample_above(lam, eps, int(n), rng)


# --------------------------------------------------------------------------
# mixing measures

class MixingMeasureSpec:
    """Mixing measure on ``V = (0, inf)``."""

    family = "mixing"
    lo = 0.0
    hi = INF

    def integrate(self, g: Callable[[np.ndarray], np.ndarray], rtol: float = quad.DEFAULT_RTOL,
                  breakpoints: Sequence[float] = ()) -> quad.Integral:
        """``int g(x) pi(dx)`` for nonnegative vectorized ``g``."""
        raise NotImplementedError

    @property
    def total_mass(self) -> float:
        return self.moment(0.0).value

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.total_mass)

    def moment(self, p, lo=0.0, hi=INF, method="auto") -> quad.Integral:
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator, tilt=None) -> np.ndarray:
        """Draws from ``pi`` (or from ``tilt(x) pi(dx)``), normalized."""
        raise NotImplementedError

    def restrict(self, lo: float, hi: float) -> "MixingMeasureSpec":
        raise NotImplementedError

    def atoms(self) -> list[tuple[float, float]]:
        return []

    def slope(self, g, toward: str) -> float:
        """Shell growth rate of ``int g dpi`` toward 0 or infinity (``-inf`` when no mass there)."""
        return -INF


class FiniteAtoms(MixingMeasureSpec):
    family = "finite-atoms"

    def __init__(self, atoms: Sequence[tuple[float, float]]):
        self._x = np.array([float(x) for x, _ in atoms])
        self._m = np.array([float(m) for _, m in atoms])
        if self._x.size == 0 or np.any(self._x <= 0) or np.any(self._m <= 0):
            raise ValueError("mixing atoms need x > 0 and positive mass")
        self.lo, self.hi = float(self._x.min()), float(self._x.max())

    def atoms(self):
        return list(zip(self._x.tolist(), self._m.tolist()))

    def integrate(self, g, rtol=quad.DEFAULT_RTOL, breakpoints=()):
        vals = np.asarray(g(self._x), dtype=float)
        if np.any(np.isinf(vals) & (self._m > 0)):
            return quad.Integral(INF, False, ["inner"])
        return quad.Integral(float(np.dot(vals, self._m)), True)

    def moment(self, p, lo=0.0, hi=INF, method="auto"):
        sel = (self._x > lo) & (self._x <= hi)
        return quad.Integral(float(np.sum(self._m[sel] * self._x[sel] ** p)), True)

    def sample(self, n, rng, tilt=None):
        w = self._m if tilt is None else self._m * np.asarray(tilt(self._x), dtype=float)
        idx = rng.choice(self._x.size, size=n, p=w / w.sum())
        return self._x[idx]

    def restrict(self, lo, hi):
        keep = [(x, m) for x, m in self.atoms() if lo <= x <= hi]
        return FiniteAtoms(keep)


class DensityMixing(MixingMeasureSpec):
    """Mixing measure with a density ``w`` on ``(lo, hi)``.

    ``p0`` and ``pinf`` declare the power behavior ``w(x) ~ x^p0`` near 0 and
    ``w(x) ~ x^(-pinf)`` near infinity; they are checked numerically.
    """

    family = "density"

    def __init__(self, w: Callable[[np.ndarray], np.ndarray], p0: float, pinf: float,
                 lo: float = 0.0, hi: float = INF, check: bool = True):
        self.w, self.p0, self.pinf = w, float(p0), float(pinf)
        self.lo, self.hi = float(lo), float(hi)
        if check:
            self._check_exponents()

    def _check_exponents(self):
        for p in np.arange(-3.0, 3.01, 0.5):
            g = lambda x, p=p: np.power(x, p)
            if self.lo == 0:
                declared = p + self.p0 > -1
                s = self.slope(g, "zero")
                if math.isfinite(s) and declared != (s < 0) and abs(p + self.p0 + 1) > 0.1:
                    raise ValueError(f"declared near-0 exponent {self.p0} disagrees at p={p}")
            if math.isinf(self.hi):
                declared = p - self.pinf < -1
                s = self.slope(g, "inf")
                if math.isfinite(s) and declared != (s < 0) and abs(p - self.pinf + 1) > 0.1:
                    raise ValueError(f"declared near-inf exponent {self.pinf} disagrees at p={p}")

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > self.lo) & (x < self.hi)
        return np.where(inside, self.w(np.where(inside, x, 1.0)), 0.0)

    def _pivot(self):
        if self.lo > 0:
            return self.lo
        if math.isfinite(self.hi):
            return self.hi
        return 1.0

    def integrate(self, g, rtol=quad.DEFAULT_RTOL, breakpoints=()):
        f = lambda x: g(x) * self.density(x)
        bps = [b for b in breakpoints if self.lo < b < self.hi]
        return quad.integrate(f, self.lo, self.hi, breakpoints=bps, rtol=rtol,
                              pivot=None if self.lo > 0 and math.isfinite(self.hi) else self._pivot(),
                              names=(X0, XINF))

    def moment(self, p, lo=0.0, hi=INF, method="auto"):
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if hi <= lo:
            return quad.Integral(0.0, True)
        return self.restrict(lo, hi).integrate(lambda x: np.power(x, p))

    def slope(self, g, toward):
        if toward == "zero" and self.lo > 0:
            return -INF
        if toward == "inf" and math.isfinite(self.hi):
            return -INF
        return quad.endpoint_slope(lambda x: g(x) * self.density(x), toward)

    def restrict(self, lo, hi):
        return DensityMixing(self.w, self.p0, self.pinf, max(lo, self.lo), min(hi, self.hi), check=False)

    def _grid_sample(self, n, rng, weight):
        # numeric inverse CDF on a log grid (finite mass required)
        lo = self.lo if self.lo > 0 else None
        hi = self.hi if math.isfinite(self.hi) else None
        if lo is None or hi is None:
            raise ValueError("grid sampling needs a bounded support; restrict the measure first")
        x = np.geomspace(lo, hi, 20001)
        dens = weight(x) * self.w(x)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])
        if cdf[-1] <= 0:
            raise ValueError("tilted mixing measure has no mass")
        u = rng.random(n) * cdf[-1]
        return np.interp(u, cdf, x)

    def sample(self, n, rng, tilt=None):
        weight = tilt if tilt is not None else (lambda x: np.ones_like(x))
        return self._grid_sample(n, rng, weight)


class PowerMixing(DensityMixing):
    """Density ``c x^p0`` on ``(lo, hi)``; Lebesgue measure is ``p0 = 0``."""

    family = "power"

    def __init__(self, p0: float, lo: float = 0.0, hi: float = 1.0, c: float = 1.0):
        self.c = float(c)
        pinf = -p0
        super().__init__(lambda x: self.c * np.power(x, p0), p0, pinf, lo, hi, check=False)

    def moment(self, p, lo=0.0, hi=INF, method="auto"):
        lo, hi = max(lo, self.lo), min(hi, self.hi)
        if method == "quadrature":
            return super().moment(p, lo, hi)
        return power_integral(self.c, p + self.p0, lo, hi, names=(X0, XINF))

    def restrict(self, lo, hi):
        return PowerMixing(self.p0, max(lo, self.lo), min(hi, self.hi), self.c)

    def sample_power_tilt(self, n, rng, q: float = 0.0) -> np.ndarray:
        """Exact draws from ``x^q pi(dx)`` normalized."""
        e = self.p0 + q
        side = PowerSide(1.0, -1.0 - e, self.lo, self.hi)
        if not math.isfinite(float(side.tail(self.lo if self.lo > 0 else 0.0))):
            raise ValueError("tilted mixing measure has infinite mass")
        return side.sample_above(self.lo, n, rng)

    def sample(self, n, rng, tilt=None):
        if tilt is None:
            return self.sample_power_tilt(n, rng, 0.0)
        q = getattr(tilt, "power", None)
        if q is not None:
            return self.sample_power_tilt(n, rng, q)
        return super().sample(n, rng, tilt)


class GammaMixing(DensityMixing):
    """``mass * Gamma(shape, rate)`` probability density."""

    family = "gamma-density"

    def __init__(self, shape: float, rate: float, mass: float = 1.0):
        if shape <= 0 or rate <= 0 or mass <= 0:
            raise ValueError("gamma mixing needs positive shape, rate and mass")
        self.shape, self.rate, self.mass = float(shape), float(rate), float(mass)
        norm = mass * rate ** shape / math.gamma(shape)
        super().__init__(lambda x: norm * np.power(x, shape - 1.0) * np.exp(-rate * x),
                         shape - 1.0, INF, 0.0, INF, check=False)

    def moment(self, p, lo=0.0, hi=INF, method="auto"):
        if method == "quadrature":
            return super().moment(p, lo, hi)
        side = TemperedSide(self.mass * self.rate ** self.shape / math.gamma(self.shape),
                            -self.shape, self.rate)
        res = side.moment(p, lo, hi)
        if not res.convergent:
            res.divergent_at = [X0]
        return res

    def restrict(self, lo, hi):
        if lo <= 0 and math.isinf(hi):
            return self
        return DensityMixing(self.w, self.p0, self.pinf, max(lo, 0.0), hi, check=False)

    def sample(self, n, rng, tilt=None):
        q = 0.0 if tilt is None else getattr(tilt, "power", None)
        if q is None:
            return self.restrict(1e-12, 1e4 / self.rate)._grid_sample(n, rng, tilt)
        if self.shape + q <= 0:
            raise ValueError("tilted gamma mixing has infinite mass")
        return rng.gamma(self.shape + q, 1.0 / self.rate, n)


class PowerTilt:
    """Tilt ``x -> x^power`` tagged so samplers can draw from it exactly."""

    def __init__(self, power: float, const: float = 1.0):
        self.power = float(power)
        self.const = float(const)

    def __call__(self, x):
        return self.const * np.power(x, self.power)


def mixing_measure(family: str, **par) -> MixingMeasureSpec:
    """Build a mixing measure from a tagged parameter record.

    Families and keys::

        finite-atoms   atoms=[(x, mass), ...]
        power          exponent (p0), support=(lo, hi), scale=1
        uniform        support=(lo, hi), scale=1
        gamma-density  shape, rate, mass=1
    """
    if family == "finite-atoms":
        return FiniteAtoms([(float(x), float(m)) for x, m in par["atoms"]])
    if family in ("power", "uniform"):
        lo, hi = (float(v) for v in par.get("support", (0.0, 1.0)))
        p0 = float(par.get("exponent", 0.0)) if family == "power" else 0.0
        return PowerMixing(p0, lo, hi, float(par.get("scale", 1.0)))
    if family == "gamma-density":
        return GammaMixing(float(par["shape"]), float(par["rate"]), float(par.get("mass", 1.0)))
    raise ValueError(f"unknown mixing family {family!r}")
