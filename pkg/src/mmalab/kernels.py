"""Kernel families and the assumption checkers.

Every supported kernel has the scale form ``f(x, v) = phi(v / sigma(x))`` for
``v >= 0``, so all derived objects follow from a standardized shape ``phi``:

* ``f1(x) = sigma F1``, with ``F1 = int phi``
* ``f2(x, u) = sigma F2(u / sigma)``, with ``F2(w) = int_w^inf phi``
* ``f2_inverse(x, w) = sigma F2inv(w / sigma)``
* ``int_a^b f2(x, u) du = sigma^2 (G(a/sigma) - G(b/sigma))``, with ``G(w) = int_w^inf F2``
* ``int int (int_0^t f(x, u - s) du)^2 ds = sigma^3 H(t / sigma)`` (Gaussian variance)

Shapes: exponential (supOU, OU), gamma (supfOU, gamma kernel), box (trawl,
box) and triangle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import quadrature as quad
from .measures import FiniteAtoms, MixingMeasureSpec, PowerMixing
from .special import gammainc_lower, gammainc_upper, gammaincc_inv

INF = math.inf


# --------------------------------------------------------------------------
# standardized shapes

class Shape:
    F1 = 1.0
    mode = 0.0          # argmax of phi
    support_end = INF   # phi vanishes beyond this point

    def phi(self, w):
        raise NotImplementedError

    def F2(self, w):
        raise NotImplementedError

    def F2inv(self, y):
        raise NotImplementedError

    def G(self, w):
        raise NotImplementedError

    def H(self, tau):
        raise NotImplementedError

    def breakpoints(self) -> list[float]:
        return [] if math.isinf(self.support_end) else [self.support_end]

    def mass(self, w, tau):
        """``int_w^(w+tau) phi = F2(w) - F2(w + tau)``."""
        w = np.asarray(w, dtype=float)
        return np.maximum(self.F2(w) - self.F2(w + tau), 0.0)

    @property
    def nonincreasing(self) -> bool:
        return self.mode == 0.0

    @property
    def peak(self) -> float:
        return float(self.phi(np.array([self.mode]))[0]) if self.mode > 0 else INF


class ExpShape(Shape):
    def phi(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w >= 0, np.exp(-np.maximum(w, 0.0)), 0.0)

    @property
    def peak(self):
        return 1.0

    def F2(self, w):
        return np.exp(-np.maximum(np.asarray(w, dtype=float), 0.0))

    def F2inv(self, y):
        return -np.log(y)

    def G(self, w):
        return np.exp(-np.asarray(w, dtype=float))

    def mass(self, w, tau):
        # avoids cancellation for tau << 1
        w = np.maximum(np.asarray(w, dtype=float), 0.0)
        return -np.exp(-w) * np.expm1(-np.asarray(tau, dtype=float))

    def H(self, tau):
        tau = np.asarray(tau, dtype=float)
        small = tau < 1e-3
        series = tau ** 2 / 2 - tau ** 3 / 6 + tau ** 4 / 24
        return np.where(small, series, tau + np.expm1(-np.where(small, 1.0, tau)))


class BoxShape(Shape):
    support_end = 1.0

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        return ((w >= 0) & (w <= 1)).astype(float)

    @property
    def peak(self):
        return 1.0

    def F2(self, w):
        return np.clip(1.0 - np.maximum(np.asarray(w, dtype=float), 0.0), 0.0, 1.0)

    def F2inv(self, y):
        return 1.0 - np.asarray(y, dtype=float)

    def G(self, w):
        return 0.5 * np.clip(1.0 - np.asarray(w, dtype=float), 0.0, None) ** 2

    def H(self, tau):
        tau = np.asarray(tau, dtype=float)
        return np.where(tau < 1, tau ** 2 - tau ** 3 / 3, tau - 1.0 / 3.0)


class TriangleShape(Shape):
    F1 = 0.5
    support_end = 1.0

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        return np.where(w >= 0, np.clip(1.0 - w, 0.0, None), 0.0)

    @property
    def peak(self):
        return 1.0

    def F2(self, w):
        return 0.5 * np.clip(1.0 - np.maximum(np.asarray(w, dtype=float), 0.0), 0.0, None) ** 2

    def F2inv(self, y):
        return 1.0 - np.sqrt(2.0 * np.asarray(y, dtype=float))

    def G(self, w):
        return np.clip(1.0 - np.asarray(w, dtype=float), 0.0, None) ** 3 / 6.0

    def H(self, tau):
        # 2 int_0^m (tau - u) rho(u) du with rho(u) = (2 - 3u + u^3) / 6, m = min(tau, 1)
        tau = np.asarray(tau, dtype=float)
        m = np.minimum(tau, 1.0)
        a = 2 * m - 1.5 * m ** 2 + m ** 4 / 4
        b = m ** 2 - m ** 3 + m ** 5 / 5
        return (tau * a - b) / 3.0


class GammaShape(Shape):
    """``phi(w) = w^(kappa-1) e^-w / Gamma(kappa)``."""

    def __init__(self, kappa: float):
        if kappa <= 0:
            raise ValueError("kappa must be positive")
        self.kappa = float(kappa)
        self.mode = max(self.kappa - 1.0, 0.0)

    def phi(self, w):
        w = np.asarray(w, dtype=float)
        k = self.kappa
        pos = w > 0
        ww = np.where(pos, w, 1.0)
        val = np.exp((k - 1.0) * np.log(ww) - ww - math.lgamma(k))
        at0 = INF if k < 1 else (1.0 if k == 1 else 0.0)
        return np.where(pos, val, np.where(w == 0, at0, 0.0))

    @property
    def peak(self):
        k = self.kappa
        if k < 1:
            return INF
        if k == 1:
            return 1.0
        return math.exp((k - 1) * math.log(k - 1) - (k - 1) - math.lgamma(k))

    def F2(self, w):
        return gammainc_upper(self.kappa, np.maximum(np.asarray(w, dtype=float), 0.0))

    def F2inv(self, y):
        return gammaincc_inv(self.kappa, y)

    def G(self, w):
        w = np.maximum(np.asarray(w, dtype=float), 0.0)
        k = self.kappa
        fin = np.isfinite(w)
        out = np.zeros_like(w)
        wf = w[fin]
        out[fin] = k * gammainc_upper(k + 1.0, wf) - wf * gammainc_upper(k, wf)
        return np.maximum(out, 0.0)

    @cached_property
    def _h_table(self):
        # H on a log grid; beyond tau_star the linear asymptote is exact to rounding
        k = self.kappa
        tau_star = float(gammaincc_inv(k, np.array([1e-17]))[0]) + 5.0
        sq = quad.integrate(lambda y: self.F2(y) ** 2, 0.0, INF, pivot=1.0).value
        const = -2.0 * self.G(np.array([0.0]))[0] + 2.0 * sq
        taus = np.geomspace(1e-6, tau_star, 240)
        vals = np.array([self._h_direct(t) for t in taus])
        spline = CubicSpline(np.log(taus), np.log(vals))
        return taus, vals, const, tau_star, spline

    def _h_direct(self, tau: float) -> float:
        one = quad.integrate(lambda y: (self.F2(y) - self.F2(y + tau)) ** 2, 0.0, INF,
                             pivot=max(tau, 1.0)).value
        two = quad.integrate(lambda y: gammainc_lower(self.kappa, y) ** 2, 0.0, tau).value
        return one + two

    def H(self, tau):
        tau = np.asarray(tau, dtype=float)
        taus, vals, const, tau_star, spline = self._h_table
        out = np.empty_like(tau)
        big = tau >= tau_star
        out[big] = tau[big] + const
        small = ~big & (tau > 0)
        lt = np.log(np.maximum(tau[small], 1e-300))
        lx, ly = np.log(taus), np.log(vals)
        s0 = float(spline(lx[0], 1))
        inner = spline(np.maximum(lt, lx[0]))
        below = lt < lx[0]
        inner[below] = ly[0] + s0 * (lt[below] - lx[0])
        out[small] = np.exp(inner)
        out[tau <= 0] = 0.0
        return out


# --------------------------------------------------------------------------
# trawl functions

class Psi:
    """Non-increasing integrable trawl function with ``psi(0) < inf``."""

    psi0 = 1.0

    def __call__(self, v):
        raise NotImplementedError

    def inverse_left(self, x):
        """``psi^<-(x-) = sup{u : psi(u) >= x}`` for ``0 < x <= psi(0)``."""
        raise NotImplementedError

    def record(self) -> dict:
        raise NotImplementedError


class ExpPsi(Psi):
    def __init__(self, rate: float = 1.0, psi0: float = 1.0):
        self.rate, self.psi0 = float(rate), float(psi0)

    def __call__(self, v):
        return self.psi0 * np.exp(-self.rate * np.asarray(v, dtype=float))

    def inverse_left(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x <= self.psi0)
        return np.where(inside, np.log(self.psi0 / np.where(inside, x, 1.0)) / self.rate, 0.0)

    def record(self):
        return {"family": "exp", "rate": self.rate, "psi0": self.psi0}


class PowerPsi(Psi):
    """``psi(v) = psi0 (1 + v/delta)^-H`` with ``H > 1``."""

    def __init__(self, H: float, delta: float = 1.0, psi0: float = 1.0):
        if H <= 1:
            raise ValueError("power trawl needs H > 1 to be integrable")
        self.H, self.delta, self.psi0 = float(H), float(delta), float(psi0)

    def __call__(self, v):
        return self.psi0 * np.power(1.0 + np.asarray(v, dtype=float) / self.delta, -self.H)

    def inverse_left(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x > 0) & (x <= self.psi0)
        xx = np.where(inside, x, 1.0)
        return np.where(inside, self.delta * (np.power(self.psi0 / xx, 1.0 / self.H) - 1.0), 0.0)

    def record(self):
        return {"family": "power", "H": self.H, "delta": self.delta, "psi0": self.psi0}


class TablePsi(Psi):
    """Piecewise-linear trawl function through ``(v_i, psi_i)`` ending at 0."""

    def __init__(self, v: Sequence[float], psi: Sequence[float]):
        v = np.asarray(v, dtype=float)
        p = np.asarray(psi, dtype=float)
        if v.size < 2 or v[0] != 0 or np.any(np.diff(v) <= 0):
            raise ValueError("table must start at v=0 with increasing abscissae")
        if np.any(np.diff(p) > 0) or p[-1] != 0 or p[0] <= 0:
            raise ValueError("table must be non-increasing, positive at 0 and end at 0")
        self.v, self.p = v, p
        self.psi0 = float(p[0])

    def __call__(self, v):
        return np.interp(np.asarray(v, dtype=float), self.v, self.p, right=0.0)

    def inverse_left(self, x):
        x = np.asarray(x, dtype=float)
        # number of knots with psi_i >= x (a prefix, as psi is non-increasing)
        cnt = np.searchsorted(-self.p, -x, side="right")
        i = np.clip(cnt - 1, 0, self.v.size - 2)
        p_i, p_n = self.p[i], self.p[i + 1]
        v_i, v_n = self.v[i], self.v[i + 1]
        drop = np.where(p_i > p_n, p_i - p_n, 1.0)
        u = v_i + (p_i - x) * (v_n - v_i) / drop
        u = np.where(p_n >= x, v_n, u)
        inside = (x > 0) & (x <= self.psi0)
        return np.where(inside, u, 0.0)

    def record(self):
        return {"family": "table", "v": self.v.tolist(), "psi": self.p.tolist()}

    @classmethod
    def from_csv(cls, path) -> "TablePsi":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        try:
            pts = [(float(a), float(b)) for a, b in rows]
        except ValueError:
            pts = [(float(a), float(b)) for a, b in rows[1:]]
        v, p = zip(*pts)
        return cls(v, p)


# --------------------------------------------------------------------------
# kernels

class KernelSpec:
    """Causal kernel ``f(x, v)`` of scale form with derived ``f1``, ``f2``, ``f2_inverse``."""

    variant = "kernel"
    is_ma = False

    def __init__(self, shape: Shape):
        self.shape = shape

    # scale function and mixing domain
    def sigma(self, x):
        raise NotImplementedError

    def domain(self) -> tuple[float, float]:
        return (0.0, INF)

    def default_mixing(self) -> MixingMeasureSpec | None:
        return None

    def probe_x(self) -> np.ndarray:
        return np.geomspace(1e-3, 1e3, 7)

    def record(self) -> dict:
        return {"variant": self.variant}

    def sigma_power(self) -> float | None:
        """``q`` when ``sigma(x) = const * x^q`` (enables exact tilted sampling)."""
        return None

    # evaluations
    def f(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        s = self.sigma(x)
        pos = (v >= 0) & (s > 0)
        w = np.where(pos, v / np.where(s > 0, s, 1.0), -1.0)
        return np.where(pos, self.shape.phi(w), 0.0)

    def f1(self, x):
        return self.shape.F1 * self.sigma(np.asarray(x, dtype=float))

    def f2(self, x, u):
        s = self.sigma(np.asarray(x, dtype=float))
        u = np.asarray(u, dtype=float)
        if np.any(u < 0):
            raise ValueError("f2 needs u >= 0")
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, s * self.shape.F2(u / safe), 0.0)

    def f2_inverse(self, x, w, rtol: float = 1e-12):
        """Generalized inverse ``inf{u >= 0 : f2(x, u) <= w}`` for ``0 < w <= f1(x)``."""
        x = np.asarray(x, dtype=float)
        w = np.asarray(w, dtype=float)
        s = self.sigma(x)
        top = self.shape.F1 * s
        if np.any(w <= 0):
            raise ValueError("f2_inverse needs w > 0 (w = 0 maps to +inf)")
        if np.any(w > top * (1 + rtol)):
            raise ValueError("f2_inverse needs w <= f1(x)")
        y = np.minimum(w / s, self.shape.F1)
        y_arr, s_arr = np.broadcast_arrays(y, s)
        return s_arr * self.shape.F2inv(np.array(y_arr, dtype=float))

    def tail_integral(self, x, a, b=INF):
        """``int_a^b f2(x, u) du`` for ``0 <= a <= b``."""
        s = self.sigma(np.asarray(x, dtype=float))
        safe = np.where(s > 0, s, 1.0)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        val = s * s * (self.shape.G(a / safe) - self.shape.G(b / safe))
        return np.where(s > 0, np.maximum(val, 0.0), 0.0)

    def fubini_majorant(self, x, s):
        """Majorant ``g`` of ``t^-1 int_0^t f(x, u + s) du`` (non-increasing kernels: ``g = f``)."""
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        if self.shape.nonincreasing:
            return self.f(x, s)
        if math.isfinite(self.shape.peak):
            plateau = s <= self.shape.mode * self.sigma(x)
            return np.where(plateau, self.shape.peak, self.f(x, s))
        raise NotImplementedError(f"no majorant known for {self.variant}")

    def variance_profile(self, x, t):
        """``int int (int_0^t f(x, u - s) du)^2 ds`` over s, per unit Gaussian rate."""
        s = self.sigma(np.asarray(x, dtype=float))
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, s ** 3 * self.shape.H(np.asarray(t, dtype=float) / safe), 0.0)

    def breakpoints(self, x) -> list[float]:
        """Points in v where ``f(x, .)`` has kinks or jumps."""
        s = float(np.ravel(self.sigma(np.asarray(x, dtype=float)))[0])
        return [s * b for b in self.shape.breakpoints()]


class SupOU(KernelSpec):
    variant = "supou"

    def __init__(self):
        super().__init__(ExpShape())

    def sigma(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 / x

    def sigma_power(self):
        return -1.0


class SupfOU(KernelSpec):
    variant = "supfou"

    def __init__(self, kappa: float):
        super().__init__(GammaShape(kappa))
        self.kappa = float(kappa)

    def sigma(self, x):
        return 1.0 / np.asarray(x, dtype=float)

    def sigma_power(self):
        return -1.0

    def record(self):
        return {"variant": self.variant, "kappa": self.kappa}


class Trawl(KernelSpec):
    variant = "trawl"

    def __init__(self, psi: Psi):
        super().__init__(BoxShape())
        self.psi = psi

    def sigma(self, x):
        return self.psi.inverse_left(np.asarray(x, dtype=float))

    def f(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        vv = np.maximum(v, 0.0)
        return np.where((v >= 0) & (x > 0) & (x <= self.psi(vv)), 1.0, 0.0)

    def domain(self):
        return (0.0, self.psi.psi0)

    def default_mixing(self):
        return PowerMixing(0.0, 0.0, self.psi.psi0)

    def probe_x(self):
        return self.psi.psi0 * np.array([1e-3, 0.01, 0.1, 0.3, 0.5, 0.9, 1.0])

    def record(self):
        return {"variant": self.variant, "psi": self.psi.record()}


class _MA(KernelSpec):
    is_ma = True

    def sigma(self, x):
        return np.full(np.shape(x), self.scale, dtype=float)

    def domain(self):
        return (1.0, 1.0)

    def default_mixing(self):
        return FiniteAtoms([(1.0, 1.0)])

    def probe_x(self):
        return np.array([1.0])

    def sigma_power(self):
        return 0.0


class MAExponential(_MA):
    variant = "ma-exponential"

    def __init__(self, nu: float):
        super().__init__(ExpShape())
        self.nu = float(nu)
        self.scale = 1.0 / self.nu

    def record(self):
        return {"variant": self.variant, "nu": self.nu}


class MAGamma(_MA):
    variant = "ma-gamma"

    def __init__(self, nu: float, kappa: float):
        if kappa <= 1:
            raise ValueError("the gamma kernel needs kappa > 1")
        super().__init__(GammaShape(kappa))
        self.nu, self.kappa = float(nu), float(kappa)
        self.scale = 1.0 / self.nu

    def record(self):
        return {"variant": self.variant, "nu": self.nu, "kappa": self.kappa}


class MABox(_MA):
    variant = "ma-box"

    def __init__(self, q: float):
        super().__init__(BoxShape())
        self.q = self.scale = float(q)

    def record(self):
        return {"variant": self.variant, "q": self.q}


class MATriangle(_MA):
    variant = "ma-triangle"

    def __init__(self, q: float):
        super().__init__(TriangleShape())
        self.q = self.scale = float(q)

    def record(self):
        return {"variant": self.variant, "q": self.q}


def make_psi(spec: dict) -> Psi:
    fam = spec.get("family", "exp")
    if fam == "exp":
        return ExpPsi(float(spec.get("rate", 1.0)), float(spec.get("psi0", 1.0)))
    if fam == "power":
        return PowerPsi(float(spec["H"]), float(spec.get("delta", 1.0)), float(spec.get("psi0", 1.0)))
    if fam == "table":
        if "csv" in spec:
            return TablePsi.from_csv(spec["csv"])
        return TablePsi(spec["v"], spec["psi"])
    raise ValueError(f"unknown trawl function family {fam!r}")


def make_kernel(variant: str, **par) -> KernelSpec:
    """Build a kernel from a tagged record, e.g. ``make_kernel("supfou", kappa=1.5)``."""
    if variant == "supou":
        return SupOU()
    if variant == "supfou":
        return SupfOU(float(par["kappa"]))
    if variant == "trawl":
        return Trawl(make_psi(par.get("psi", {"family": "exp"})))
    if variant == "ma-exponential":
        return MAExponential(float(par.get("nu", 1.0)))
    if variant == "ma-gamma":
        return MAGamma(float(par.get("nu", 1.0)), float(par["kappa"]))
    if variant == "ma-box":
        return MABox(float(par["q"]))
    if variant == "ma-triangle":
        return MATriangle(float(par["q"]))
    raise ValueError(f"unknown kernel variant {variant!r}")


# --------------------------------------------------------------------------
# assumption checkers

@dataclass
class AssumptionReport:
    holds: bool
    N: int | None = None
    K: float | None = None
    eps: float | None = None
    c_p: dict = field(default_factory=dict)
    worst: dict = field(default_factory=dict)
    margin: float | None = None
    failure: str | None = None
    source: str = "grid"

    def as_dict(self) -> dict:
        return {
            "holds": self.holds, "N": self.N, "K": self.K, "eps": self.eps,
            "c_p": {str(k): v for k, v in self.c_p.items()}, "worst": self.worst,
            "margin": self.margin, "failure": self.failure, "source": self.source,
        }


def known_witness(k: KernelSpec) -> tuple[int, float, float] | None:
    """Closed-form ``(N, K, eps)`` for the inverse-growth bound (MA kernels: in units of ``I_f``)."""
    if isinstance(k.shape, ExpShape):
        base = (1, 1.0, 0.2)
    elif isinstance(k.shape, BoxShape):
        base = (1, 2.0, 0.5)
    else:
        return None
    if k.is_ma:
        return base[0], base[1] * float(k.f1(np.array([1.0]))[0]), base[2]
    return base


def _inverse_ratio(k: KernelSpec, x_grid, u_grid) -> np.ndarray:
    # f2^<-(x, u f1(x)) / f1(x), or f2^<-(I_f u) for MA kernels; shape (x, u)
    x = np.asarray(x_grid, dtype=float)[:, None]
    u = np.asarray(u_grid, dtype=float)[None, :]
    f1 = k.f1(x)
    inv = k.f2_inverse(np.broadcast_to(x, (x.shape[0], u.shape[1])), u * f1)
    return inv if k.is_ma else inv / f1


def _grows_at_small_end(r: np.ndarray, npts: int = 5) -> bool:
    # ratio still increasing over the smallest-u probe points
    head = r[:npts]
    return bool(np.all(np.diff(head) < 0)) and head[0] > head[-1] * (1 + 1e-9)


def check_assumption1(k: KernelSpec, x_grid=None, u_grid=None, *, k_budget: float = 1e3,
                      n_max: int = 8, eps_grid=None) -> AssumptionReport:
    """Grid certificate for ``f2^<-(x, u f1(x)) <= K u^(eps-1) f1(x)`` on ``0 < u <= 1/N``.

    Known witnesses are verified first; otherwise ``(N, eps)`` are scanned and
    ``K`` fitted, preferring the largest ``eps``.
    """
    x_grid = k.probe_x() if x_grid is None else np.asarray(x_grid, dtype=float)
    x_grid = x_grid[k.f1(x_grid) > 0]
    u_all = np.geomspace(1e-12, 1.0, 481) if u_grid is None else np.sort(np.asarray(u_grid, dtype=float))
    eps_grid = np.arange(0.95, 0.0, -0.05) if eps_grid is None else eps_grid

    def verify(N, K, eps):
        u = u_all[u_all <= 1.0 / N]
        lhs = _inverse_ratio(k, x_grid, u)
        rhs = K * u[None, :] ** (eps - 1.0)
        rel = lhs / rhs
        worst = np.unravel_index(np.argmax(rel), rel.shape)
        grows = any(_grows_at_small_end(row) for row in rel)
        return float(rel.max()), grows, {"x": float(x_grid[worst[0]]), "u": float(u[worst[1]])}

    wit = known_witness(k)
    if wit is not None:
        N, K, eps = wit
        top, grows, where = verify(N, K, eps)
        if top < 1 and not grows:
            return AssumptionReport(True, N, K, eps, worst=where, margin=1 - top, source="closed-form")
    best_fail = None
    for N in [2 ** j for j in range(int(math.log2(n_max)) + 1)]:
        u = u_all[u_all <= 1.0 / N]
        lhs = _inverse_ratio(k, x_grid, u)
        for eps in eps_grid:
            scaled = lhs * u[None, :] ** (1.0 - eps)
            grows = any(_grows_at_small_end(row) for row in scaled)
            K_fit = float(scaled.max())
            if grows or K_fit * 1.25 > k_budget:
                idx = np.unravel_index(np.argmax(scaled), scaled.shape)
                cand = {"x": float(x_grid[idx[0]]), "u": float(u[idx[1]]), "eps": float(eps),
                        "K_needed": K_fit, "unbounded": grows}
                if best_fail is None or (grows and not best_fail["unbounded"]):
                    best_fail = cand
                continue
            K = 1.25 * K_fit
            idx = np.unravel_index(np.argmax(scaled), scaled.shape)
            return AssumptionReport(True, N, K, float(eps), worst={"x": float(x_grid[idx[0]]), "u": float(u[idx[1]])},
                                    margin=1 - K_fit / K, source="search")
    return AssumptionReport(False, worst=best_fail or {}, margin=None,
                            failure=f"no witness with K <= {k_budget:g}; bound violated near u={best_fail['u']:.3g}")


def decay_bound_holds(k: KernelSpec, N: int, K: float, x_grid=None, n_s: int = 200) -> bool:
    """Check ``f2(x, s) <= K s^-1 f1(x)^2`` for ``s >= K N f1(x)`` on probe grids."""
    x_grid = k.probe_x() if x_grid is None else x_grid
    for x in np.atleast_1d(x_grid):
        f1 = float(k.f1(np.array([x]))[0])
        if f1 == 0:
            continue
        scale = 1.0 if k.is_ma else f1
        s = K * N * scale * np.geomspace(1.0, 1e6, n_s)
        lhs = k.f2(np.full_like(s, x), s)
        rhs = K * f1 * scale / s if not k.is_ma else K * f1 / s
        if np.any(lhs > rhs * (1 + 1e-12)):
            return False
    return True


def _composite_gl(func, edges) -> float:
    """Composite 20-point Gauss-Legendre over consecutive ``edges`` (one vector call)."""
    e = np.unique(np.asarray(edges, dtype=float))
    half = 0.5 * np.diff(e)[:, None]
    mid = 0.5 * (e[1:] + e[:-1])[:, None]
    nodes = mid + half * quad._GL_NODES[None, :]
    vals = func(nodes.ravel()).reshape(nodes.shape)
    return float(np.sum(half * vals * quad._GL_WEIGHTS[None, :]))


def _w_max(shape: Shape) -> float:
    # standardized point beyond which F2 is below 1e-30
    if math.isfinite(shape.support_end):
        return shape.support_end
    if isinstance(shape, GammaShape):
        return float(gammaincc_inv(shape.kappa, np.array([1e-30]))[0]) + 1.0
    return 70.0


def _int1(k, x, t, p):
    # int_0^inf (f2(x,u) - f2(x,t+u))^p du
    xa = np.array([x])
    s = float(k.sigma(xa)[0])
    kinks = k.breakpoints(xa)
    top = s * _w_max(k.shape)
    edges = [0.0] + list(np.geomspace(s * 1e-16, top, 361)) + [c for c in kinks + [b - t for b in kinks] if 0 < c < top]
    g = lambda u: np.maximum(k.f2(np.full_like(u, x), u) - k.f2(np.full_like(u, x), u + t), 0.0) ** p
    return _composite_gl(g, edges)


def _int2(k, x, t, p):
    # int_0^t (f1(x) - f2(x,u))^p du
    xa = np.array([x])
    f1 = float(k.f1(xa)[0])
    edges = [0.0] + list(np.geomspace(t * 1e-16, t, 321)) + [b for b in k.breakpoints(xa) if 0 < b < t]
    g = lambda u: np.maximum(f1 - k.f2(np.full_like(u, x), u), 0.0) ** p
    return _composite_gl(g, edges)


def _unbounded_end(r: np.ndarray, limit: float, npts: int = 6) -> str | None:
    head, tail = r[:npts], r[-npts:]
    if np.all(np.diff(head) < 0) and head[0] > limit:
        return "t→0"
    if np.all(np.diff(tail) > 0) and tail[-1] > limit:
        return "t→∞"
    return None


def check_assumption2(k: KernelSpec, p_grid=(1.0, 1.5, 2.0), t_grid=None, x_grid=None,
                      *, limit: float = 1e3) -> AssumptionReport:
    """Grid certificate for both moment bounds of the kernel increments.

    ``t_grid`` is relative to ``f1(x)``; ratios are
    ``int1 / ((t ^ f1)^p f1)`` (MA kernels: ``int1 / (t ^ f1)^p``) and
    ``int2 / ((t ^ f1)^p t)``. A ratio growing monotonically toward a grid end
    past ``limit`` marks the bound as unbounded there.
    """
    x_grid = k.probe_x()[[0, len(k.probe_x()) // 2, -1]] if x_grid is None else np.atleast_1d(x_grid)
    rel_t = np.geomspace(1e-8, 1e4, 25) if t_grid is None else np.asarray(t_grid, dtype=float)
    c_p: dict = {}
    worst = {"ratio": -INF}
    failure = None
    for p in p_grid:
        c1 = c2 = 0.0
        for x in x_grid:
            f1 = float(k.f1(np.array([x]))[0])
            if f1 == 0:
                continue
            ts = rel_t * f1
            den = np.minimum(ts, f1) ** p
            r1 = np.array([_int1(k, x, t, p) for t in ts]) / (den if k.is_ma else den * f1)
            r2 = np.array([_int2(k, x, t, p) for t in ts]) / (den * ts)
            for name, r in (("int1", r1), ("int2", r2)):
                end = _unbounded_end(r, limit)
                i = int(np.argmax(r))
                if r[i] > worst["ratio"]:
                    worst = {"ratio": float(r[i]), "x": float(x), "t": float(ts[i]), "p": float(p), "bound": name}
                if end and failure is None:
                    failure = f"{name} ratio unbounded as {end} (p={p:g}, x={x:g})"
                    j = 0 if end == "t→0" else len(ts) - 1
                    fail_at = {"ratio": float(r[j]), "x": float(x), "t": float(ts[j]), "p": float(p),
                               "bound": name, "location": end}
            c1, c2 = max(c1, float(r1.max())), max(c2, float(r2.max()))
        c_p[float(p)] = {"int1": c1, "int2": c2}
    holds = failure is None
    if not holds:
        worst = fail_at
    margin = None
    if holds:
        top = max(max(v.values()) for v in c_p.values())
        margin = 1.0 - top / limit
    return AssumptionReport(holds, c_p=c_p, worst=worst, margin=margin, failure=failure)
