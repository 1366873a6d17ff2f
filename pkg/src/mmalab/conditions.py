"""Integral conditions, model indices and the growth-rate classification.

All kernels have the scale form ``f(x, v) = phi(v / sigma(x))``, so any
integral of ``G(f(x, s))`` over ``s`` factorizes as
``sigma(x) * int G(phi(w)) dw``. The existence and Fubini integrals are
evaluated in that form: a one-dimensional integral over the standardized
shape times ``int sigma dpi``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import quadrature as quad
from .kernels import KernelSpec
from .measures import (
    DEFAULT_SLACK, INF, X0, XINF, Z0, ZINF, AtomSide, FiniteAtoms, GammaMixing, IndexValue,
    LevyMeasureSpec, LogParetoSide, MixingMeasureSpec, PowerMixing, PowerSide, SumSide,
    bg_index, partial_moment, tail_index,
)

V0_NAME, VINF_NAME = "v→0", "v→∞"
ALPHA_SCAN_MAX = 20.0


@dataclass
class ConditionReport:
    """Value of a nonnegative integral with its divergence diagnosis."""

    value: float
    convergent: bool
    divergent_at: list = field(default_factory=list)
    error: float = 0.0
    terms: dict = field(default_factory=dict)

    @classmethod
    def of(cls, res: quad.Integral, terms: dict | None = None) -> "ConditionReport":
        return cls(res.value if res.convergent else INF, res.convergent,
                   list(res.divergent_at), res.error, terms or {})

    def as_dict(self) -> dict:
        return {
            "value": self.value if self.convergent else None,
            "convergent": self.convergent,
            "divergent_at": self.divergent_at,
            "error": self.error,
            "terms": {k: v.as_dict() for k, v in self.terms.items()},
        }


def _product(a: quad.Integral, b: quad.Integral) -> quad.Integral:
    # 0 * inf = 0: an empty factor switches the term off
    if (a.convergent and a.value == 0) or (b.convergent and b.value == 0):
        return quad.Integral(0.0, True)
    if a.convergent and b.convergent:
        return quad.Integral(a.value * b.value, True, [], a.error * abs(b.value) + b.error * abs(a.value))
    return quad.Integral(INF, False, a.divergent_at + [d for d in b.divergent_at if d not in a.divergent_at])


def _integrate_pi(pi: MixingMeasureSpec, g, breakpoints=(), rtol=quad.DEFAULT_RTOL) -> quad.Integral:
    try:
        res = pi.integrate(g, rtol=rtol, breakpoints=breakpoints)
    except quad.InfiniteIntegrand as exc:
        return quad.Integral(INF, False, [exc.where])
    if not res.convergent:
        res.value = INF
    return res


def _f1(k: KernelSpec, x) -> np.ndarray:
    return np.asarray(k.f1(np.asarray(x, dtype=float)), dtype=float)


def _level_points(k: KernelSpec, pi: MixingMeasureSpec, levels) -> list[float]:
    """Points of the mixing support where ``f1`` crosses the given levels (``f1`` is monotone)."""
    if isinstance(pi, FiniteAtoms) or k.is_ma:
        return []
    lo = pi.lo if pi.lo > 0 else 1e-300
    hi = pi.hi if math.isfinite(pi.hi) else 1e300
    a, b = math.log(lo), math.log(hi)
    fa, fb = float(_f1(k, [lo])[0]), float(_f1(k, [hi])[0])
    out = []
    for lev in levels:
        if not (min(fa, fb) < lev < max(fa, fb)):
            continue
        l, h = a, b
        for _ in range(200):
            m = 0.5 * (l + h)
            fm = float(_f1(k, [math.exp(m)])[0])
            if (fm > lev) == (fa > lev):
                l = m
            else:
                h = m
            if h - l < 1e-13 * max(1.0, abs(m)):
                break
        out.append(math.exp(0.5 * (l + h)))
    return sorted(out)


def _z_breaks(lam: LevyMeasureSpec) -> list[float]:
    pts = {abs(z) for z, _ in lam.signed_atoms()}
    for _, s in lam.sides():
        pts.update(s.breakpoints())
    return sorted(p for p in pts if 0 < p < INF)


def _moment_vec(lam: LevyMeasureSpec, p: float, lo, hi) -> np.ndarray:
    """``int_{lo < |z| <= hi} |z|^p lambda(dz)`` elementwise; raises on divergence."""
    lo = np.asarray(lo, dtype=float)
    hi = np.broadcast_to(np.asarray(hi, dtype=float), lo.shape)
    out = np.zeros(lo.shape)
    for _, s in lam.sides():
        val, bad = s.moment_vec(p, lo, hi)
        if bad:
            raise quad.InfiniteIntegrand(bad)
        out = out + val
    return out


def _signed_m1(lam: LevyMeasureSpec, lo: float, hi: float) -> float:
    pos = sum(s.moment(1.0, lo, hi).value for _, s in lam.sides("pos"))
    neg = sum(s.moment(1.0, lo, hi).value for _, s in lam.sides("neg"))
    return pos - neg


# --------------------------------------------------------------------------
# condition (C_gamma)

def evaluate_c_gamma(lam: LevyMeasureSpec, pi: MixingMeasureSpec, k: KernelSpec, gamma: float, *,
                     method: str = "split", rtol: float = quad.DEFAULT_RTOL) -> ConditionReport:
    """``int int |z|^g f1(x)^g 1(|z| f1(x) > 1) lambda(dz) pi(dx)``.

    ``method="split"`` sums the three pieces (slow components with small
    jumps, slow components with big jumps, fast components with big jumps) and
    reports each; ``"direct"`` integrates the inner tail moment in one pass.
    """
    if not 0 <= gamma <= 2:
        raise ValueError("gamma must lie in [0, 2]")
    if lam.is_zero:
        return ConditionReport(0.0, True)
    zb = _z_breaks(lam)
    bps = _level_points(k, pi, [1.0] + [1.0 / z for z in zb])

    def inner(x, lo_cut, hi_cut, where):
        f1 = _f1(k, x)
        out = np.zeros_like(f1)
        sel = where(f1) & (f1 > 0)
        if sel.any():
            r = 1.0 / f1[sel]
            lo = lo_cut(r)
            hi = hi_cut(r)
            out[sel] = f1[sel] ** gamma * _moment_vec(lam, gamma, lo, hi)
        return out

    if method == "direct":
        res = _integrate_pi(pi, lambda x: inner(x, lambda r: r, lambda r: np.full_like(r, INF),
                                                lambda f: f > 0), bps, rtol)
        return ConditionReport.of(res)
    if method != "split":
        raise ValueError(f"unknown method {method!r}")
    small = _integrate_pi(pi, lambda x: inner(x, lambda r: r, lambda r: np.ones_like(r),
                                              lambda f: f > 1), bps, rtol)
    slow_mass = _integrate_pi(pi, lambda x: np.where(_f1(k, x) > 1, _f1(k, x) ** gamma, 0.0), bps, rtol)
    big_z = partial_moment(lam, gamma, (1.0, INF))
    big = _product(slow_mass, big_z)
    fast = _integrate_pi(pi, lambda x: inner(x, lambda r: r, lambda r: np.full_like(r, INF),
                                             lambda f: f <= 1), bps, rtol)
    terms = {"slow_small_jumps": ConditionReport.of(small),
             "slow_big_jumps": ConditionReport.of(big),
             "fast_big_jumps": ConditionReport.of(fast)}
    return ConditionReport.of(small + big + fast, terms)


# --------------------------------------------------------------------------
# indices

@dataclass
class Indices:
    alpha: IndexValue
    beta: IndexValue
    eta: IndexValue

    def as_dict(self) -> dict:
        return {name: {"value": v.value, "attained": v.attained, "usable": v.usable}
                for name, v in (("alpha", self.alpha), ("beta", self.beta), ("eta", self.eta))}


def _alpha_closed_form(pi: MixingMeasureSpec, k: KernelSpec):
    q = k.sigma_power()
    if q is None or q >= 0 or not isinstance(pi, (PowerMixing, GammaMixing)):
        return None
    # f1 = c0 x^q with q < 0 blows up only at x -> 0
    c0 = float(_f1(k, [1.0])[0])
    x1 = c0 ** (-1.0 / q)
    if pi.lo > 0 or pi.lo >= x1:
        return INF, True
    p0 = pi.p0 if isinstance(pi, PowerMixing) else pi.shape - 1.0
    return (p0 + 1.0) / (-q) - 1.0, False


def _alpha_scan(pi: MixingMeasureSpec, k: KernelSpec):
    lo = pi.lo if pi.lo > 0 else 1e-300
    hi = pi.hi if math.isfinite(pi.hi) else 1e300
    ends = []
    if pi.lo == 0 and float(_f1(k, [1e-300])[0]) > 1:
        ends.append("zero")
    if math.isinf(pi.hi) and float(_f1(k, [1e300])[0]) > 1:
        ends.append("inf")
    if not ends:
        return INF, True

    def slope(ap):
        def g(x):
            f1 = _f1(k, x)
            with np.errstate(over="ignore"):
                return np.where(f1 > 1, f1 ** (1.0 + ap), 0.0)
        return max(pi.slope(g, e) for e in ends)

    if slope(ALPHA_SCAN_MAX) < quad.DIVERGENCE_SLOPE:
        return INF, True
    if slope(0.0) >= quad.DIVERGENCE_SLOPE:
        return 0.0, False
    l, h = 0.0, ALPHA_SCAN_MAX
    for _ in range(50):
        m = 0.5 * (l + h)
        # shell slopes are affine in the exponent for regularly varying
        # integrands, so the zero crossing locates the index without bias
        if slope(m) < 0:
            l = m
        else:
            h = m
    a0 = 0.5 * (l + h)
    return a0, slope(a0) < quad.DIVERGENCE_SLOPE


def mixing_index(pi: MixingMeasureSpec, k: KernelSpec, slack: float = DEFAULT_SLACK, *,
                 method: str = "auto") -> IndexValue:
    """``alpha_0 = sup{a >= 0 : int f1^(1+a) 1(f1 > 1) dpi < inf}`` with the attained rule."""
    if k.is_ma or isinstance(pi, FiniteAtoms):
        return IndexValue(INF, True, INF)
    l1 = _integrate_pi(pi, lambda x: _f1(k, x))
    if not l1.convergent:
        raise ValueError(f"f1 is not integrable against the mixing measure (diverges at {l1.divergent_at})")
    found = _alpha_closed_form(pi, k) if method == "auto" else None
    if found is None:
        found = _alpha_scan(pi, k)
    a0, attained = found
    usable = a0 if (attained or math.isinf(a0)) else max(a0 - slack, 0.0)
    return IndexValue(a0, attained, usable)


def compute_indices(lam: LevyMeasureSpec, pi: MixingMeasureSpec, k: KernelSpec,
                    slack: float = DEFAULT_SLACK) -> Indices:
    return Indices(mixing_index(pi, k, slack), bg_index(lam, slack), tail_index(lam, slack))


# --------------------------------------------------------------------------
# rate classification

REGIMES = {
    1: "α ≥ 1, η ≥ 2",
    2: "α ≥ 1, η < 2 or α < 1, η ≤ 1+α, β ≤ 1+α",
    3: "α < 1, η > 1+α, β ≤ 1+α",
    4: "α < 1, η > 1+α, β > 1+α",
    5: "α < 1, η ≤ 1+α < β, η < (1−α/β)^{-1}",
    6: "α < 1, η ≤ 1+α < β, η ≥ (1−α/β)^{-1}",
}
BULLET = {1: 1, 2: 2, 3: 2, 4: 3, 5: 4, 6: 5, 7: 6}
NORM_PLAIN, NORM_LOG, NORM_LIL = "t^{1/γ}", "t^{1/γ}·log t", "√(2t loglog t)"


@dataclass
class RateReport:
    alpha: float
    alpha_attained: bool
    beta: float
    beta_attained: bool
    eta: float
    eta_attained: bool
    gamma_max: float
    gamma_open: bool
    gamma_usable: float
    inv_gamma: float
    regime: str
    bullet: int | None
    normalizer: str
    centering_required: bool
    bound_type: str
    lil_regime: str | None = None
    partial: bool = False
    candidates: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def as_dict(self) -> dict:
        d = asdict(self)
        for key in ("alpha", "beta", "eta", "gamma_max", "gamma_usable", "inv_gamma"):
            if isinstance(d[key], float) and math.isinf(d[key]):
                d[key] = "inf"
        return d


def _as_index(v) -> IndexValue:
    if isinstance(v, IndexValue):
        return v
    v = float(v)
    return IndexValue(v, True, v)


def classify_rate(alpha, beta, eta, *, finite_pi: bool = True, finite_variation: bool | None = None,
                  gaussian: bool = False, b: float = 0.0, slack: float = DEFAULT_SLACK) -> RateReport:
    """Smallest admissible ``1/gamma`` from the indices (usable values are classified).

    ``finite_variation`` defaults to ``beta < 1`` (or ``beta == 1`` attained).
    ``gaussian`` selects the pure-Gaussian law of the iterated logarithm.
    """
    A, B, E = _as_index(alpha), _as_index(beta), _as_index(eta)
    common = dict(alpha=A.value, alpha_attained=A.attained, beta=B.value, beta_attained=B.attained,
                  eta=E.value, eta_attained=E.attained)
    if gaussian:
        return RateReport(**common, gamma_max=2.0, gamma_open=False, gamma_usable=2.0, inv_gamma=0.5,
                          regime="gaussian-LIL", bullet=None, normalizer=NORM_LIL, centering_required=True,
                          bound_type="gaussian", lil_regime="gaussian-LIL")
    a, bt, e = A.usable, B.usable, E.usable
    if finite_variation is None:
        finite_variation = bt < 1 or (bt == 1 and B.attained)
    notes = []
    candidates = []
    if a >= 1:
        case = 1 if e >= 2 else 2
    elif bt <= 1 + a:
        case = 3 if e <= 1 + a else 4
    elif e > 1 + a:
        case = 5
    else:
        bound = 1.0 / (1.0 - a / bt)
        case = 6 if e < bound else 7
    if case == 1:
        g_sup, is_open = 2.0, False
    elif case in (2, 3, 6):
        g_sup, is_open = e, False
    elif case == 4:
        g_sup, is_open = 1.0 + a, False
    else:
        g_sup, is_open = 1.0 / (1.0 - a / bt), True
    if case in (6, 7):
        candidates = [{"inv_gamma": 1.0 / e if e > 0 else INF, "source": "tail index"},
                      {"inv_gamma": 1.0 - a / bt, "source": "mixing/activity bound", "open": True}]
        notes.append("sharpness in this regime is not asserted; both candidate rates are reported")
    if is_open:
        inv = 1.0 - a / bt + slack
        g_use = 1.0 / inv
    else:
        inv = 1.0 / g_sup if g_sup > 0 else INF
        g_use = g_sup
    lil = None
    if finite_variation:
        bound_type = "finite-variation"
        if case == 1:
            normalizer, lil = NORM_LIL, "finite-var-LIL"
        else:
            normalizer = NORM_PLAIN
    elif bt <= 1 + a:
        bound_type, normalizer = "infinite-variation, log-corrected", NORM_LOG
    else:
        bound_type, normalizer = "infinite-variation, big jumps only", NORM_PLAIN
    if not finite_pi:
        notes.append("mixing measure has infinite mass: only the finite-mass classification is certified")
    if b > 0:
        notes.append("Gaussian component present alongside jumps: it adds a diffusive t^{1/2} term")
    return RateReport(**common, gamma_max=g_sup, gamma_open=is_open, gamma_usable=g_use, inv_gamma=inv,
                      regime=REGIMES[BULLET[case]], bullet=BULLET[case], normalizer=normalizer,
                      centering_required=g_use >= 1, bound_type=bound_type, lil_regime=lil,
                      partial=not finite_pi, candidates=candidates, notes=notes)


def classify_model(a: float, b: float, lam: LevyMeasureSpec, pi: MixingMeasureSpec, k: KernelSpec,
                   slack: float = DEFAULT_SLACK) -> RateReport:
    """Indices plus classification for a full model."""
    if lam.is_zero and b > 0:
        ind = Indices(mixing_index(pi, k, slack), bg_index(lam, slack), tail_index(lam, slack))
        return classify_rate(ind.alpha, ind.beta, ind.eta, gaussian=True, finite_pi=pi.is_finite)
    ind = compute_indices(lam, pi, k, slack)
    small = partial_moment(lam, 1.0, (0.0, 1.0))
    return classify_rate(ind.alpha, ind.beta, ind.eta, finite_pi=pi.is_finite,
                         finite_variation=small.convergent, b=b, slack=slack)


# --------------------------------------------------------------------------
# existence

def _U(lam: LevyMeasureSpec, a: float, y: np.ndarray) -> np.ndarray:
    """``U(y) = a y + y int z (1(|yz| <= 1) - 1(|z| <= 1)) lambda(dz)`` for ``y >= 0``."""
    out = np.zeros_like(y)
    for idx in np.ndindex(y.shape):
        v = float(y[idx])
        if v == 0:
            continue
        if lam.is_zero or v == 1:
            corr = 0.0
        elif v < 1:
            corr = _signed_m1(lam, 1.0, 1.0 / v)
        else:
            corr = -_signed_m1(lam, 1.0 / v, 1.0)
        out[idx] = v * (a + corr)
    return out


def _V0(lam: LevyMeasureSpec, y: np.ndarray) -> np.ndarray:
    """``V0(y) = int (1 ^ y^2 z^2) lambda(dz)``."""
    out = np.zeros_like(y)
    for idx in np.ndindex(y.shape):
        v = float(y[idx])
        if v == 0:
            continue
        # 1/v overflows for subnormal v; the capped radius keeps v * (v * m2) finite
        r = min(1.0 / v, sys.float_info.max) if v > 0 else sys.float_info.max
        val = 0.0
        for _, s in lam.sides():
            val += float(s.tail(r)) + v * (v * s.moment(2.0, 0.0, r).value)
        out[idx] = val
    return out


def shape_integral(k: KernelSpec, G: Callable[[np.ndarray], np.ndarray],
                   rtol: float = 1e-8) -> quad.Integral:
    """``int_0^inf G(phi(w)) dw`` over the standardized kernel shape."""
    sh = k.shape
    hi = sh.support_end
    bps = [sh.mode] if sh.mode > 0 else []
    g = lambda w: G(np.asarray(sh.phi(w), dtype=float))
    return quad.integrate(g, 0.0, hi, breakpoints=bps, rtol=rtol,
                          pivot=max(sh.mode, 1.0) if math.isinf(hi) else None,
                          names=(V0_NAME, VINF_NAME))


def mixing_scale(k: KernelSpec, pi: MixingMeasureSpec) -> quad.Integral:
    """``int sigma dpi`` (equals ``int f1 dpi / F1``)."""
    return _integrate_pi(pi, lambda x: np.asarray(k.sigma(np.asarray(x, dtype=float)), dtype=float))


@dataclass
class ExistenceReport:
    exists: bool
    conditions: dict
    mixing_scale: ConditionReport
    trivial: bool = False

    def as_dict(self) -> dict:
        return {"exists": self.exists, "trivial": self.trivial,
                "mixing_scale": self.mixing_scale.as_dict(),
                "conditions": {k: v.as_dict() for k, v in self.conditions.items()}}


def check_existence(a: float, b: float, lam: LevyMeasureSpec, pi: MixingMeasureSpec,
                    k: KernelSpec) -> ExistenceReport:
    """The three integrability conditions for ``int f dLambda``: drift term ``|U(f)|``,
    Gaussian term ``b f^2`` and jump term ``V0(f)``, each over ``pi x Leb``."""
    if b < 0:
        raise ValueError("b must be nonnegative")
    scale = mixing_scale(k, pi)
    if a == 0 and b == 0 and lam.is_zero:
        zero = ConditionReport(0.0, True)
        return ExistenceReport(True, {"drift": zero, "gaussian": zero, "jumps": zero},
                               ConditionReport.of(scale), trivial=True)
    try:
        ju = shape_integral(k, lambda y: np.abs(_U(lam, a, y))) if (a != 0 or not lam.is_zero) \
            else quad.Integral(0.0, True)
    except quad.InfiniteIntegrand as exc:
        ju = quad.Integral(INF, False, [exc.where])
    jg = shape_integral(k, lambda y: b * y * y) if b > 0 else quad.Integral(0.0, True)
    jv = shape_integral(k, lambda y: _V0(lam, y)) if not lam.is_zero else quad.Integral(0.0, True)
    conds = {"drift": ConditionReport.of(_product(ju, scale)),
             "gaussian": ConditionReport.of(_product(jg, scale)),
             "jumps": ConditionReport.of(_product(jv, scale))}
    ok = all(c.convergent for c in conds.values())
    return ExistenceReport(ok, conds, ConditionReport.of(scale))


def log_moment(lam: LevyMeasureSpec) -> quad.Integral:
    """``int_{|z| > 1} log|z| lambda(dz)``."""
    total = quad.Integral(0.0, True)
    for _, s in lam.sides():
        total = total + _side_log_moment(s)
    if not total.convergent:
        total.value = INF
    return total


def _side_log_moment(s) -> quad.Integral:
    if isinstance(s, SumSide):
        out = quad.Integral(0.0, True)
        for p in s.pieces:
            out = out + _side_log_moment(p)
        return out
    if isinstance(s, AtomSide):
        return quad.Integral(sum(m * math.log(z) for z, m in s.atoms() if z > 1), True)
    if isinstance(s, LogParetoSide):
        return s.log_moment(1.0)
    if isinstance(s, PowerSide):
        L, H = max(1.0, s.lo), s.hi
        if H <= L or s.c == 0:
            return quad.Integral(0.0, True)
        a = s.a
        if math.isinf(H) and a <= 0:
            return quad.Integral(INF, False, [ZINF])
        if a == 0:
            return quad.Integral(s.c * (math.log(H) ** 2 - math.log(L) ** 2) / 2, True)
        F = lambda z: 0.0 if math.isinf(z) else -z ** (-a) * (a * math.log(z) + 1.0) / a ** 2
        return quad.Integral(s.c * (F(H) - F(L)), True)
    g = lambda z: np.log(z) * s.density(z)
    return quad.integrate(g, 1.0, INF, breakpoints=s.breakpoints(), names=(Z0, ZINF))


def small_log_moment(lam: LevyMeasureSpec) -> quad.Integral:
    """``int_{|z| <= 1} z^2 log(1/|z|) lambda(dz)``."""
    total = quad.Integral(0.0, True)
    for _, s in lam.sides():
        total = total + _side_small_log(s)
    if not total.convergent:
        total.value = INF
    return total


def _side_small_log(s) -> quad.Integral:
    if isinstance(s, SumSide):
        out = quad.Integral(0.0, True)
        for p in s.pieces:
            out = out + _side_small_log(p)
        return out
    if isinstance(s, AtomSide):
        return quad.Integral(sum(m * z * z * math.log(1.0 / z) for z, m in s.atoms() if z <= 1), True)
    if isinstance(s, LogParetoSide):
        return quad.Integral(0.0, True) if s.xm >= 1 else _quad_small_log(s)
    if isinstance(s, PowerSide):
        lo, hi = s.lo, min(1.0, s.hi)
        if hi <= lo or s.c == 0:
            return quad.Integral(0.0, True)
        q1 = 2.0 - s.a  # exponent of z^(1-a) plus one
        if lo == 0 and q1 <= 0:
            return quad.Integral(INF, False, [Z0])
        if q1 == 0:
            F = lambda z: -0.5 * math.log(z) ** 2
        else:
            F = lambda z: 0.0 if z == 0 else z ** q1 * (1.0 / q1 ** 2 - math.log(z) / q1)
        return quad.Integral(s.c * (F(hi) - F(lo)), True)
    return _quad_small_log(s)


def _quad_small_log(s) -> quad.Integral:
    g = lambda z: z * z * np.log(1.0 / z) * s.density(z)
    return quad.integrate(g, 0.0, 1.0, breakpoints=s.breakpoints(), names=(Z0, ZINF))


@dataclass
class SupfouExistence:
    exists: bool
    clause: str
    decided_by: str
    m_minus1: ConditionReport
    log_moment: ConditionReport
    small_jump: ConditionReport | None

    def as_dict(self) -> dict:
        return {"exists": self.exists, "clause": self.clause, "decided_by": self.decided_by,
                "m_minus1": self.m_minus1.as_dict(), "log_moment": self.log_moment.as_dict(),
                "small_jump": None if self.small_jump is None else self.small_jump.as_dict()}


def check_supfou_existence(kappa: float, lam: LevyMeasureSpec, pi: MixingMeasureSpec) -> SupfouExistence:
    """Existence criterion for the fractional superposition kernel.

    Needs ``m_-1(pi) < inf``, a finite big-jump log-moment, and a small-jump
    moment depending on ``kappa``: none above 1/2, ``z^2 log(1/|z|)`` at 1/2,
    ``|z|^(1/(1-kappa))`` below 1/2.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    mm1 = ConditionReport.of(pi.moment(-1.0))
    lm = ConditionReport.of(log_moment(lam))
    if kappa > 0.5:
        clause, sj = "i", None
    elif kappa == 0.5:
        clause, sj = "ii", ConditionReport.of(small_log_moment(lam))
    else:
        clause = "iii"
        sj = ConditionReport.of(partial_moment(lam, 1.0 / (1.0 - kappa), (0.0, 1.0)))
    failed = [name for name, rep in (("m_minus1", mm1), ("log_moment", lm), ("small_jump", sj))
              if rep is not None and not rep.convergent]
    ok = not failed
    decided = f"clause ({clause})" if ok else ", ".join(failed)
    return SupfouExistence(ok, clause, decided, mm1, lm, sj)


# --------------------------------------------------------------------------
# Fubini conditions

@dataclass
class FubiniPart:
    holds: bool
    via: str
    report: ConditionReport | None = None

    def as_dict(self) -> dict:
        return {"holds": self.holds, "via": self.via,
                "report": None if self.report is None else self.report.as_dict()}


@dataclass
class FubiniReport:
    holds: bool
    shortcut: bool
    mean_criterion: ConditionReport
    first_moment_bound: float
    cond1: FubiniPart
    cond2: FubiniPart
    cond3: FubiniPart
    supou_suff: ConditionReport | None = None
    supou_suff_advisory: bool = False

    def as_dict(self) -> dict:
        return {"holds": self.holds, "shortcut": self.shortcut,
                "mean_criterion": self.mean_criterion.as_dict(),
                "first_moment_bound": self.first_moment_bound,
                "cond1": self.cond1.as_dict(), "cond2": self.cond2.as_dict(), "cond3": self.cond3.as_dict(),
                "supou_suff": None if self.supou_suff is None else self.supou_suff.as_dict(),
                "supou_suff_advisory": self.supou_suff_advisory}


def _big_jump_weight(lam: LevyMeasureSpec, y: np.ndarray) -> np.ndarray:
    """``int_{|z| > 1} (1 ^ |z| y) lambda(dz)``."""
    out = np.zeros_like(y)
    for idx in np.ndindex(y.shape):
        v = float(y[idx])
        if v <= 0:
            continue
        if v >= 1:
            out[idx] = sum(float(s.tail(1.0)) for _, s in lam.sides())
            continue
        r = 1.0 / v
        tail = sum(float(s.tail(r)) for _, s in lam.sides())
        m1 = partial_moment(lam, 1.0, (1.0, r))
        if not m1.convergent:
            raise quad.InfiniteIntegrand(ZINF)
        out[idx] = tail + v * m1.value
    return out


def check_fubini(a: float, b: float, lam: LevyMeasureSpec, pi: MixingMeasureSpec,
                 k: KernelSpec) -> FubiniReport:
    """Conditions for exchanging the time integral with the random-measure integral."""
    scale = mixing_scale(k, pi)

    def guarded(fn):
        try:
            return fn()
        except quad.InfiniteIntegrand as exc:
            return quad.Integral(INF, False, [exc.where])

    # E|X(1)| < inf iff int int int |z| f 1(|z| f > 1) < inf
    crit = guarded(lambda: shape_integral(
        k, lambda y: np.where(y > 0, y * _moment_vec(lam, 1.0, 1.0 / np.maximum(y, 1e-300), INF), 0.0)))
    crit = _product(crit, scale) if not lam.is_zero else quad.Integral(0.0, True)
    int_f1 = _integrate_pi(pi, lambda x: _f1(k, x))
    m1_abs = partial_moment(lam, 1.0, (0.0, INF)) if not lam.is_zero else quad.Integral(0.0, True)
    first = (abs(a) * int_f1.value + m1_abs.value * int_f1.value) if (int_f1.convergent and m1_abs.convergent) else INF
    shortcut = crit.convergent

    # (1): small jumps where |z| f > 1
    if math.isfinite(k.shape.peak):
        c1 = FubiniPart(True, "bounded kernel")
    else:
        r = guarded(lambda: shape_integral(
            k, lambda y: np.where(y > 1, y * _moment_vec(lam, 1.0, 1.0 / np.maximum(y, 1e-300), 1.0), 0.0)))
        r = _product(r, scale)
        c1 = FubiniPart(r.convergent, "quadrature", ConditionReport.of(r))
    # (2): big jumps on fast components
    if pi.is_finite:
        c2 = FubiniPart(True, "finite mixing measure")
    else:
        bps = _level_points(k, pi, [1.0])
        r = _integrate_pi(pi, lambda x: np.where(_f1(k, x) <= 1, _big_jump_weight(lam, _f1(k, x)), 0.0), bps)
        c2 = FubiniPart(r.convergent, "quadrature", ConditionReport.of(r))
    # (3): majorant of the running kernel average
    if k.shape.nonincreasing:
        c3 = FubiniPart(True, "non-increasing kernel (g = f)")
    else:
        sh = k.shape
        ghat = lambda w: np.where(w <= sh.mode, sh.peak, sh.phi(w))
        jr = guarded(lambda: quad.integrate(lambda w: _big_jump_weight(lam, ghat(w)), 0.0, sh.support_end,
                                            breakpoints=[sh.mode], pivot=max(sh.mode, 1.0)
                                            if math.isinf(sh.support_end) else None,
                                            names=(V0_NAME, VINF_NAME)))
        r = _product(jr, scale)
        c3 = FubiniPart(r.convergent, "plateau majorant", ConditionReport.of(r))
    suff = None
    advisory = False
    if not shortcut:
        advisory = k.variant not in ("supou", "supfou")
        if k.variant in ("supou", "supfou"):
            g = lambda x: np.where(x > 1, _big_jump_weight(lam, 1.0 / np.asarray(x, dtype=float)), 0.0)
        else:
            g = lambda x: np.where(_f1(k, x) <= 1, _big_jump_weight(lam, _f1(k, x)), 0.0)
        suff = ConditionReport.of(_integrate_pi(pi, g, _level_points(k, pi, [1.0]) + [1.0]))
    holds = shortcut or (c1.holds and c2.holds and c3.holds)
    return FubiniReport(holds, shortcut, ConditionReport.of(crit), first, c1, c2, c3, suff, advisory)


# --------------------------------------------------------------------------
# subordinator tail, means and variances

def subordinator_tail(lam: LevyMeasureSpec, pi: MixingMeasureSpec, k: KernelSpec, r: float,
                      side: str = "pos") -> float:
    """``eta_bar(r) = int lambda_bar(r / f1(x)) pi(dx)`` for the window-jump subordinator."""
    if r <= 0:
        raise ValueError("r must be positive")
    if lam.is_zero:
        return 0.0

    def g(x):
        f1 = _f1(k, x)
        out = np.zeros_like(f1)
        sel = f1 > 0
        for idx in zip(*np.nonzero(sel)):
            out[idx] = sum(float(s.tail(r / f1[idx])) for _, s in lam.sides(side))
        if np.any(np.isinf(out)):
            raise quad.InfiniteIntegrand(Z0)
        return out

    bps = _level_points(k, pi, [r / z for z in _z_breaks(lam)])
    res = _integrate_pi(pi, g, bps)
    return res.value if res.convergent else INF


@dataclass
class MeanVariance:
    t: float
    mean: float | None
    mean_rate: float | None
    int_f1: float
    int_f1_sq: float
    var_subordinator: float
    var_total: float
    q: float
    long_run_variance: float

    def as_dict(self) -> dict:
        return {k: (("inf" if isinstance(v, float) and math.isinf(v) else v)) for k, v in asdict(self).items()}


def centering_drift(lam: LevyMeasureSpec, a: float, centering: str) -> float:
    """Drift ``a`` implied by the centering convention (signed small-jump mean for ``small-jump-mean``)."""
    if centering == "raw":
        return float(a)
    if centering != "small-jump-mean":
        raise ValueError(f"unknown centering {centering!r}")
    small = partial_moment(lam, 1.0, (0.0, 1.0))
    if not small.convergent:
        raise ValueError("small-jump-mean centering needs integrable small jumps")
    return _signed_m1(lam, 0.0, 1.0)


def mixing_variance(k: KernelSpec, pi: MixingMeasureSpec, t: float) -> float:
    """``int sigma^3 H(t / sigma) dpi``: variance of ``X*(t)`` per unit Gaussian rate."""
    res = _integrate_pi(pi, lambda x: k.variance_profile(x, t), rtol=1e-10)
    return res.value if res.convergent else INF


def mean_variance(lam: LevyMeasureSpec, pi: MixingMeasureSpec, k: KernelSpec, a: float = 0.0,
                  t: float = 1.0, *, b: float = 0.0, centering: str = "small-jump-mean") -> MeanVariance:
    """Mean and variance of ``X*(t)``.

    The mean rate is ``a + int_{|z|>1} z lambda(dz)`` times ``int f1 dpi``,
    where under ``small-jump-mean`` the drift equals the signed small-jump mean.
    ``var_subordinator`` is ``m2(lambda) int f1^2 dpi``; ``var_total`` is
    ``(b + m2) int sigma^3 H(t/sigma) dpi`` and ``q`` is half its Gaussian part.
    """
    int_f1 = _integrate_pi(pi, lambda x: _f1(k, x))
    sq = _integrate_pi(pi, lambda x: _f1(k, x) ** 2)
    m2 = partial_moment(lam, 2.0) if not lam.is_zero else quad.Integral(0.0, True)
    big = partial_moment(lam, 1.0, (1.0, INF)) if not lam.is_zero else quad.Integral(0.0, True)
    mean_rate = None
    if big.convergent and int_f1.convergent:
        try:
            drift = centering_drift(lam, a, centering) if not lam.is_zero else (
                float(a) if centering == "raw" else 0.0)
        except ValueError:
            drift = None
        if drift is not None:
            mean_rate = (drift + _signed_m1(lam, 1.0, INF)) * int_f1.value
    prof = mixing_variance(k, pi, t)
    m2v = m2.value if m2.convergent else INF
    sqv = sq.value if sq.convergent else INF
    var_sub = m2v * sqv if m2v > 0 else 0.0
    var_tot = (b + m2v) * prof if (b + m2v) > 0 else 0.0
    return MeanVariance(
        t=float(t), mean=None if mean_rate is None else mean_rate * t, mean_rate=mean_rate,
        int_f1=int_f1.value if int_f1.convergent else INF, int_f1_sq=sqv,
        var_subordinator=var_sub, var_total=var_tot, q=0.5 * b * prof,
        long_run_variance=(b + m2v) * sqv if (b + m2v) > 0 else 0.0)
