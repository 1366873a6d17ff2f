"""Adaptive quadrature with divergence detection at 0 and infinity.

Integrands are vectorized callables ``f(x: ndarray) -> ndarray`` that are
nonnegative. Finite panels are integrated by adaptive Gauss-Legendre; an
improper endpoint is handled by summing geometric shells (decades) toward it.
The shell contributions ``I_k`` are fitted on a log-log scale: a slope of at
least ``DIVERGENCE_SLOPE`` toward the endpoint declares the integral infinite,
otherwise the remaining shells are extrapolated geometrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DIVERGENCE_SLOPE = -0.01
DEFAULT_RTOL = 1e-9
MAX_EVALUATIONS = 1_000_000

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)
_GL10_NODES, _GL10_WEIGHTS = np.polynomial.legendre.leggauss(10)


class InfiniteIntegrand(Exception):
    """Raised by an integrand to signal that it is infinite on a set of positive measure."""

    def __init__(self, where: str = "inner"):
        super().__init__(where)
        self.where = where


@dataclass
class Integral:
    value: float
    convergent: bool
    divergent_at: list[str] = field(default_factory=list)
    error: float = 0.0
    evaluations: int = 0

    def __add__(self, other: "Integral") -> "Integral":
        return Integral(
            self.value + other.value,
            self.convergent and other.convergent,
            self.divergent_at + [d for d in other.divergent_at if d not in self.divergent_at],
            self.error + other.error,
            self.evaluations + other.evaluations,
        )

    def scaled(self, c: float) -> "Integral":
        if c == 0:
            return Integral(0.0, True, [], 0.0, self.evaluations)
        return Integral(self.value * c, self.convergent, list(self.divergent_at),
                        abs(c) * self.error, self.evaluations)


class _Counter:
    def __init__(self, func):
        self.func = func
        self.n = 0

    def __call__(self, x):
        self.n += x.size
        if self.n > MAX_EVALUATIONS:
            raise RuntimeError("quadrature evaluation budget exceeded")
        y = np.asarray(self.func(x), dtype=float)
        if y.shape != x.shape:
            y = np.broadcast_to(y, x.shape).astype(float)
        if np.any(np.isinf(y)) or np.any(np.isnan(y)):
            if np.any(np.isinf(y)):
                raise InfiniteIntegrand("inner")
            raise FloatingPointError("integrand returned NaN")
        return y


def gauss_legendre(func, a: float, b: float, n: int = 20) -> float:
    """Fixed-order Gauss-Legendre rule on ``[a, b]``."""
    nodes, weights = (_GL_NODES, _GL_WEIGHTS) if n == 20 else np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    return float(half * np.dot(weights, func(mid + half * nodes)))


def _panel(func, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    y = func(mid + half * _GL_NODES)
    return half * float(np.dot(_GL_WEIGHTS, y))


def adaptive(func, a: float, b: float, rtol: float = DEFAULT_RTOL,
             atol: float = 0.0, depth: int = 40, log_scale: bool = False,
             max_panels: int = 4000) -> tuple[float, float]:
    """Adaptive Gauss-Legendre on a finite interval. Returns ``(value, error)``.

    With ``log_scale`` the panels are bisected geometrically (``a > 0``), which
    suits integrands with power behavior at the left end.
    """
    if b <= a:
        return 0.0, 0.0
    stack = [(a, b, _panel(func, a, b), 0)]
    total = 0.0
    err = 0.0
    panels = 0
    while stack:
        lo, hi, whole, d = stack.pop()
        panels += 1
        if panels > max_panels:
            # budget spent: accept what is left at its coarse estimate
            total += whole + sum(w for _, _, w, _ in stack)
            err += abs(whole)
            break
        m = math.sqrt(lo * hi) if (log_scale and lo > 0) else 0.5 * (lo + hi)
        left = _panel(func, lo, m)
        right = _panel(func, m, hi)
        if not math.isfinite(left + right):
            raise InfiniteIntegrand("inner")
        diff = abs(left + right - whole)
        if diff <= max(atol, rtol * abs(left + right)) or d >= depth or (hi - lo) <= 1e-15 * max(abs(lo), abs(hi), 1e-300):
            total += left + right
            err += diff
        else:
            stack.append((lo, m, left, d + 1))
            stack.append((m, hi, right, d + 1))
    return total, err


def _finite_piece(func, a, b, breaks, rtol, atol=0.0):
    pts = [a] + sorted(p for p in breaks if a < p < b) + [b]
    val = 0.0
    err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = adaptive(func, lo, hi, rtol=rtol, atol=atol, log_scale=lo > 0 and hi / lo > 10)
        val += v
        err += e
    return val, err


def _shells(func, start: float, toward: str, breaks, rtol: float, max_shells: int,
            ratio: float = 10.0, base: float = 0.0):
    """Sum decade shells from ``start`` toward 0 or infinity.

    Returns ``(value, convergent, error)``.
    """
    contributions = []
    total = 0.0
    err = 0.0
    cut = start
    fit_window = 6
    for k in range(max_shells):
        nxt = cut / ratio if toward == "zero" else cut * ratio
        lo, hi = (nxt, cut) if toward == "zero" else (cut, nxt)
        atol = 1e-3 * rtol * (abs(total) + abs(base))
        v, e = _finite_piece(func, lo, hi, breaks, rtol, atol)
        contributions.append(abs(v))
        total += v
        err += e
        cut = nxt
        if k < fit_window:
            continue
        recent = np.array(contributions[-fit_window:])
        if np.all(recent <= 1e-300) or np.all(recent <= 1e-18 * max(abs(total), 1e-300)):
            return total, True, err
        slope = _shell_slope(recent, ratio)
        if slope >= DIVERGENCE_SLOPE:
            if k >= 2 * fit_window:
                return math.inf, False, err
            continue
        rho = ratio ** slope
        remainder = recent[-1] * rho / (1.0 - rho)
        if remainder <= rtol * abs(total + base) or remainder <= 1e-300:
            return total + remainder, True, err + remainder
    recent = np.array(contributions[-fit_window:])
    slope = _shell_slope(recent, ratio)
    if slope >= DIVERGENCE_SLOPE:
        return math.inf, False, err
    rho = ratio ** slope
    remainder = recent[-1] * rho / (1.0 - rho)
    return total + remainder, True, err + remainder


def _shell_slope(contrib: np.ndarray, ratio: float) -> float:
    """Fitted growth rate of shell contributions per log-unit toward the endpoint."""
    pos = contrib > 0
    if pos.sum() < 3:
        return -math.inf
    k = np.arange(contrib.size)[pos]
    y = np.log(contrib[pos])
    slope = np.polyfit(k * math.log(ratio), y, 1)[0]
    return float(slope)


def integrate(func: Callable[[np.ndarray], np.ndarray], lo: float, hi: float, *,
              breakpoints: Sequence[float] = (), rtol: float = DEFAULT_RTOL,
              pivot: float | None = None, max_shells: int = 64,
              names: tuple[str, str] = ("0", "inf")) -> Integral:
    """Integrate a nonnegative vectorized function over ``[lo, hi]``.

    ``lo == 0`` and ``hi == inf`` are treated as possibly singular endpoints
    with divergence detection. ``names`` labels the two endpoints in the
    returned diagnosis (e.g. ``("x->0", "x->inf")``).
    """
    counted = _Counter(func)
    if hi <= lo:
        return Integral(0.0, True)
    zero_end = lo == 0.0
    inf_end = math.isinf(hi)
    if pivot is None:
        if zero_end and inf_end:
            pivot = 1.0
        elif zero_end:
            pivot = hi
        elif inf_end:
            pivot = max(lo, 1.0)
        else:
            pivot = hi
    a = pivot if zero_end else lo
    b = pivot if inf_end else hi
    if zero_end and inf_end:
        a = b = pivot
    result = Integral(0.0, True)
    try:
        if b > a:
            v, e = _finite_piece(counted, a, b, breakpoints, rtol)
            result = result + Integral(v, True, [], e)
        if zero_end:
            v, ok, e = _shells(counted, a, "zero", breakpoints, rtol, max_shells, base=result.value)
            result = result + Integral(v, ok, [] if ok else [names[0]], e)
        if inf_end:
            v, ok, e = _shells(counted, b, "inf", breakpoints, rtol, max_shells,
                               base=result.value if math.isfinite(result.value) else 0.0)
            result = result + Integral(v, ok, [] if ok else [names[1]], e)
    except InfiniteIntegrand as exc:
        return Integral(math.inf, False, [exc.where], 0.0, counted.n)
    if not result.convergent:
        result.value = math.inf
    result.evaluations = counted.n
    return result


def endpoint_slope(func: Callable[[np.ndarray], np.ndarray], toward: str, *,
                   power: float = 0.0, start: float | None = None, decades: int = 10,
                   ratio: float = 10.0) -> float:
    """Asymptotic log-log growth rate of the shell mass of ``x^power func(x)``.

    Shells are integrated in ``u = log x`` with the power factored out, so large
    powers at extreme cutoffs do not overflow. A value ``>= 0`` means the
    integral diverges at that endpoint; for regularly varying integrands the
    rate is the power of the shell mass.
    """
    if start is None:
        start = 1e-20 if toward == "zero" else 1e20
    width = math.log(ratio)
    logs = []
    u = math.log(start)
    for _ in range(decades):
        lo = u - width if toward == "zero" else u
        g = lambda v, lo=lo: np.exp((power + 1.0) * v) * func(np.exp(lo + v))
        try:
            v, _ = adaptive(g, 0.0, width, rtol=1e-10)
        except InfiniteIntegrand:
            return math.inf
        logs.append((power + 1.0) * lo + math.log(v) if v > 0 else -math.inf)
        u = u - width if toward == "zero" else u + width
    y = np.array(logs)
    ok = np.isfinite(y)
    if ok.sum() < 3:
        return -math.inf
    k = np.arange(y.size)[ok] * width
    return float(np.polyfit(k, y[ok], 1)[0])
