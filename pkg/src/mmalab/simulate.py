"""Sample paths of the integrated process ``X*(t) = int_0^t X(u) du``.

Jumps above ``eps`` are simulated exactly as points of the Poisson random
measure; each point ``(x, s, z)`` contributes ``z * int_0^t f(x, u - s) du``,
which in scale form is ``z sigma(x) * mass(w, tau)`` with
``w = max(-s, 0) / sigma(x)`` and ``tau = (t - max(s, 0)) / sigma(x)``.

Past points (``s <= 0``) are generated either on an absolute window
``[s_min, 0]`` or, by default, in kernel-scaled time ``w = -s / sigma(x)`` on
``[0, L]``. In scaled time the intensity is ``sigma(x) pi(dx) dw lambda(dz)``,
so ``x`` is drawn from the ``sigma``-tilted mixing measure and the point count
stays finite whenever ``int sigma dpi < inf``, however slowly the components
decay.
"""

from __future__ import annotations

import math
import multiprocessing as mp
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import conditions as cond
from .kernels import KernelSpec
from .measures import (
    INF, FiniteAtoms, GammaMixing, LevyMeasureSpec, MixingMeasureSpec, PowerMixing, PowerTilt,
    partial_moment, sample_above, tail_mass,
)
from .rng import PathStreams

MAX_EXPECTED_POINTS = 5e7
GAUSS_EXACT_LAGS = 400


class NumericalQualityError(RuntimeError):
    """A numerical budget (jitter, quadrature) was exceeded."""


@dataclass
class Windows:
    """Truncation settings.

    ``s_min`` selects an absolute past window; when ``None`` the past is cut in
    kernel-scaled time at ``scaled_cutoff`` (chosen automatically so the mean
    neglected contribution is below ``tol * t_max``).
    """

    s_min: float | None = None
    eps: float | None = None
    v_window: tuple | None = None
    scaled_cutoff: float | None = None
    tol: float = 1e-6

    def record(self) -> dict:
        return {"s_min": self.s_min, "eps": self.eps,
                "v_window": None if self.v_window is None else list(self.v_window),
                "scaled_cutoff": self.scaled_cutoff, "tol": self.tol}


@dataclass
class ModelSpec:
    a: float
    b: float
    levy: LevyMeasureSpec
    mixing: MixingMeasureSpec
    kernel: KernelSpec
    windows: Windows = field(default_factory=Windows)
    centering: str = "auto"
    name: str = "model"

    def __post_init__(self):
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.windows.s_min is not None and self.windows.s_min > 0:
            raise ValueError("windows.s_min must be <= 0")
        if self.centering not in ("auto", "small-jump-mean", "raw"):
            raise ValueError(f"unknown centering {self.centering!r}")


@dataclass
class PointSet:
    """Points of the Poisson random measure; ``w`` is the scaled age ``max(-s, 0) / sigma(x)``."""

    x: np.ndarray
    s: np.ndarray
    z: np.ndarray
    w: np.ndarray

    @classmethod
    def empty(cls) -> "PointSet":
        e = np.empty(0)
        return cls(e, e.copy(), e.copy(), e.copy())

    def __len__(self):
        return self.x.size

    def concat(self, other: "PointSet") -> "PointSet":
        return PointSet(*(np.concatenate([getattr(self, n), getattr(other, n)]) for n in ("x", "s", "z", "w")))


@dataclass
class PathSample:
    path_id: int
    seed: int
    t: np.ndarray
    xstar: np.ndarray
    drift: np.ndarray
    gaussian: np.ndarray
    past_jumps: np.ndarray
    window_jumps: np.ndarray
    compensator: np.ndarray
    truncation_bound: float = 0.0
    n_points: int = 0

    COLUMNS = ("xstar", "drift", "gaussian", "past_jumps", "window_jumps", "compensator")

    def rows(self):
        for i, t in enumerate(self.t):
            yield [self.path_id, t] + [getattr(self, c)[i] for c in self.COLUMNS]


def time_grid(t_max: float, points_per_decade: int = 8) -> np.ndarray:
    """``0``, dyadic points ``1/16 .. 1/2``, then log-spaced points from 1 to ``t_max``."""
    if t_max < 1:
        raise ValueError("t_max must be at least 1")
    dyadic = [2.0 ** -k for k in range(4, 0, -1)]
    dec = math.log10(t_max)
    n = max(int(math.ceil(dec * points_per_decade)), 1) + 1
    logs = np.logspace(0.0, dec, n)
    logs[-1] = t_max
    return np.unique(np.concatenate([[0.0], dyadic, logs]))


def _signed_moment(lam: LevyMeasureSpec, lo: float, hi: float) -> float:
    pos = sum(s.moment(1.0, lo, hi).value for _, s in lam.sides("pos"))
    neg = sum(s.moment(1.0, lo, hi).value for _, s in lam.sides("neg"))
    return pos - neg


def auto_eps(lam: LevyMeasureSpec, rate_budget: float = 100.0) -> float:
    """``1e-12`` for finite activity, else the threshold with ``lambda_bar(eps) = rate_budget`` (at most 1)."""
    if lam.is_zero:
        return 1.0
    if math.isfinite(tail_mass(lam, 1e-300)):
        return 1e-12
    if tail_mass(lam, 1.0) >= rate_budget:
        return 1.0
    lo, hi = math.log(1e-300), 0.0
    for _ in range(200):
        m = 0.5 * (lo + hi)
        if tail_mass(lam, math.exp(m)) > rate_budget:
            lo = m
        else:
            hi = m
    return math.exp(hi)


class Engine:
    """Resolved simulation plan for one model and horizon (immutable after construction)."""

    def __init__(self, model: ModelSpec, t_max: float):
        self.model, self.t_max = model, float(t_max)
        m, k, lam = model, model.kernel, model.levy
        self.eps = m.windows.eps if m.windows.eps is not None else auto_eps(lam)
        if self.eps <= 0:
            raise ValueError("windows.eps must be positive")
        small_fv = lam.is_zero or partial_moment(lam, 1.0, (0.0, 1.0)).convergent
        if m.centering == "auto":
            # without jumps there is no small-jump mean; keep the supplied drift
            self.centering = "small-jump-mean" if small_fv and not lam.is_zero else "raw"
        else:
            self.centering = m.centering
        if self.centering == "small-jump-mean" and not small_fv:
            raise ValueError("small-jump-mean centering needs int_{|z|<=1} |z| lambda(dz) < inf")
        if self.centering == "raw" and self.eps > 1:
            raise ValueError("raw centering needs eps <= 1")
        self.pi_w, self.clipped_f1 = self._window_mixing()
        self.jump_rate = tail_mass(lam, self.eps) if not lam.is_zero else 0.0
        if not math.isfinite(self.jump_rate):
            raise ValueError(f"levy: tail mass above eps={self.eps} is infinite")
        self.int_f1 = self._finite(cond._integrate_pi(self.pi_w, lambda x: cond._f1(k, x)), "int f1 dpi")
        self.int_sigma = self._finite(cond.mixing_scale(k, self.pi_w), "int sigma dpi")
        m1 = partial_moment(lam, 1.0, (self.eps, INF)) if not lam.is_zero else None
        self.m1 = 0.0 if m1 is None else (m1.value if m1.convergent else INF)
        # drift per unit of t * int f1 dpi, and compensated mass per unit kernel mass
        if lam.is_zero:
            self.drift_rate = float(m.a) if self.centering == "raw" else 0.0
            self.comp_rate = 0.0
        elif self.centering == "small-jump-mean":
            self.drift_rate = _signed_moment(lam, 0.0, self.eps)
            self.comp_rate = 0.0
        else:
            self.drift_rate = float(m.a)
            self.comp_rate = _signed_moment(lam, self.eps, 1.0)
        res = partial_moment(lam, 2.0, (0.0, self.eps)) if not lam.is_zero else None
        self.residue_m2 = 0.0 if res is None else res.value
        self._resolve_past()
        self._gauss_cache: dict = {}

    @staticmethod
    def _finite(res, what: str) -> float:
        if not res.convergent:
            raise ValueError(f"mixing: {what} diverges at {res.divergent_at}")
        return res.value

    def _window_mixing(self):
        m, k, pi = self.model, self.model.kernel, self.model.mixing
        if m.windows.v_window is not None:
            lo, hi = (float(v) for v in m.windows.v_window)
            pi_w = pi.restrict(lo, hi)
        elif pi.is_finite:
            return pi, 0.0
        else:
            # clip components whose kernel mass is numerically zero
            pts = cond._level_points(k, pi, [1e-16])
            if not pts:
                raise ValueError("mixing: infinite mass and no region where f1 is negligible")
            lo, hi = pi.lo, pi.hi
            f_lo = float(cond._f1(k, [pi.lo if pi.lo > 0 else 1e-300])[0])
            if f_lo < 1e-16:
                lo = pts[0]
            else:
                hi = pts[-1]
            pi_w = pi.restrict(lo, hi)
        if not pi_w.is_finite:
            raise ValueError("mixing: window mass is infinite; set windows.v_window")
        full = cond._integrate_pi(pi, lambda x: cond._f1(k, x))
        part = cond._integrate_pi(pi_w, lambda x: cond._f1(k, x))
        clipped = max(full.value - part.value, 0.0) if full.convergent else INF
        return pi_w, clipped

    def _resolve_past(self):
        w, k = self.model.windows, self.model.kernel
        sh = k.shape
        if w.s_min is not None:
            self.past_mode, self.s_min, self.L = "absolute", float(w.s_min), None
            return
        self.past_mode, self.s_min = "scaled", None
        if w.scaled_cutoff is not None:
            self.L = float(w.scaled_cutoff)
        elif math.isfinite(sh.support_end):
            self.L = float(sh.support_end)
        elif self.jump_rate == 0:
            self.L = 0.0
        else:
            scale = self.m1 * self.int_sigma if math.isfinite(self.m1) else self.int_sigma
            y = w.tol / scale if math.isfinite(self.m1) else 1e-12 * sh.F1
            self.L = 0.0 if y >= sh.F1 else float(sh.F2inv(np.array([y]))[0])

    # -- deterministic components ------------------------------------------

    def truncated_mass(self, t) -> np.ndarray:
        """Kernel mass ``int int (f2(x, -s) - f2(x, t - s)) ds dpi`` over the neglected past."""
        k = self.model.kernel
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros_like(t)
        for i, ti in enumerate(t):
            if ti == 0:
                continue
            if self.past_mode == "absolute":
                S = -self.s_min
                g = lambda x: np.maximum(k.tail_integral(x, S) - k.tail_integral(x, S + ti), 0.0)
            else:
                L, sh = self.L, k.shape

                def g(x, ti=ti):
                    s = np.asarray(k.sigma(np.asarray(x, dtype=float)), dtype=float)
                    safe = np.where(s > 0, s, 1.0)
                    diff = s * s * (sh.G(L) - sh.G(L + ti / safe))
                    cap = ti * s * float(sh.F2(np.array([L]))[0])
                    return np.where(s > 0, np.clip(diff, 0.0, cap), 0.0)
            res = cond._integrate_pi(self.pi_w, g)
            out[i] = res.value if res.convergent else INF
        return out

    def truncation_error_bound(self, t) -> np.ndarray:
        """Bound on the mean absolute contribution of the neglected past (and clipped components)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.jump_rate == 0:
            return np.zeros_like(t)
        m1_all = partial_moment(self.model.levy, 1.0, (self.eps, INF))
        m1 = m1_all.value if m1_all.convergent else INF
        if not math.isfinite(m1):
            return np.full_like(t, INF)
        return m1 * (self.truncated_mass(t) + t * self.clipped_f1)

    def drift(self, t) -> np.ndarray:
        return self.drift_rate * np.asarray(t, dtype=float) * self.int_f1

    def compensator(self, t) -> np.ndarray:
        """``-(int_{eps<|z|<=1} z lambda) * (kernel mass of the simulated window)``; 0 in finite-variation mode."""
        t = np.asarray(t, dtype=float)
        if self.comp_rate == 0:
            return np.zeros_like(t)
        return -self.comp_rate * (t * self.int_f1 - self.truncated_mass(t))

    def residue_variance(self, t) -> float:
        """Variance of the dropped sub-eps jumps at time ``t`` (quality metric)."""
        if self.residue_m2 == 0:
            return 0.0
        return self.residue_m2 * cond.mixing_variance(self.model.kernel, self.model.mixing, float(t))

    # -- Poisson points ------------------------------------------------------

    def _draw_x(self, n: int, rng, tilted: bool) -> np.ndarray:
        k, pi = self.model.kernel, self.pi_w
        if not tilted:
            return pi.sample(n, rng)
        q = k.sigma_power()
        if isinstance(pi, FiniteAtoms):
            return pi.sample(n, rng, tilt=k.sigma)
        if q is not None and isinstance(pi, (PowerMixing, GammaMixing)):
            return pi.sample(n, rng, tilt=PowerTilt(q))
        lo = pi.lo if pi.lo > 0 else pi.hi * 1e-15
        hi = pi.hi if math.isfinite(pi.hi) else pi.lo * 1e15
        return pi.restrict(lo, hi)._grid_sample(n, rng, k.sigma)

    def _count(self, mean: float, rng) -> int:
        if mean > MAX_EXPECTED_POINTS:
            raise ValueError(f"expected {mean:.3g} points exceeds the budget; raise windows.eps")
        return int(rng.poisson(mean)) if mean > 0 else 0

    def sample_window(self, T: float, streams: PathStreams, s_lo: float = 0.0) -> PointSet:
        """Points with ``s`` uniform on ``(s_lo, T]`` and ``x`` from the normalized window measure."""
        if T <= s_lo or self.jump_rate == 0:
            return PointSet.empty()
        mass = self.pi_w.total_mass
        n = self._count(mass * (T - s_lo) * self.jump_rate, streams["count"])
        if n == 0:
            return PointSet.empty()
        s = s_lo + (T - s_lo) * (1.0 - streams["s"].random(n))
        x = self._draw_x(n, streams["x"], tilted=False)
        z = sample_above(self.model.levy, self.eps, n, streams["z"])
        sig = self.model.kernel.sigma(x)
        w = np.where(s < 0, -s / np.where(sig > 0, sig, 1.0), 0.0)
        return PointSet(x, s, z, w)

    def sample_past_scaled(self, streams: PathStreams) -> PointSet:
        if self.jump_rate == 0 or not self.L:
            return PointSet.empty()
        n = self._count(self.int_sigma * self.L * self.jump_rate, streams["past_count"])
        if n == 0:
            return PointSet.empty()
        w = self.L * (1.0 - streams["past_w"].random(n))
        x = self._draw_x(n, streams["past_x"], tilted=True)
        z = sample_above(self.model.levy, self.eps, n, streams["past_z"])
        s = -w * self.model.kernel.sigma(x)
        return PointSet(x, s, z, w)

    def sample_points(self, streams: PathStreams, T: float | None = None) -> PointSet:
        T = self.t_max if T is None else T
        if self.past_mode == "absolute":
            return self.sample_window(T, streams, s_lo=self.s_min)
        return self.sample_window(T, streams).concat(self.sample_past_scaled(streams))

    # -- path assembly -------------------------------------------------------

    def jump_components(self, pts: PointSet, t_grid) -> tuple[np.ndarray, np.ndarray]:
        """(past, window) jump contributions on ``t_grid``."""
        t = np.asarray(t_grid, dtype=float)
        past, window = np.zeros_like(t), np.zeros_like(t)
        if len(pts) == 0:
            return past, window
        k = self.model.kernel
        sig = np.asarray(k.sigma(pts.x), dtype=float)
        live = sig > 0
        s, z, w, sig = pts.s[live], pts.z[live], pts.w[live], sig[live]
        splus = np.maximum(s, 0.0)
        is_past = s <= 0
        chunk = max(1, 2_000_000 // max(t.size, 1))
        for i0 in range(0, s.size, chunk):
            sl = slice(i0, i0 + chunk)
            tau = np.maximum(t[None, :] - splus[sl, None], 0.0) / sig[sl, None]
            contrib = (z[sl] * sig[sl])[:, None] * k.shape.mass(w[sl, None], tau)
            past += contrib[is_past[sl]].sum(axis=0)
            window += contrib[~is_past[sl]].sum(axis=0)
        return past, window

    def path(self, path_id: int, seed: int, t_grid) -> PathSample:
        t = np.asarray(t_grid, dtype=float)
        streams = PathStreams(seed, path_id)
        pts = self.sample_points(streams, T=float(t.max()) if t.size else 0.0)
        past, window = self.jump_components(pts, t)
        drift = self.drift(t)
        comp = self.compensator(t)
        gauss = self.gaussian(t, streams["gaussian"]) if self.model.b > 0 else np.zeros_like(t)
        total = drift + gauss + past + window + comp
        return PathSample(path_id, int(seed), t, total, drift, gauss, past, window, comp,
                          float(self.truncation_error_bound(t[-1:])[0]) if t.size else 0.0, len(pts))

    # -- Gaussian component ----------------------------------------------------

    def variance_function(self, lags: np.ndarray) -> np.ndarray:
        """``V(h) = int sigma^3 H(h / sigma) dpi`` on an array of lags."""
        k, pi = self.model.kernel, self.model.mixing
        lags = np.asarray(lags, dtype=float)
        if isinstance(pi, FiniteAtoms):
            xa, ma = np.array([x for x, _ in pi.atoms()]), np.array([m for _, m in pi.atoms()])
            return (k.variance_profile(xa[None, :], lags[:, None]) * ma[None, :]).sum(axis=1)
        uniq = np.unique(lags[lags > 0])
        if uniq.size <= GAUSS_EXACT_LAGS:
            vals = np.array([cond.mixing_variance(k, pi, h) for h in uniq])
            lookup = dict(zip(uniq.tolist(), vals.tolist()))
            return np.array([lookup.get(h, 0.0) for h in lags.tolist()])
        # smooth in log-log: V ~ h^2 near 0 and ~ h for large h
        nodes = np.geomspace(uniq[0], uniq[-1], 200)
        vals = np.array([cond.mixing_variance(k, pi, h) for h in nodes])
        interp = PchipInterpolator(np.log(nodes), np.log(vals))
        out = np.zeros_like(lags)
        pos = lags > 0
        out[pos] = np.exp(interp(np.log(np.clip(lags[pos], nodes[0], nodes[-1]))))
        return out

    def gaussian_covariance(self, t_grid) -> np.ndarray:
        """``Cov(X_G(t_i), X_G(t_j)) = (b/2) (V(t_i) + V(t_j) - V(|t_i - t_j|))``."""
        t = np.asarray(t_grid, dtype=float)
        lags = np.abs(t[:, None] - t[None, :])
        flat = np.concatenate([t, lags.ravel()])
        V = self.variance_function(flat)
        Vt, Vl = V[: t.size], V[t.size:].reshape(lags.shape)
        return 0.5 * self.model.b * (Vt[:, None] + Vt[None, :] - Vl)

    def gaussian_factor(self, t_grid) -> tuple[np.ndarray, np.ndarray]:
        key = tuple(np.asarray(t_grid, dtype=float).tolist())
        if key in self._gauss_cache:
            return self._gauss_cache[key]
        t = np.asarray(t_grid, dtype=float)
        nz = np.nonzero(t > 0)[0]
        C = self.gaussian_covariance(t[nz])
        fac = cholesky_jitter(C)
        self._gauss_cache[key] = (nz, fac)
        return nz, fac

    def gaussian(self, t_grid, rng: np.random.Generator) -> np.ndarray:
        t = np.asarray(t_grid, dtype=float)
        nz, fac = self.gaussian_factor(t)
        out = np.zeros_like(t)
        out[nz] = fac @ rng.standard_normal(nz.size)
        return out


def cholesky_jitter(C: np.ndarray, max_rel: float = 1e-10) -> np.ndarray:
    """Lower Cholesky factor, adding diagonal jitter up to ``max_rel * trace`` if needed."""
    if C.size == 0:
        return C
    tr = float(np.trace(C))
    jitter = 0.0
    for _ in range(12):
        try:
            return np.linalg.cholesky(C + jitter * np.eye(C.shape[0]))
        except np.linalg.LinAlgError:
            jitter = tr * (1e-16 if jitter == 0 else jitter / tr * 10.0)
            if jitter > max_rel * tr:
                break
    ev = np.linalg.eigvalsh(C)
    cond_num = ev[-1] / ev[0] if ev[0] > 0 else INF
    raise NumericalQualityError(f"covariance not PSD within jitter budget {max_rel:g}*trace "
                                f"(min eigenvalue {ev[0]:.3g}, condition number {cond_num:.3g})")


# -- spec-level operations ------------------------------------------------------

def sample_prm(engine: Engine, T: float, streams: PathStreams, s_lo: float = 0.0) -> PointSet:
    """Poisson points on ``window x (s_lo, T] x {|z| > eps}``."""
    return engine.sample_window(T, streams, s_lo)


def path_from_points(engine: Engine, points: PointSet, t_grid) -> tuple[np.ndarray, np.ndarray]:
    return engine.jump_components(points, t_grid)


def make_points(engine: Engine, x, s, z) -> PointSet:
    """Point set from explicit coordinates (scaled age derived from ``s``)."""
    x, s, z = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (x, s, z))
    sig = np.asarray(engine.model.kernel.sigma(x), dtype=float)
    w = np.where(s < 0, -s / np.where(sig > 0, sig, 1.0), 0.0)
    return PointSet(x, s, z, w)


def oracle_time_integral(model: ModelSpec, points: PointSet, t_grid, quad_step: float = 1e-4) -> np.ndarray:
    """Jump part of ``X*(t)`` by the trapezoid rule on ``X(u) = sum z f(x, u - s)``.

    Arrival times and kernel support ends are grid nodes, and each panel uses
    one-sided limits at its ends, so jumps of ``X`` cost no accuracy.
    """
    t = np.asarray(t_grid, dtype=float)
    if len(points) == 0 or t.size == 0:
        return np.zeros_like(t)
    k = model.kernel
    tmax = float(t.max())
    marks = [points.s]
    if math.isfinite(k.shape.support_end):
        marks.append(points.s + k.shape.support_end * np.asarray(k.sigma(points.x), dtype=float))
    marks = np.concatenate(marks)
    edges = np.unique(np.concatenate([[0.0], t, marks[(marks > 0) & (marks < tmax)]]))
    pieces = [np.linspace(a, b, max(int(math.ceil((b - a) / quad_step)), 1) + 1)[:-1]
              for a, b in zip(edges[:-1], edges[1:])]
    u = np.concatenate(pieces + [edges[-1:]])
    delta = 1e-13 * np.maximum(1.0, np.abs(u))

    def X(uu):
        out = np.zeros_like(uu)
        chunk = max(1, 4_000_000 // max(len(points), 1))
        for i0 in range(0, uu.size, chunk):
            part = uu[i0:i0 + chunk]
            vals = k.f(points.x[:, None], part[None, :] - points.s[:, None])
            out[i0:i0 + chunk] = (points.z[:, None] * vals).sum(axis=0)
        return out

    right, left = X(u + delta), X(u - delta)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (right[:-1] + left[1:]) * np.diff(u))])
    return np.interp(t, u, cum)


# -- worker pool ------------------------------------------------------------------

_ENGINE: Engine | None = None


def _init_worker(engine: Engine):
    global _ENGINE
    _ENGINE = engine


def _run_path(args) -> PathSample:
    pid, seed, t = args
    return _ENGINE.path(pid, seed, t)


def default_workers() -> int:
    try:
        return max(len(os.sched_getaffinity(0)), 1)
    except AttributeError:
        return max(os.cpu_count() or 1, 1)


def simulate_paths(model: ModelSpec, n_paths: int, t_grid, seed: int, *, workers: int | None = None,
                   engine: Engine | None = None) -> list[PathSample]:
    """Simulate ``n_paths`` paths in path-index order; results do not depend on ``workers``."""
    if seed is None:
        raise ValueError("a seed is mandatory for simulation")
    t = np.asarray(t_grid, dtype=float)
    eng = engine or Engine(model, float(t.max()))
    if model.b > 0:
        eng.gaussian_factor(t)  # factor once, before forking
    workers = default_workers() if workers is None else max(int(workers), 1)
    jobs = [(i, int(seed), t) for i in range(n_paths)]
    if workers == 1 or n_paths < 2:
        return [eng.path(i, int(seed), t) for i in range(n_paths)]
    ctx = mp.get_context("fork")
    with ctx.Pool(min(workers, n_paths), initializer=_init_worker, initargs=(eng,)) as pool:
        return pool.map(_run_path, jobs, chunksize=max(1, n_paths // (4 * workers)))
