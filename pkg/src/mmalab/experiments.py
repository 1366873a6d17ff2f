"""Desk-scale statistical probes of the growth-rate and iterated-logarithm laws."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import conditions as cond
from .simulate import Engine, ModelSpec, PathSample, simulate_paths, time_grid

LIL_BAND = (0.5, 1.5)


@dataclass
class ExperimentReport:
    model: str
    mode: str
    regime: str | None
    estimate: float | None
    stderr: float | None
    predicted: float | None
    tolerance: float | None
    passed: bool
    n_paths: int
    t_max: float
    seed: int
    lil_statistic: float | None = None
    lil_target: float | None = None
    lil_ratio: float | None = None
    log_statistic: float | None = None
    degenerate: bool = False
    checks: dict = field(default_factory=dict)
    curve: dict = field(default_factory=dict)
    runtime: float = 0.0

    def as_dict(self, include_runtime: bool = False) -> dict:
        d = asdict(self)
        d.pop("curve")
        if not include_runtime:
            d.pop("runtime")
        return d


def running_max(values: np.ndarray) -> np.ndarray:
    return np.maximum.accumulate(np.abs(values), axis=-1)


def growth_exponent(paths: list[PathSample] | np.ndarray, centering=None, burn_in: float = 0.5,
                    t=None, min_decades: float = 2.0) -> tuple[float, float]:
    """Slope of log median running max ``sup_{s<=t} |X*(s) - c(s)|`` against ``log t``.

    Uses grid points ``t >= 1`` after discarding the first ``burn_in`` fraction
    of the log range. ``paths`` is a list of samples or an array ``(n_paths, n_t)``
    with ``t`` given separately.
    """
    if isinstance(paths, np.ndarray):
        X, tt = np.atleast_2d(paths), np.asarray(t, dtype=float)
    else:
        if not paths:
            raise ValueError("no paths")
        tt = paths[0].t
        X = np.vstack([p.xstar for p in paths])
    c = np.zeros_like(tt) if centering is None else np.asarray(centering, dtype=float)
    M = running_max(X - c[None, :])
    if not np.any(M[:, -1] > 0):
        raise ValueError("degenerate paths: every centered path is identically zero")
    med = np.median(M, axis=0)
    lo = math.log(max(tt[tt > 0].min(), 1.0))
    hi = math.log(tt.max())
    start = lo + burn_in * (hi - lo)
    sel = (tt >= math.exp(start) * (1 - 1e-12)) & (med > 0)
    if (hi - start) / math.log(10) < min_decades - 1e-9:
        raise ValueError(f"grid spans fewer than {min_decades} decades after burn-in")
    if sel.sum() < 3:
        raise ValueError("too few grid points after burn-in")
    fit = stats.linregress(np.log(tt[sel]), np.log(med[sel]))
    return float(fit.slope), float(fit.stderr)


def default_tolerance(eta: float) -> float:
    return 0.15 if eta <= 1.5 else 0.1


def analytic_mean_rate(model: ModelSpec, engine: Engine) -> float | None:
    mv = cond.mean_variance(model.levy, model.mixing, model.kernel, model.a, 1.0, b=model.b,
                            centering=engine.centering)
    return mv.mean_rate


def mz_check(model: ModelSpec, report: cond.RateReport, n_paths: int = 200, t_max: float = 1e4,
             seed: int = 0, *, workers: int | None = None, tol: float | None = None,
             burn_in: float = 0.5, points_per_decade: int = 8) -> ExperimentReport:
    """Compare the empirical growth exponent of the centered paths with the predicted ``1/gamma``."""
    if report.lil_regime == "gaussian-LIL":
        raise ValueError("mz_check does not apply to the pure Gaussian regime; use lil_statistic")
    t0 = time.perf_counter()
    t = time_grid(t_max, points_per_decade)
    eng = Engine(model, t_max)
    paths = simulate_paths(model, n_paths, t, seed, workers=workers, engine=eng)
    c = np.zeros_like(t)
    if report.centering_required:
        rate = analytic_mean_rate(model, eng)
        if rate is None:
            raise ValueError("centering required but the mean is infinite")
        c = rate * t
    est, se = growth_exponent(paths, c, burn_in)
    pred = report.inv_gamma
    tol = default_tolerance(report.eta) if tol is None else tol
    sharp = report.bullet in (1, 2, 3)
    upper = est <= pred + tol
    lower = (est >= pred - tol) if sharp else True
    checks = {"upper": bool(upper), "lower": bool(lower), "sharp": sharp}
    X = np.vstack([p.xstar for p in paths]) - c[None, :]
    log_stat = None
    if report.normalizer == cond.NORM_LOG:
        tail = t >= math.sqrt(t_max)
        tail &= t > math.e
        norm = t[tail] ** report.inv_gamma * np.log(t[tail])
        log_stat = float(np.median(np.max(np.abs(X[:, tail]) / norm, axis=1)))
        checks["log_factor"] = bool(log_stat <= 1 + tol)
    passed = all(v for k, v in checks.items() if k != "sharp")
    curve = {"t": t.tolist(), "median_running_max": np.median(running_max(X), axis=0).tolist(),
             "normalizer": (t ** pred).tolist()}
    return ExperimentReport(model.name, "exponent", report.regime, est, se, pred, tol, passed,
                            n_paths, float(t_max), int(seed), log_statistic=log_stat, checks=checks,
                            curve=curve, runtime=time.perf_counter() - t0)


def lil_grid(t_max: float, points_per_decade: int = 50) -> np.ndarray:
    return time_grid(t_max, points_per_decade)


def lil_statistic(model: ModelSpec, n_paths: int = 200, t_max: float = 1e4, seed: int = 0, *,
                  workers: int | None = None, points_per_decade: int = 50) -> ExperimentReport:
    """Median over paths of ``sup_{t in [t_max/10, t_max]} |X*(t) - E X*(t)| / sqrt(2 t loglog t)``.

    The target is the asymptotic standard deviation rate
    ``sqrt((b + m2) int f1^2 dpi)``; the check passes when the ratio lies in the band.
    """
    t0 = time.perf_counter()
    t = lil_grid(t_max, points_per_decade)
    eng = Engine(model, t_max)
    paths = simulate_paths(model, n_paths, t, seed, workers=workers, engine=eng)
    rate = analytic_mean_rate(model, eng)
    if rate is None:
        raise ValueError("the LIL statistic needs a finite mean")
    X = np.vstack([p.xstar for p in paths]) - rate * t[None, :]
    win = (t >= t_max / 10) & (t > math.e)
    norm = np.sqrt(2 * t[win] * np.log(np.log(t[win])))
    stat = float(np.median(np.max(np.abs(X[:, win]) / norm, axis=1)))
    mv = cond.mean_variance(model.levy, model.mixing, model.kernel, model.a, 1.0, b=model.b,
                            centering=eng.centering)
    target = math.sqrt(mv.long_run_variance)
    degenerate = target == 0 or stat == 0
    ratio = stat / target if target > 0 else None
    passed = (not degenerate) and ratio is not None and LIL_BAND[0] <= ratio <= LIL_BAND[1]
    regime = "gaussian-LIL" if model.levy.is_zero and model.b > 0 else "finite-var-LIL"
    curve = {"t": t.tolist(), "median_abs": np.median(np.abs(X), axis=0).tolist(),
             "normalizer": (target * np.sqrt(2 * t * np.log(np.log(np.maximum(t, math.e))))).tolist()}
    return ExperimentReport(model.name, "lil", regime, None, None, None, None, bool(passed),
                            n_paths, float(t_max), int(seed), lil_statistic=stat, lil_target=target,
                            lil_ratio=ratio, degenerate=degenerate, checks={"band": list(LIL_BAND)},
                            curve=curve, runtime=time.perf_counter() - t0)


@dataclass
class PoissonBounds:
    factorial: float | None
    exponential: float | None
    exp_refused: bool


def poisson_factorial_bound(ell: float, n: int) -> float:
    """``ell^n / n!`` bounds ``P(N_ell >= n)``."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    return math.exp(n * math.log(ell) - math.lgamma(n + 1))


def poisson_exp_bound(ell: float, x: float) -> float:
    """``exp(-0.19 x)`` bounds ``P(N_ell >= x)`` for ``x >= 2 ell``."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    if x < 2 * ell:
        raise ValueError("the exponential bound needs x >= 2 ell")
    return math.exp(-0.19 * x)


def poisson_tail_bounds(ell: float, x: float) -> PoissonBounds:
    """Both tail bounds at ``x``; the exponential one is refused when ``x < 2 ell``."""
    if ell <= 0:
        raise ValueError("ell must be positive")
    fact = poisson_factorial_bound(ell, int(x)) if float(x).is_integer() and x >= 0 else None
    refused = x < 2 * ell
    return PoissonBounds(fact, None if refused else poisson_exp_bound(ell, x), refused)
