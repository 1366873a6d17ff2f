import math

import numpy as np
import pytest
from scipy import stats

from conftest import atom_model
from mmalab import conditions as cond
from mmalab.experiments import (default_tolerance, growth_exponent, lil_statistic, mz_check,
                                poisson_exp_bound, poisson_factorial_bound, poisson_tail_bounds)
from mmalab.kernels import make_kernel
from mmalab.measures import mixing_measure, zero_measure
from mmalab.simulate import ModelSpec, time_grid


@pytest.mark.parametrize("theta", [0.5, 0.8, 1.0])
def test_growth_exponent_synthetic(theta):
    t = time_grid(1e4, 8)
    rng = np.random.default_rng(4)
    X = t[None, :] ** theta * (1 + 0.01 * rng.standard_normal((50, t.size)))
    est, se = growth_exponent(X, t=t)
    assert abs(est - theta) < 0.02
    assert se < 0.02


def test_growth_exponent_degenerate():
    t = time_grid(1e4, 8)
    with pytest.raises(ValueError, match="degenerate"):
        growth_exponent(np.zeros((5, t.size)), t=t)


def test_growth_exponent_short_grid():
    t = time_grid(10.0, 8)
    with pytest.raises(ValueError):
        growth_exponent(np.tile(t, (3, 1)), t=t)


def test_default_tolerance():
    assert default_tolerance(1.2) == 0.15
    assert default_tolerance(2.0) == 0.1


def test_poisson_examples():
    assert poisson_factorial_bound(1.0, 3) == pytest.approx(1 / 6)
    assert poisson_factorial_bound(1.0, 3) >= stats.poisson.sf(2, 1.0)
    assert stats.poisson.sf(2, 1.0) == pytest.approx(0.0803, abs=1e-4)
    assert poisson_exp_bound(1.0, 2.0) == pytest.approx(math.exp(-0.38))
    assert poisson_exp_bound(1.0, 2.0) >= stats.poisson.sf(1, 1.0)
    assert stats.poisson.sf(1, 1.0) == pytest.approx(0.2642, abs=1e-4)


def test_poisson_exp_refused():
    with pytest.raises(ValueError):
        poisson_exp_bound(5.0, 9.0)
    b = poisson_tail_bounds(5.0, 9.0)
    assert b.exp_refused and b.exponential is None and b.factorial is not None


@pytest.mark.parametrize("ell", [0.1, 0.5, 1.0, 2.0, 5.0, 10.0])
def test_poisson_grid(ell):
    for n in range(1, 51):
        tail = stats.poisson.sf(n - 1, ell)
        b = poisson_tail_bounds(ell, n)
        assert b.factorial >= tail * (1 - 1e-12)
        if n >= 2 * ell:
            assert not b.exp_refused
            assert b.exponential >= tail * (1 - 1e-12)
        else:
            assert b.exp_refused


def test_lil_drift_only_is_degenerate():
    m = ModelSpec(1.0, 0.0, zero_measure(), mixing_measure("finite-atoms", atoms=[(1.0, 1.0)]),
                  make_kernel("supou"), name="drift-only")
    rep = lil_statistic(m, n_paths=3, t_max=1e3, seed=1, points_per_decade=10)
    assert rep.degenerate and not rep.passed
    assert rep.lil_statistic == pytest.approx(0.0, abs=1e-9)


def test_lil_gaussian_small():
    m = ModelSpec(0.0, 1.0, zero_measure(), mixing_measure("finite-atoms", atoms=[(1.0, 1.0)]),
                  make_kernel("supou"), name="gauss")
    rep = lil_statistic(m, n_paths=20, t_max=1e3, seed=2, points_per_decade=20)
    assert rep.regime == "gaussian-LIL"
    assert rep.lil_target == pytest.approx(1.0, rel=1e-6)
    assert 0.2 < rep.lil_ratio < 3.0


def test_mz_report_reproducible():
    m = atom_model(z=1.0, rate=1.0)
    report = cond.classify_model(m.a, m.b, m.levy, m.mixing, m.kernel)
    r1 = mz_check(m, report, n_paths=10, t_max=1e4, seed=7, workers=1)
    r2 = mz_check(m, report, n_paths=10, t_max=1e4, seed=7, workers=2)
    assert r1.as_dict() == r2.as_dict()
    assert "runtime" not in r1.as_dict() and "runtime" in r1.as_dict(include_runtime=True)
    assert r1.predicted == pytest.approx(0.5)


def test_mz_rejects_pure_gaussian():
    m = ModelSpec(0.0, 1.0, zero_measure(), mixing_measure("finite-atoms", atoms=[(1.0, 1.0)]),
                  make_kernel("supou"))
    report = cond.classify_model(m.a, m.b, m.levy, m.mixing, m.kernel)
    with pytest.raises(ValueError):
        mz_check(m, report, n_paths=2, t_max=1e3, seed=1)
