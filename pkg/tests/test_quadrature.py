import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint
from scipy import special as sp

from mmalab import quadrature as quad
from mmalab.special import gammainc_lower, gammainc_upper, gammaincc_inv, upper_gamma


def test_finite_integral_matches_scipy():
    f = lambda x: np.exp(-x) * np.sin(x) ** 2
    res = quad.integrate(f, 0.5, 7.0)
    ref, _ = sint.quad(lambda x: math.exp(-x) * math.sin(x) ** 2, 0.5, 7.0, epsabs=0, epsrel=1e-12)
    assert res.convergent
    assert res.value == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("p, expected", [(-0.5, 2.0), (0.0, 1.0), (1.5, 0.4)])
def test_integrable_singularity_at_zero(p, expected):
    res = quad.integrate(lambda x: x ** p, 0.0, 1.0)
    assert res.convergent
    assert res.value == pytest.approx(expected, rel=1e-7)


def test_divergence_at_zero_is_named():
    res = quad.integrate(lambda x: 1.0 / x, 0.0, 1.0, names=("z→0", "z→∞"))
    assert not res.convergent
    assert math.isinf(res.value)
    assert res.divergent_at == ["z→0"]


def test_divergence_at_infinity_is_named():
    res = quad.integrate(lambda x: x ** -0.9, 1.0, math.inf, names=("z→0", "z→∞"))
    assert not res.convergent
    assert res.divergent_at == ["z→∞"]


def test_slowly_decaying_tail_converges():
    res = quad.integrate(lambda x: x ** -1.5, 1.0, math.inf)
    assert res.convergent
    assert res.value == pytest.approx(2.0, rel=1e-6)


def test_whole_half_line():
    res = quad.integrate(lambda x: np.exp(-x), 0.0, math.inf)
    assert res.value == pytest.approx(1.0, rel=1e-9)


def test_infinite_integrand_signal():
    def f(x):
        raise quad.InfiniteIntegrand("inner")
    res = quad.integrate(f, 0.0, 1.0)
    assert not res.convergent and res.divergent_at == ["inner"]


def test_integral_addition_merges_diagnosis():
    a = quad.Integral(1.0, True)
    b = quad.Integral(math.inf, False, ["z→∞"])
    c = a + b
    assert not c.convergent and c.divergent_at == ["z→∞"]


@given(st.floats(0.05, 20.0), st.floats(1e-6, 60.0))
def test_incomplete_gamma_matches_scipy(a, x):
    assert gammainc_lower(a, np.array([x]))[0] == pytest.approx(sp.gammainc(a, x), rel=1e-10, abs=1e-300)
    assert gammainc_upper(a, np.array([x]))[0] == pytest.approx(sp.gammaincc(a, x), rel=1e-9, abs=1e-300)


@given(st.floats(0.1, 10.0), st.floats(1e-12, 1.0))
def test_gamma_inverse_round_trip(a, y):
    x = gammaincc_inv(a, np.array([y]))[0]
    assert gammainc_upper(a, np.array([x]))[0] == pytest.approx(y, rel=1e-9)


@pytest.mark.parametrize("s", [-1.5, -1.0, -0.5, 0.0, 0.5, 2.0])
def test_upper_gamma_against_scipy(s):
    x = np.array([0.1, 1.0, 5.0])
    ref = [sint.quad(lambda t: t ** (s - 1) * math.exp(-t), xi, math.inf, epsrel=1e-12)[0] for xi in x]
    assert np.allclose(upper_gamma(s, x), ref, rtol=1e-8)
