import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate as sint

from mmalab import conditions as cond
from mmalab.kernels import ExpPsi, SupfOU, SupOU, Trawl, make_kernel
from mmalab.measures import levy_measure, mixing_measure, zero_measure

INF = math.inf


def atoms(*pairs):
    return levy_measure("atom-list", atoms=list(pairs))


def unit_atom(x=1.0):
    return mixing_measure("finite-atoms", atoms=[(x, 1.0)])


def slow_mixing(alpha=0.5):
    return mixing_measure("power", exponent=alpha, support=(0.0, 1.0))


# (C_gamma)

def test_c_gamma_atom():
    rep = cond.evaluate_c_gamma(atoms((2.0, 0.3)), unit_atom(), SupOU(), 1.0)
    assert rep.convergent and rep.value == pytest.approx(0.6)


def test_c_gamma_trivially_zero():
    lam = levy_measure("power-density", exponent=1.2, support=(0.0, 1.0), sign_mix=0.5)
    rep = cond.evaluate_c_gamma(lam, unit_atom(), make_kernel("ma-box", q=1.0), 1.5)
    assert rep.convergent and rep.value == 0.0


def test_c_gamma_divergent_big_jumps():
    lam = levy_measure("power-density", exponent=1.2)
    rep = cond.evaluate_c_gamma(lam, slow_mixing(), SupOU(), 1.3)
    assert not rep.convergent and math.isinf(rep.value)
    assert "z→∞" in rep.divergent_at
    bad = [name for name, t in rep.terms.items() if not t.convergent]
    assert bad and all(n in ("slow_big_jumps", "fast_big_jumps") for n in bad)


def _c_gamma_oracle(lam_side_density, pi_density, x_lo, x_hi, gamma):
    """Direct double integral over x and z for supOU (f1 = 1/x) by nested scipy quadrature."""
    def inner(x):
        lo = x  # |z| f1(x) > 1  <=>  z > x
        return sint.quad(lambda z: z ** gamma * lam_side_density(z), lo, INF, epsrel=1e-11, limit=400)[0]
    return sint.quad(lambda x: x ** -gamma * inner(x) * pi_density(x), x_lo, x_hi, epsrel=1e-10, limit=400)[0]


@pytest.mark.parametrize("gamma", [0.0, 0.5, 1.0, 1.4])
def test_c_gamma_against_nested_quadrature(gamma):
    lam = levy_measure("tempered-power", exponent=0.8, rate=1.0)
    pi = mixing_measure("gamma-density", shape=2.5, rate=1.0)
    dens = lambda z: float(lam.pos.density(np.array([z]))[0])
    pdens = lambda x: float(pi.density(np.array([x]))[0])
    ref = _c_gamma_oracle(dens, pdens, 0.0, 50.0, gamma)
    for method in ("split", "direct"):
        rep = cond.evaluate_c_gamma(lam, pi, SupOU(), gamma, method=method)
        assert rep.convergent
        assert rep.value == pytest.approx(ref, rel=1e-6)


def test_split_resums_to_direct():
    lam = levy_measure("compound-poisson", rate=1.0, distribution="pareto", shape=2.5)
    pi = slow_mixing(1.5)
    a = cond.evaluate_c_gamma(lam, pi, SupOU(), 1.8, method="split")
    b = cond.evaluate_c_gamma(lam, pi, SupOU(), 1.8, method="direct")
    assert a.convergent and b.convergent
    assert a.value == pytest.approx(b.value, rel=1e-7)
    assert sum(t.value for t in a.terms.values()) == pytest.approx(a.value, rel=1e-12)


def test_gamma_range_checked():
    with pytest.raises(ValueError):
        cond.evaluate_c_gamma(atoms((1.0, 1.0)), unit_atom(), SupOU(), 2.5)


PARAMETRIC = [
    (levy_measure("power-density", exponent=1.5), slow_mixing(0.5), SupOU()),
    (levy_measure("power-density", exponent=1.2), slow_mixing(1.5), SupOU()),
    (levy_measure("compound-poisson", rate=1, distribution="pareto", shape=1.7), unit_atom(), SupOU()),
    (levy_measure("tempered-power", exponent=1.2, rate=1.0), slow_mixing(0.3), SupOU()),
]


@pytest.mark.parametrize("lam, pi, k", PARAMETRIC)
def test_c_gamma_monotone_in_gamma(lam, pi, k):
    flags = [cond.evaluate_c_gamma(lam, pi, k, g).convergent for g in np.linspace(0, 2, 17)]
    # once divergent, stays divergent
    assert flags == sorted(flags, reverse=True)


# indices

def test_alpha_atoms_and_ma():
    assert math.isinf(cond.mixing_index(unit_atom(), SupOU()).value)
    assert math.isinf(cond.mixing_index(unit_atom(), make_kernel("ma-box", q=2)).value)


@pytest.mark.parametrize("a_star", [0.25, 0.5, 1.5])
def test_alpha_power_density(a_star):
    pi = slow_mixing(a_star)
    for method in ("auto", "scan"):
        idx = cond.mixing_index(pi, SupOU(), method=method)
        assert idx.value == pytest.approx(a_star, abs=1e-6)
        assert not idx.attained


def test_alpha_requires_integrable_f1():
    with pytest.raises(ValueError):
        cond.mixing_index(mixing_measure("power", exponent=-0.5, support=(0.0, 1.0)), SupOU())


# classification

def _oracle(a, b, e):
    """Smallest admissible 1/gamma and openness, with exact rational arithmetic."""
    a, b, e = Fraction(a), Fraction(b), Fraction(e)
    if a >= 1:
        return 1 / min(Fraction(2), e), False
    if b <= 1 + a:
        return 1 / min(e, 1 + a), False
    cand = 1 - a / b
    return (cand, True) if cand >= 1 / e else (1 / e, False)


def _oracle_bullet(a, b, e):
    a, b, e = Fraction(a), Fraction(b), Fraction(e)
    if a >= 1:
        return 1 if e >= 2 else 2
    if e <= 1 + a and b <= 1 + a:
        return 2
    if e > 1 + a:
        return 3 if b <= 1 + a else 4
    return 5 if e < 1 / (1 - a / b) else 6


def test_classify_examples():
    assert cond.classify_rate(1.5, 1.0, 2.5).inv_gamma == 0.5
    r = cond.classify_rate(0.5, 1.2, 2.0)
    assert r.inv_gamma == pytest.approx(2 / 3) and r.bullet == 3
    r = cond.classify_rate(0.5, 1.8, 1.2)
    assert r.inv_gamma == pytest.approx(5 / 6) and r.bullet == 5
    assert len(r.candidates) == 2


GRID = [0.25 * i for i in range(1, 11)]


def _check_against_oracle(a, b, e):
    r = cond.classify_rate(a, b, e)
    inv, is_open = _oracle(a, b, e)
    assert r.gamma_open == is_open
    expected = float(inv) + (cond.DEFAULT_SLACK if is_open else 0.0)
    assert r.inv_gamma == pytest.approx(expected, rel=1e-12)
    assert r.bullet == _oracle_bullet(a, b, e)
    assert r.regime == cond.REGIMES[r.bullet]
    assert r.inv_gamma >= 0.5
    assert r.centering_required == (r.gamma_usable >= 1)


@given(st.sampled_from(GRID), st.sampled_from(GRID), st.sampled_from(GRID))
def test_classify_matches_oracle(a, b, e):
    _check_against_oracle(a, b, e)


def test_classify_exhaustive_grid():
    for a in GRID:
        for b in GRID:
            for e in GRID:
                _check_against_oracle(a, b, e)


def test_classify_model_atom():
    r = cond.classify_model(0, 0, atoms((1.0, 1.0)), unit_atom(), SupOU())
    assert r.regime == "α ≥ 1, η ≥ 2" and r.inv_gamma == 0.5
    assert r.lil_regime == "finite-var-LIL"


def test_classify_gaussian():
    r = cond.classify_model(0, 2.0, zero_measure(), unit_atom(), SupOU())
    assert r.regime == "gaussian-LIL" and r.normalizer == cond.NORM_LIL


def test_classify_infinite_variation_log_factor():
    lam = levy_measure("power-density", exponent=1.3, support=(0.0, 1.0))
    r = cond.classify_model(0, 0, lam, slow_mixing(0.5), SupOU())
    assert r.normalizer == cond.NORM_LOG


def test_classify_infinite_pi_partial():
    r = cond.classify_rate(0.5, 1.0, 2.0, finite_pi=False)
    assert r.partial and r.notes


# existence

def test_existence_gaussian_only():
    rep = cond.check_existence(0, 1.0, zero_measure(), slow_mixing(0.5), SupOU())
    assert rep.exists and rep.conditions["gaussian"].convergent


def test_existence_fails_without_inverse_moment():
    rep = cond.check_existence(0, 0, atoms((1.0, 1.0)), slow_mixing(0.0), SupOU())
    assert not rep.exists


def test_existence_trivial():
    rep = cond.check_existence(0, 0, zero_measure(), unit_atom(), SupOU())
    assert rep.exists and rep.trivial


def test_existence_infinite_variation_centered():
    lam = levy_measure("power-density", exponent=1.5, support=(0.0, 1.0), sign_mix=0.5)
    assert cond.check_existence(0, 0, lam, unit_atom(), SupOU()).exists


# supfOU existence

def test_supfou_cases():
    tempered = levy_measure("tempered-power", exponent=1.5, rate=1.0)
    r = cond.check_supfou_existence(0.6, tempered, unit_atom())
    assert r.exists and r.clause == "i"
    r = cond.check_supfou_existence(0.3, levy_measure("power-density", exponent=1.5, support=(0.0, 1.0)), unit_atom())
    assert not r.exists and r.clause == "iii" and "small_jump" in r.decided_by
    r = cond.check_supfou_existence(0.5, atoms((2.0, 1.0), (-0.1, 3.0)), unit_atom())
    assert r.exists and r.clause == "ii"


def test_supfou_needs_positive_kappa():
    with pytest.raises(ValueError):
        cond.check_supfou_existence(0.0, atoms((1.0, 1.0)), unit_atom())


# Fubini

def test_fubini_trawl_sufficient_shortcuts():
    lam = levy_measure("power-density", exponent=0.8)
    k = Trawl(ExpPsi(1.0))
    rep = cond.check_fubini(0, 0, lam, k.default_mixing(), k)
    assert rep.cond1.via == "bounded kernel"
    assert rep.cond2.via == "finite mixing measure"
    assert rep.cond3.holds


def test_fubini_supou_nonincreasing():
    rep = cond.check_fubini(0, 0, levy_measure("power-density", exponent=0.8), slow_mixing(0.5), SupOU())
    assert rep.cond3.holds and rep.cond3.via.startswith("non-increasing")


def test_fubini_mean_shortcut():
    rep = cond.check_fubini(0, 0, atoms((3.0, 1.0)), unit_atom(2.0), SupOU())
    assert rep.shortcut and rep.holds
    assert rep.first_moment_bound == pytest.approx(1.5)


def test_fubini_supfou_plateau():
    rep = cond.check_fubini(0, 0, levy_measure("power-density", exponent=1.5), unit_atom(), SupfOU(2.0))
    assert rep.cond3.via == "plateau majorant"


# subordinator tail and moments

def test_subordinator_tail_examples():
    assert cond.subordinator_tail(atoms((2.0, 0.3)), unit_atom(), SupOU(), 1.0) == pytest.approx(0.3)
    assert cond.subordinator_tail(atoms((2.0, 0.3)), unit_atom(), SupOU(), 3.0) == 0.0
    lam = levy_measure("power-density", exponent=1.5, scale=1.5)  # tail s^-1.5
    pi = mixing_measure("uniform", support=(1.0, 2.0))
    assert cond.subordinator_tail(lam, pi, SupOU(), 1.0) == pytest.approx(2 - math.sqrt(2), rel=1e-9)


@given(st.floats(1e-2, 1e2), st.floats(1.0, 100.0))
def test_subordinator_tail_nonincreasing(r, factor):
    lam = levy_measure("power-density", exponent=1.5)
    pi = slow_mixing(1.0)
    assert cond.subordinator_tail(lam, pi, SupOU(), r * factor) <= cond.subordinator_tail(lam, pi, SupOU(), r) * (1 + 1e-9)


def test_mean_variance_atom():
    mv = cond.mean_variance(atoms((2.0, 0.3)), unit_atom(), SupOU(), 0.0, 5.0)
    assert mv.mean == pytest.approx(0.6 * 5)
    assert mv.var_subordinator == pytest.approx(1.2)


def test_mean_variance_gaussian_asymptote():
    mv = cond.mean_variance(zero_measure(), unit_atom(), SupOU(), 0.0, 1e3, b=2.0)
    assert mv.q / 1e3 == pytest.approx(1.0, rel=0.01)


def test_centering_drift_modes():
    lam = levy_measure("power-density", exponent=0.5, support=(0.0, 1.0))
    assert cond.centering_drift(lam, 7.0, "raw") == 7.0
    ref = sint.quad(lambda z: z * z ** -1.5, 0, 1)[0]
    assert cond.centering_drift(lam, 7.0, "small-jump-mean") == pytest.approx(ref, rel=1e-9)


def test_existence_pareto_closed_form():
    # unit-scale Pareto(1.5) jumps with an exponential kernel:
    # int V0(y)/y dy = 8/3 - 3/2 and int U(y)/y dy = 3 - 2
    lam = levy_measure("compound-poisson", rate=1.0, distribution="pareto", shape=1.5)
    rep = cond.check_existence(0.0, 0.0, lam, unit_atom(), SupOU())
    assert rep.exists
    assert rep.conditions["jumps"].value == pytest.approx(7 / 6, rel=1e-8)
    assert rep.conditions["drift"].value == pytest.approx(1.0, rel=1e-8)
