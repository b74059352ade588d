import math
from fractions import Fraction

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from oracles import betainc_mp

from tcue_gumbel.special_functions import (
    CancellationError,
    TailMethod,
    asymptotic_band_constant,
    gaussian_tail,
    inc_beta_step,
    log_beta_survival,
    log_gamma,
    log_reg_inc_beta,
    reg_inc_beta,
)


def binomial_tail(t: Fraction, a: int, b: int) -> Fraction:
    """Exact I_t(a, b) for integer a, b: P(Bin(a+b-1, t) >= a)."""
    N = a + b - 1
    return sum(Fraction(math.comb(N, k)) * t**k * (1 - t) ** (N - k) for k in range(a, N + 1))


# -- log_gamma ---------------------------------------------------------------


def test_log_gamma_trivial_values():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == 0.0
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), rel=1e-15)
    assert log_gamma(10.0) == pytest.approx(math.log(362880.0), rel=1e-15)


@pytest.mark.parametrize("x", np.geomspace(1e-3, 1e9, 400))
def test_log_gamma_matches_mpmath(x):
    ref = mp.loggamma(mp.mpf(float(x)))
    got = log_gamma(float(x))
    assert abs(got - float(ref)) <= 1e-13 * max(abs(float(ref)), 1e-300) or abs(got - float(ref)) <= 1e-16


def test_log_gamma_near_roots_absolute():
    # ln Gamma vanishes at 1 and 2; relative error is meaningless there
    for x in np.linspace(0.9, 2.1, 121):
        assert abs(log_gamma(float(x)) - float(mp.loggamma(float(x)))) <= 2e-16


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_log_gamma_domain(x):
    with pytest.raises(ValueError):
        log_gamma(x)


# -- regularized incomplete beta ------------------------------------------------


def test_reg_inc_beta_closed_forms():
    for m in (1, 3, 50, 1000):
        for t in (1e-6, 0.1, 0.5, 0.9):
            assert reg_inc_beta(t, 1, m) == pytest.approx(-math.expm1(m * math.log1p(-t)), rel=1e-13, abs=1e-15)
    for a in (0.5, 3.0, 40.0, 1e4):
        assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-14)
    # continued-fraction rounding grows like sqrt(a) iterations near the mean
    for a in (1e5, 1e6, 1e7):
        assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-12)


def test_reg_inc_beta_binomial_example():
    exact = sum(math.comb(4, k) * 0.3**k * 0.7 ** (4 - k) for k in range(2, 5))
    assert reg_inc_beta(0.3, 2, 3) == pytest.approx(exact, abs=1e-15)


def test_reg_inc_beta_endpoints_and_domain():
    assert reg_inc_beta(0.0, 2, 3) == 0.0
    assert reg_inc_beta(1.0, 2, 3) == 1.0
    for bad in [(-0.1, 1, 1), (1.1, 1, 1), (0.5, 0, 1), (0.5, 1, -2)]:
        with pytest.raises(ValueError):
            reg_inc_beta(*bad)


def _int_grid():
    rng = np.random.default_rng(11)
    for _ in range(120):
        a = int(rng.integers(1, 150))
        b = int(rng.integers(1, 200 - a + 1))
        t = Fraction(int(rng.integers(1, 1000)), 1000)
        yield t, a, b


@pytest.mark.parametrize("t,a,b", list(_int_grid()))
def test_reg_inc_beta_matches_binomial_tail(t, a, b):
    exact = binomial_tail(t, a, b)
    assert abs(reg_inc_beta(float(t), a, b) - float(exact)) <= 1e-12
    if exact > Fraction(1, 10**300):
        assert reg_inc_beta(float(t), a, b) == pytest.approx(float(exact), rel=1e-10)


def _mp_cases(seed, log_max, count):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        a = float(10 ** rng.uniform(-1, log_max))
        b = float(10 ** rng.uniform(-1, log_max))
        mean = a / (a + b)
        sd = math.sqrt(a * b / ((a + b) ** 2 * (a + b + 1)))
        t = float(np.clip(mean + sd * rng.normal() * 3, 1e-9, 1 - 1e-9))
        yield t, a, b


@pytest.mark.parametrize("t,a,b", list(_mp_cases(5, math.log10(3000), 200)))
def test_reg_inc_beta_matches_mpmath_moderate(t, a, b):
    ref = betainc_mp(a, b, t)
    got = reg_inc_beta(t, a, b)
    assert abs(got - float(ref)) <= 1e-14
    if ref >= mp.mpf("1e-300"):
        assert got == pytest.approx(float(ref), rel=1e-10)


@pytest.mark.parametrize("t,a,b", list(_mp_cases(6, 7, 120)))
def test_reg_inc_beta_matches_mpmath_large(t, a, b):
    # near the mean, rounding grows with the shapes; ~1e-12 is the double-precision reach here
    ref = betainc_mp(a, b, t)
    got = reg_inc_beta(t, a, b)
    assert abs(got - float(ref)) <= 2e-12
    if ref >= mp.mpf("1e-300"):
        assert got == pytest.approx(float(ref), rel=1e-10)


@settings(max_examples=10_000, deadline=None, derandomize=True)
@given(
    t=st.floats(0.0, 1.0),
    a=st.floats(1e-2, 1e5),
    b=st.floats(1e-2, 1e5),
)
def test_reflection_identity(t, a, b):
    assume(1.0 - (1.0 - t) == t)  # both arguments must name the same split of [0, 1]
    assert abs(reg_inc_beta(t, a, b) + reg_inc_beta(1.0 - t, b, a) - 1.0) <= 1e-12


@pytest.mark.parametrize("a", [1e6, 4.4e6, 1e7])
def test_reflection_identity_huge_shapes(a):
    for t, b in [(0.5, a), (0.4999, a), (1 - 3e-5, 40.0)]:
        assert abs(reg_inc_beta(t, a, b) + reg_inc_beta(1.0 - t, b, a) - 1.0) <= 5e-12


def test_monotone_in_t_and_a():
    ts = np.linspace(0.0, 1.0, 401)
    for a, b in [(2.0, 3.0), (50.0, 50.0), (1000.0, 20.0), (3e4, 3e4)]:
        vals = [reg_inc_beta(float(t), a, b) for t in ts]
        assert np.all(np.diff(vals) >= -1e-15)
    for t in (0.2, 0.5, 0.8):
        vals = [reg_inc_beta(t, float(a), 40.0) for a in range(1, 200)]
        assert np.all(np.diff(vals) <= 1e-15)


# -- survival -------------------------------------------------------------------


def test_log_beta_survival_closed_forms():
    assert log_beta_survival(0.0, 3.0, 4.0) == 0.0
    for m in (1, 7, 500):
        for t in (1e-8, 0.3, 0.99):
            assert log_beta_survival(t, 1, m) == pytest.approx(m * math.log1p(-t), rel=1e-14)


def test_log_beta_survival_binomial_example():
    tail = sum(Fraction(math.comb(99, k)) * Fraction(3, 5) ** k * Fraction(2, 5) ** (99 - k) for k in range(50))
    ref = mp.log(mp.mpf(tail.numerator) / tail.denominator)
    assert log_beta_survival(0.6, 50, 50) == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize(
    "t,a,b",
    [(0.9, 2.0, 300.0), (0.5, 1000.0, 3000.0), (0.99, 10.0, 250.0), (0.7, 5e4, 5e4), (0.52, 5e5, 5e5), (0.35, 10.0, 1e4)],
)
def test_log_beta_survival_deep_tail(t, a, b):
    # survival far below double-precision resolution of 1 - I
    ref = mp.log(betainc_mp(a, b, t, upper=True))
    assert ref < -30
    assert log_beta_survival(t, a, b) == pytest.approx(float(ref), rel=1e-8)


def test_log_reg_inc_beta_tiny_values():
    for t, a, b in [(1e-3, 50.0, 5.0), (0.05, 300.0, 100.0)]:
        ref = mp.log(betainc_mp(a, b, t))
        assert log_reg_inc_beta(t, a, b) == pytest.approx(float(ref), rel=1e-10)


# -- recurrence step ----------------------------------------------------------------


def test_inc_beta_step_single():
    for m in (3, 40, 1000):
        for t in (0.01, 0.2, 0.6):
            start = reg_inc_beta(t, 1, m)
            assert inc_beta_step(start, t, 1, m) == pytest.approx(reg_inc_beta(t, 2, m), abs=1e-12)


def test_inc_beta_step_at_one():
    assert inc_beta_step(1.0, 1.0, 3.0, 4.0) == 1.0


def test_inc_beta_step_chain():
    t, p, m = 0.5, 100, 100
    value = reg_inc_beta(t, 1, m)
    for a in range(1, p):
        value = inc_beta_step(value, t, a, m)
    assert value == pytest.approx(reg_inc_beta(t, p, m), abs=1e-9)


def test_inc_beta_step_reports_cancellation():
    # for tiny t the first term exhausts I_t(1, 3): I_t(2, 3)/I_t(1, 3) ~ 1.5 t
    t, b = 1e-14, 3.0
    start = reg_inc_beta(t, 1, b)
    with pytest.raises(CancellationError) as info:
        inc_beta_step(start, t, 1, b)
    assert 0.0 <= info.value.value <= start


# -- Gaussian tail ----------------------------------------------------------------


@pytest.mark.parametrize("z", [0.1, 1.0, 3.0, 7.5, 20.0])
def test_gaussian_tail_r1_exact(z):
    assert gaussian_tail(z, 1, TailMethod.QUADRATURE).value == pytest.approx(math.exp(-z * z / 2), rel=1e-12)


def test_gaussian_tail_r0_normal_cdf():
    ref = float(mp.sqrt(2 * mp.pi) * mp.ncdf(-1))
    assert gaussian_tail(1.0, 0, "quadrature").value == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("z", [0.5, 2.0, 6.0, 12.0, 30.0])
@pytest.mark.parametrize("r", [0.0, 1.5, 2.0, 4.0, 7.0])
def test_gaussian_tail_quadrature_matches_mpmath(z, r):
    ref = mp.quad(lambda t: t**r * mp.exp(-t * t / 2), [z, z + 10, mp.inf])
    res = gaussian_tail(z, r)
    assert res.value == pytest.approx(float(ref), rel=1e-10)
    assert res.estimated_relative_error < 1e-10


@pytest.mark.parametrize("z", [6.0, 8.0, 10.0, 12.0])
@pytest.mark.parametrize("r", [0, 1, 2, 3, 4])
def test_gaussian_tail_asymptotic_band(z, r):
    q = gaussian_tail(z, r, "quadrature").value
    a = gaussian_tail(z, r, "asymptotic").value
    assert abs(a / q - 1) <= asymptotic_band_constant(r) * z**-4


def test_gaussian_tail_z10_r0_example():
    q = gaussian_tail(10.0, 0, "quadrature").value
    a = gaussian_tail(10.0, 0, "asymptotic").value
    assert abs(a / q - 1) <= 3 * (abs((0 - 1) * (0 - 3)) + 1) * 10.0**-4


def test_gaussian_tail_positive_and_decreasing():
    for r in (0.0, 1.0, 3.5):
        vals = [gaussian_tail(float(z), r).value for z in np.linspace(0.2, 30, 80)]
        assert all(v > 0 for v in vals)
        assert np.all(np.diff(vals) < 0)


def test_gaussian_tail_domain():
    with pytest.raises(ValueError):
        gaussian_tail(0.0, 1.0, "asymptotic")
    with pytest.raises(ValueError):
        gaussian_tail(-1.0, 1.0, "quadrature")
