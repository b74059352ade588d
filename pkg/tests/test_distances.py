import math

import numpy as np
import pytest
from scipy import integrate

from tcue_gumbel.asymptotics import alpha_asym, leading_rates
from tcue_gumbel.distances import (
    STANDARD_GUMBEL,
    DistanceReport,
    GumbelReference,
    Metric,
    distance,
    effective_window,
    evaluate_log_cdf,
    gumbel_lower_integral,
    gumbel_upper_integral,
    ks_distance,
    w1_between_laws,
    w1_distance,
)
from tcue_gumbel.exact_law import ExactLaw


@pytest.fixture(scope="module")
def law1e4():
    return ExactLaw.from_params(10**4, 5000)


@pytest.fixture(scope="module")
def law1e5():
    return ExactLaw.from_params(10**5, 5 * 10**4)


@pytest.fixture(scope="module")
def ks1e4(law1e4):
    return ks_distance(law1e4)


@pytest.fixture(scope="module")
def w1_1e4(law1e4):
    return w1_distance(law1e4)


@pytest.fixture(scope="module")
def xw1e5(law1e5):
    return w1_between_laws(law1e5.with_law("X"), law1e5)


# ---- reference law


def test_gumbel_reference_formulas():
    g = STANDARD_GUMBEL
    for x in (-3.0, -0.5, 0.0, 1.0, 7.5):
        assert g.cdf(x) == pytest.approx(math.exp(-math.exp(-x)), rel=1e-15)
        assert g.pdf(x) == pytest.approx(math.exp(-x) * math.exp(-math.exp(-x)), rel=1e-14)
        assert g.survival(x) == pytest.approx(1 - g.cdf(x), abs=1e-15)
    mass, _ = integrate.quad(g.pdf, -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("x", [-8.0, -2.0, 0.0, 1.5, 6.0, 30.0])
def test_gumbel_tail_integrals(x):
    lower, _ = integrate.quad(STANDARD_GUMBEL.cdf, -np.inf, x, epsabs=1e-14)
    upper, _ = integrate.quad(STANDARD_GUMBEL.survival, x, np.inf, epsabs=1e-14)
    assert gumbel_lower_integral(x) == pytest.approx(lower, rel=1e-10, abs=1e-14)
    assert gumbel_upper_integral(x) == pytest.approx(upper, rel=1e-10, abs=1e-14)
    # the upper tail is bounded by exp(-x)
    assert gumbel_upper_integral(x) <= math.exp(-x)


def test_self_distances_vanish():
    assert ks_distance(STANDARD_GUMBEL).value == 0.0
    assert w1_distance(STANDARD_GUMBEL).value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("shift", [0.25, 1.0, 3.0])
def test_shifted_gumbel(shift):
    other = GumbelReference(loc=shift)
    assert w1_distance(other).value == pytest.approx(shift, abs=1e-9)
    # stationary point in u = exp(-x): u* = c / (e^c - 1)
    u = shift / math.expm1(shift)
    exact = math.exp(-u) - math.exp(-u * math.exp(shift))
    rep = ks_distance(other)
    assert rep.value == pytest.approx(exact, abs=1e-14)
    assert rep.argmax_x == pytest.approx(-math.log(u), abs=1e-6)


# ---- KS and W1 against brute force at small n


@pytest.fixture(scope="module")
def law_small():
    return ExactLaw.from_params(300, 150)


def test_ks_against_dense_scan(law_small):
    rep = ks_distance(law_small)
    lo, hi = law_small.lower, 40.0
    xs = np.linspace(lo, hi, 40_001)
    gap = np.abs(np.exp(evaluate_log_cdf(law_small, xs)) - STANDARD_GUMBEL.cdf(xs))
    assert rep.value >= gap.max() - 1e-14
    assert rep.value == pytest.approx(gap.max(), abs=1e-7)
    assert 0.0 < rep.value <= 1.0


def test_w1_against_plain_quadrature(law_small):
    rep = w1_distance(law_small)

    def integrand(x):
        return abs(math.exp(law_small.log_cdf(x)) - STANDARD_GUMBEL.cdf(x))

    lo = law_small.lower
    parts = [
        integrate.quad(STANDARD_GUMBEL.cdf, -np.inf, lo, epsabs=1e-13)[0],
        integrate.quad(integrand, lo, 0.0, epsabs=1e-12, limit=400)[0],
        integrate.quad(integrand, 0.0, 60.0, epsabs=1e-12, limit=400)[0],
        integrate.quad(STANDARD_GUMBEL.survival, 60.0, np.inf, epsabs=1e-14)[0],
    ]
    assert rep.value == pytest.approx(math.fsum(parts), abs=1e-9)
    assert rep.quadrature_error_estimate <= 1e-9


def test_effective_window_contains_mass(law_small):
    lo, hi = effective_window(law_small)
    assert lo >= law_small.lower - 6.0 - 1e-12
    assert math.exp(law_small.log_cdf(lo)) <= 1e-18 and STANDARD_GUMBEL.cdf(lo) <= 1e-18
    assert -math.expm1(law_small.log_cdf(hi)) <= 1e-18 + 1e-30
    assert STANDARD_GUMBEL.survival(hi) <= 1e-18 + 1e-30


def test_parallel_log_cdf_matches_serial(law_small):
    xs = np.linspace(-3, 9, 37)
    np.testing.assert_array_equal(evaluate_log_cdf(law_small, xs, 1), evaluate_log_cdf(law_small, xs, 2))


# ---- report fields


def test_report_ratios_are_definitional(ks1e4, w1_1e4, law1e4):
    rates = leading_rates(law1e4.constants)
    assert ks1e4.metric is Metric.KS
    assert ks1e4.ratio_refined == ks1e4.value / rates.ks_refined
    assert ks1e4.ratio_headline == ks1e4.value / rates.ks_headline
    assert w1_1e4.ratio_refined == w1_1e4.value / rates.w1_refined
    assert ks1e4.to_dict()["metric"] == "KS"
    assert isinstance(ks1e4, DistanceReport)


def test_w1_ratio_band(w1_1e4):
    assert 0.2 <= w1_1e4.ratio_refined <= 3.0


def test_ks_grid_refinement(ks1e4, law1e4):
    doubled = ks_distance(law1e4, grid_points=4096)
    assert abs(doubled.value - ks1e4.value) < 1e-9


def test_ks_maximizer_localized(law1e5):
    rep = ks_distance(law1e5)
    c = law1e5.constants
    assert -c.ell1 < rep.argmax_x < c.ell2


@pytest.mark.xfail(
    strict=True,
    reason="KS is 44% below the Gumbel-correction sup at n=1e4, outside the 35% band (see decisions ledger)",
)
def test_ks_against_alpha_asym_module_example(ks1e4, law1e4):
    c = law1e4.constants
    xs = np.linspace(-c.ell1, c.ell2, 4001)
    pred = max(math.exp(-math.exp(-x)) * abs(math.exp(-x) - alpha_asym(c, x)) for x in xs)
    assert ks1e4.value == pytest.approx(pred, rel=0.35)


# ---- X versus W


def test_xw_integrand_nonnegative(law1e5):
    lx = law1e5.with_law("X")
    xs = np.linspace(lx.cuts.y3, law1e5.cuts.y2, 500)
    assert np.all(lx.cdf(xs) - law1e5.cdf(xs) >= 0)


def test_xw_small_against_rate(xw1e5):
    n = 10**5
    assert xw1e5.metric is Metric.W1_XW
    assert 0 < xw1e5.value <= 0.05 * math.log(math.log(n)) ** 2 / math.log(n)


@pytest.mark.xfail(
    strict=True,
    reason="the displayed bound sqrt(s log s) F_W(y1) is ~1e-63, far below W1(X, W); see decisions ledger",
)
def test_xw_displayed_bound(xw1e5, law1e5):
    c = law1e5.constants
    bound = math.sqrt(c.s_n * c.log_s_n) * law1e5.cdf(law1e5.cuts.y1)
    assert xw1e5.value <= bound


def test_xw_rejects_mismatch(law1e4, law1e5):
    with pytest.raises(ValueError):
        w1_between_laws(law1e5.with_law("X"), law1e4)
    with pytest.raises(ValueError):
        w1_between_laws(law1e5, law1e5)


def test_triangle_inequalities(law1e5, xw1e5):
    lx = law1e5.with_law("X")
    ks_w, ks_x = ks_distance(law1e5), ks_distance(lx)
    xs = np.linspace(lx.cuts.y3, 30.0, 4001)
    sup_xw = np.max(lx.cdf(xs) - law1e5.cdf(xs))
    assert abs(ks_x.value - ks_w.value) <= sup_xw + 1e-9
    w_w, w_x = w1_distance(law1e5), w1_distance(lx)
    assert abs(w_x.value - w_w.value) <= xw1e5.value + 1e-9


def test_distance_dispatch(law_small):
    assert distance(law_small, "KS").value == ks_distance(law_small).value
    assert distance(law_small, Metric.W1).value == w1_distance(law_small).value
    assert distance(law_small, "W1_XW").metric is Metric.W1_XW
