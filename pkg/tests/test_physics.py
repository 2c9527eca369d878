import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from emcrt.physics import (DEFAULT_CONSTANTS, NORM, Constant, DomainError, FrequencyGroupGrid,
                           LarsenType, PhysicalConstants, PowerLaw, PowThreeSqrtT,
                           derivative_coefficient, fraction_between, group_fraction,
                           group_planck, group_planck_derivative, opacity_from_dict,
                           opacity_to_dict, planck, planck_cdf, rosseland_mean)

AC = DEFAULT_CONSTANTS.ac
FULL = FrequencyGroupGrid(np.array([1e-8, 1e5]), "explicit")

# 30-digit mpmath quadrature of (15/pi^4) t^3/(e^t - 1)
FRACTIONS = [
    (0.01, 0.5, 0.0052931083624953190647),
    (0.5, 3.0, 0.38772228077324306192),
    (2.0, 5.0, 0.57338840587637921069),
    (3.0, 40.0, 0.60698455972653569352),
    (10.0, 20.0, 0.009547099122091662435),
    (1e-3, 1e-2, 5.1086370090273990659e-8),
]


@pytest.mark.parametrize("x1,x2,ref", FRACTIONS)
def test_fraction_matches_high_precision_quadrature(x1, x2, ref):
    assert fraction_between(x1, x2) == pytest.approx(ref, rel=1e-13)


def test_cdf_halves_are_complementary():
    x = np.geomspace(1e-4, 200, 400)
    head, tail = planck_cdf(x)
    np.testing.assert_allclose(head + tail, 1.0, atol=2e-16)
    assert np.all(np.diff(head) >= 0)


def test_planck_integrates_to_act4_over_4pi():
    T = 0.7
    val, _ = quad(lambda e: planck(e, T), 1e-10, 60 * T, limit=200)
    assert val == pytest.approx(AC * T**4 / (4 * np.pi), rel=1e-10)


def test_planck_rejects_nonpositive_inputs():
    with pytest.raises(DomainError):
        planck(1.0, 0.0)
    with pytest.raises(DomainError):
        planck(-1.0, 1.0)
    with pytest.raises(DomainError):
        group_fraction(FULL, np.array([1.0, -2.0]))


@pytest.mark.parametrize("T", [1e-3, 0.1, 1.0, 10.0])
def test_full_span_sums(T):
    grid = FrequencyGroupGrid.log(40, 1e-8 * T, 1e4 * T)
    b = group_fraction(grid, T)
    assert 1 - 1e-8 <= b.sum() <= 1.0
    B = group_planck(grid, T)
    assert 4 * np.pi * B.sum() == pytest.approx(AC * T**4, rel=1e-8)
    dB = group_planck_derivative(grid, T)
    assert 4 * np.pi * dB.sum() == pytest.approx(4 * AC * T**3, rel=1e-8)


def test_derivative_coefficient_matches_quadrature():
    # (15/pi^4)/4 int_1^2 t^4 e^t/(e^t-1)^2 dt, 30-digit mpmath
    grid = FrequencyGroupGrid(np.array([1.0, 2.0]), "explicit")
    assert derivative_coefficient(grid, 1.0)[0] == pytest.approx(0.072523161231737236817,
                                                                 rel=1e-13)


def test_derivative_against_finite_differences():
    rng = np.random.default_rng(5)
    grid = FrequencyGroupGrid.log(12, 1e-3, 50.0)
    for _ in range(100):
        T = 10 ** rng.uniform(-2, 1)
        g = int(rng.integers(grid.G))
        h = 1e-6 * T
        fd = (group_planck(grid, T + h, g) - group_planck(grid, T - h, g)) / (2 * h)
        an = group_planck_derivative(grid, T, g)
        assert an == pytest.approx(fd, rel=1e-6, abs=1e-12 * AC * T**3)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-3, 30.0), st.integers(1, 30))
def test_group_fractions_nonnegative_and_bounded(T, G):
    grid = FrequencyGroupGrid.log(G, 1e-4, 100.0)
    b = group_fraction(grid, T)
    assert np.all(b >= 0)
    assert b.sum() <= 1.0 + 1e-14
    coef = derivative_coefficient(grid, T)
    assert coef.sum() <= 1.0 + 1e-12


def test_rosseland_gray_and_positive():
    grid = FrequencyGroupGrid.log(10, 1e-4, 1e3)
    s = np.full(10, 7.5)
    assert rosseland_mean(grid, s, 1.0) == pytest.approx(7.5, rel=1e-12)
    with pytest.raises(DomainError):
        rosseland_mean(grid, np.zeros(10), 1.0)
    # harmonic: dominated by the most transparent groups
    s = np.geomspace(1, 1e4, 10)
    assert rosseland_mean(grid, s, 1.0) < np.average(s)


def test_larsen_group_average_against_quadrature():
    # 30-digit mpmath values of sigma0/(e2-e1) int (1-exp(-e/T))/e^3 de
    cases = [(1.0, 0.5, 0.1, 0.2, 87.376293715115581555),
             (1000.0, 1e-2, 1e-3, 1e-2, 8867273529.2998697155),
             (1.0, 2.0, 1.0, 5.0, 0.064761862624972073928)]
    for s0, T, e1, e2, ref in cases:
        grid = FrequencyGroupGrid(np.array([e1, e2]), "explicit")
        assert LarsenType(s0).group_average(grid, np.array([T]))[0, 0] == pytest.approx(ref, rel=1e-10)


def test_pow_three_sqrt_group_average():
    cases = [(10.0, 0.5, 0.1, 0.2, 5303.3008588991055498),
             (1000.0, 1e-3, 1e-3, 1e-2, 1739252713092.6083383)]
    for s0, T, e1, e2, ref in cases:
        grid = FrequencyGroupGrid(np.array([e1, e2]), "explicit")
        assert PowThreeSqrtT(s0).group_average(grid, np.array([T]))[0, 0] == pytest.approx(ref, rel=1e-12)


def test_gray_models():
    T = np.array([0.5, 1.0, 2.0])
    np.testing.assert_allclose(PowerLaw(300.0, 3.0).group_average(FULL, T)[:, 0], 300 / T**3)
    np.testing.assert_allclose(Constant(2.5).group_average(FULL, T), 2.5)


@pytest.mark.parametrize("model", [Constant(1e-8), PowerLaw(300.0, 3.0), PowThreeSqrtT(10.0),
                                   LarsenType(1000.0)])
def test_opacity_dict_round_trip(model):
    assert opacity_from_dict(opacity_to_dict(model)) == model


def test_unknown_opacity_model():
    with pytest.raises(ValueError):
        opacity_from_dict({"model": "nope", "sigma0": 1.0})


def test_log_grid_and_equality():
    g = FrequencyGroupGrid.log(50, 1e-5, 10.0)
    assert g.G == 50
    assert g.lo[0] == pytest.approx(1e-5) and g.hi[-1] == pytest.approx(10.0)
    np.testing.assert_allclose(np.diff(np.log(g.edges)), np.log(1e6) / 50)
    assert g == FrequencyGroupGrid.log(50, 1e-5, 10.0)
    assert hash(g) == hash(FrequencyGroupGrid.log(50, 1e-5, 10.0))


def test_separate_emission_light_speed():
    k = PhysicalConstants(29.98e6, 0.01372, c_planck=29.98)
    assert k.ac == pytest.approx(0.01372 * 29.98)
    assert NORM == pytest.approx(15 / np.pi**4)
