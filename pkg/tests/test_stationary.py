import math
from dataclasses import replace

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from stochlv.errors import (
    BoundaryExtinct,
    CriticalCase,
    MomentDiverges,
    NoStationaryDensity,
    ValidationError,
)
from stochlv.model import EXAMPLE_1, EXAMPLE_2, EXAMPLE_3, ModelParams
from stochlv.stationary import (
    BoundarySpec,
    Regime,
    boundary_spec,
    classify_stochastic,
    lambda1,
    lambda1_with_error,
    lambda2,
    lambda_linear,
    moment,
    moment_with_error,
    stationary_density,
)


def quad_speed_moment(a, b, alpha, p):
    """Q_p by adaptive quadrature of the raw phi-space formula."""
    def log_speed(x):
        return -4 * math.log(x) + 2 * b / (alpha ** 2 * x) - a / (alpha ** 2 * x ** 2)

    # root of 4 alpha^2 x^2 + 2 b x - 2 a
    mode = (-b + math.sqrt(b * b + 8 * a * alpha ** 2)) / (4 * alpha ** 2)
    shift = log_speed(mode)
    kw = dict(epsabs=0, epsrel=1e-12, limit=500)
    f = lambda x, q: x ** q * math.exp(log_speed(x) - shift)
    pieces = [(0, mode), (mode, 10 * mode), (10 * mode, math.inf)]
    num = sum(integrate.quad(f, lo, hi, args=(p,), **kw)[0] for lo, hi in pieces)
    den = sum(integrate.quad(f, lo, hi, args=(0,), **kw)[0] for lo, hi in pieces)
    return num / den


@pytest.mark.parametrize("a,b,alpha", [(4, 1.5, 0.25), (3, 1, 0.5), (2, 1, 1), (0.5, 5, 2), (5, 0.5, 0.1)])
@pytest.mark.parametrize("p", [1, 2, -1, 0.5])
def test_moments_against_scipy(a, b, alpha, p):
    d = stationary_density(BoundarySpec(a, b, alpha))
    assert moment(d, p) == pytest.approx(quad_speed_moment(a, b, alpha, p), rel=1e-9)


def test_pdf_matches_closed_form():
    a, b, alpha = 3.0, 1.0, 0.5
    d = stationary_density(BoundarySpec(a, b, alpha))
    grid = np.geomspace(0.05, 40, 100)
    raw = grid ** -4.0 * np.exp(2 * b / alpha ** 2 / grid - a / alpha ** 2 / grid ** 2)
    c, _ = integrate.quad(lambda x: x ** -4.0 * math.exp(2 * b / alpha ** 2 / x - a / alpha ** 2 / x ** 2),
                          0, math.inf, epsabs=0, epsrel=1e-13, limit=500)
    np.testing.assert_allclose(d.pdf(grid), raw / c, rtol=1e-8)
    assert d.normalizing_constant == pytest.approx(1 / c, rel=1e-8)


@given(st.floats(0.5, 5), st.floats(0.5, 5), st.floats(0.1, 2))
@settings(max_examples=50, deadline=None)
def test_quadratic_identity(a, b, alpha):
    d = stationary_density(BoundarySpec(a, b, alpha))
    assert b * moment(d, 1) + 0.5 * alpha ** 2 * moment(d, 2) == pytest.approx(a, rel=1e-8)
    assert moment(d, 0) == pytest.approx(1.0, abs=1e-10)


@given(st.floats(0.5, 5), st.floats(0.5, 5), st.floats(0.1, 1.5), st.floats(0.05, 1.0))
@settings(max_examples=30, deadline=None)
def test_mixed_identity(a, b, alpha, gamma):
    # stationarity of ln(phi): mean log-drift vanishes
    spec = BoundarySpec(a, b, alpha, gamma)
    if spec.survival_rate <= 0.05:
        return
    d = stationary_density(spec)
    lhs = a - gamma ** 2 / 2 - (b + alpha * gamma) * moment(d, 1) - alpha ** 2 / 2 * moment(d, 2)
    assert lhs == pytest.approx(0.0, abs=1e-8 * a)


def test_mixed_density_against_symbolic_antiderivative():
    a, b, alpha, gamma = sp.Rational(3), sp.Rational(1), sp.Rational(1, 2), sp.Rational(1, 2)
    x = sp.symbols("x", positive=True)
    ratio = sp.apart(2 * x * (a - b * x) / (x * (gamma + alpha * x)) ** 2, x)
    logspeed = sp.integrate(ratio, x) - 2 * sp.log(x * (gamma + alpha * x))
    fn = sp.lambdify(x, logspeed, "math")
    d = stationary_density(BoundarySpec(3, 1, 0.5, 0.5))
    grid = np.geomspace(0.02, 60, 80)
    got = d.logpdf(grid) - d.logpdf(np.array([2.0]))[0]
    want = np.array([fn(g) for g in grid]) - fn(2.0)
    np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)
    # normalisation of the symbolic density
    total, _ = integrate.quad(lambda t: math.exp(fn(t) - fn(2.0)), 0, math.inf, epsabs=0, epsrel=1e-12, limit=500)
    assert d.pdf(np.array([2.0]))[0] * total == pytest.approx(1.0, rel=1e-8)


def test_linear_density_is_gamma():
    a, b, gamma = 4.0, 1.5, 2.0
    d = stationary_density(BoundarySpec(a, b, 0.0, gamma))
    law = stats.gamma(2 * a / gamma ** 2 - 1, scale=gamma ** 2 / (2 * b))
    grid = np.linspace(0.01, 10, 100)
    np.testing.assert_allclose(d.pdf(grid), law.pdf(grid), rtol=1e-9)
    assert moment(d, 1) == pytest.approx(law.mean(), rel=1e-10)
    np.testing.assert_allclose(d.cdf(grid), law.cdf(grid), atol=1e-10)


def test_linear_thresholds_match_quadrature():
    p = ModelParams(a1=4, a2=3, b1=1.5, b2=1, c1=1, c2=1.3, gamma1=2, gamma2=1.5)
    l1, l2 = lambda_linear(p)
    q1 = moment(stationary_density(boundary_spec(p, 1)), 1)
    q2 = moment(stationary_density(boundary_spec(p, 2)), 1)
    assert l1 == pytest.approx(p.a2 - p.gamma2 ** 2 / 2 - p.c2 * q1, abs=1e-6)
    assert l2 == pytest.approx(p.a1 - p.gamma1 ** 2 / 2 - p.c1 * q2, abs=1e-6)
    assert (lambda1(p), lambda2(p)) == pytest.approx((l1, l2), abs=1e-9)


def test_cdf_properties():
    d = stationary_density(BoundarySpec(2, 1, 1))
    grid = np.geomspace(1e-3, 1e3, 200)
    c = d.cdf(grid)
    assert np.all(np.diff(c) >= 0)
    assert c[0] < 1e-12 and c[-1] > 1 - 1e-6
    mid, _ = integrate.quad(lambda t: float(d.pdf(np.array([t]))[0]), 0, 1.5, epsabs=0, epsrel=1e-11, limit=200)
    assert d.cdf(np.array([1.5]))[0] == pytest.approx(mid, rel=1e-9)


def test_moment_range():
    d = stationary_density(BoundarySpec(2, 1, 1))
    assert d.moment_range[1] == 3.0
    with pytest.raises(MomentDiverges):
        moment(d, 3)
    assert moment(d, -3) > 0
    lin = stationary_density(BoundarySpec(2, 1, 0, 1.5))
    lo, hi = lin.moment_range
    assert hi == math.inf
    assert lo == pytest.approx(1 - 2 * 2 / 1.5 ** 2)


def test_moment_error_is_small():
    d = stationary_density(BoundarySpec(4, 1.5, 0.25))
    q, err = moment_with_error(d, 2)
    assert 0 <= err < 1e-9 * q


def test_density_errors():
    with pytest.raises(NoStationaryDensity):
        stationary_density(BoundarySpec(2, 1))
    with pytest.raises(NoStationaryDensity):
        stationary_density(BoundarySpec(1, 1, 0, 2))
    with pytest.raises(ValidationError):
        BoundarySpec(1, 1, 1, -0.5)
    with pytest.raises(ValidationError):
        BoundarySpec(0, 1, 1)


def test_example_1_second_threshold_is_one():
    # c1 = b2 and beta1 = alpha2, so the species-2 axis identity b Q1 + alpha^2/2 Q2 = a gives lambda2 = a1 - a2 = 1
    assert lambda2(EXAMPLE_1) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p,regime,thm", [
    (EXAMPLE_1, Regime.COEXIST, "sign-coexistence"),
    (EXAMPLE_2, Regime.Y_DIES, "sign-exclusion"),
    (EXAMPLE_3, Regime.BISTABLE, "sign-bistability"),
])
def test_example_regimes(p, regime, thm):
    r = classify_stochastic(p)
    assert (r.regime, r.case) == (regime, thm)
    assert r.to_json()["regime"] == regime.value


@st.composite
def quad_params(draw):
    f = lambda lo, hi: draw(st.floats(lo, hi))
    return ModelParams(f(0.5, 5), f(0.5, 5), f(0.5, 3), f(0.5, 3), f(0.1, 3), f(0.1, 3),
                       f(0.1, 2), f(0.1, 2), f(0.0, 2), f(0.0, 2))


@given(quad_params())
@settings(max_examples=25, deadline=None)
def test_swap_symmetry(p):
    s = p.swap_species()
    assert lambda1(s) == pytest.approx(lambda2(p), rel=1e-12, abs=1e-12)
    try:
        r = classify_stochastic(p)
    except CriticalCase:
        return
    assert classify_stochastic(s).regime == r.regime.swapped()


def test_small_noise_approaches_deterministic():
    p = replace(EXAMPLE_1, alpha1=1e-3, alpha2=1e-3, beta1=1e-3, beta2=1e-3)
    assert lambda1(p) == pytest.approx(p.a2 - p.c2 * p.a1 / p.b1, abs=1e-2)
    assert lambda2(p) == pytest.approx(p.a1 - p.c1 * p.a2 / p.b2, abs=1e-2)


def test_lambda_error_is_reported():
    l1, e1 = lambda1_with_error(EXAMPLE_2)
    assert 0 <= e1 < 1e-8


def test_linear_critical_case_carries_report():
    p = ModelParams(a1=3, a2=2.5, b1=1, b2=1, c1=0.5, c2=1, gamma1=math.sqrt(2), gamma2=1)
    with pytest.raises(CriticalCase) as info:
        classify_stochastic(p)
    assert info.value.report.regime is Regime.UNCLASSIFIED


@pytest.mark.parametrize("g1,g2,regime,thm", [
    (3.0, 1.0, Regime.X_DIES, "linear-x-axis-dies"),
    (1.0, 3.0, Regime.Y_DIES, "linear-y-axis-dies"),
    (3.0, 3.0, Regime.BOTH_DIE, "linear-both-axes-die"),
])
def test_linear_axis_extinction(g1, g2, regime, thm):
    p = ModelParams(a1=2, a2=2, b1=1, b2=1, c1=0.5, c2=0.5, gamma1=g1, gamma2=g2)
    r = classify_stochastic(p)
    assert (r.regime, r.case) == (regime, thm)


def test_boundary_extinct_threshold():
    p = ModelParams(a1=2, a2=2, b1=1, b2=1, c1=0.5, c2=0.5, gamma1=3, gamma2=1)
    with pytest.raises(BoundaryExtinct):
        lambda_linear(p)
