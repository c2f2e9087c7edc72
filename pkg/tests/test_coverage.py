import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nakcov.coverage import (
    CLOSED_FORM,
    FD_ANALYTIC,
    GAMMA_MIXTURE,
    OUTER_QUADRATURE,
    CoverageQuery,
    FadingSpec,
    cancel_dominant,
    coverage_correlated,
    coverage_from_scales,
    coverage_inid,
    coverage_rayleigh_inid,
    coverage_shadowed,
    dominant_interferer,
    shadow_corr_coeff,
    shadow_moment_match,
    shadowed_correlation,
)
from nakcov.errors import DomainError, NonConvergenceError, StrategyUnavailable
from nakcov.gammasum import CorrelationSpec, GammaComponent

BETA = 3.76
DIST = (1732.0, 1732.0, 2000.0)


def unit_k_query(n, k=1.0, T=1.0):
    """A query with r = 1 and unit distances, so k = T / lambda_u and lambda'_i = lambda_i."""
    return CoverageQuery(T, 1.0, (1.0,) * n, BETA)


def direct_mc(user, interferers, distances, r, T, n=1_000_000, seed=0, sigma_db=0.0):
    """Coverage by brute-force sampling with numpy's own gamma/lognormal generators."""
    rng = np.random.default_rng(seed)
    s = sigma_db / 8.686
    g = rng.gamma(user.shape, user.scale, n)
    if s:
        g *= np.exp(s * rng.standard_normal(n))
    interference = np.zeros(n)
    for c, d in zip(interferers, distances):
        h = rng.gamma(c.shape, c.scale, n)
        if s:
            h *= np.exp(s * rng.standard_normal(n))
        interference += h * d ** (-BETA)
    hit = g * r ** (-BETA) > T * interference
    p = hit.mean()
    return p, math.sqrt(p * (1 - p) / n)


def test_single_rayleigh_interferer_half():
    spec = FadingSpec(GammaComponent(1.0, 1.0), (GammaComponent(1.0, 1.0),))
    res = coverage_inid(spec, unit_k_query(1))
    assert res.value == pytest.approx(0.5, abs=1e-15)
    assert res.method == CLOSED_FORM


def test_small_threshold_limit():
    spec = FadingSpec.unit_mean(0.5, (0.5, 1.0, 2.0))
    vals = [coverage_inid(spec, CoverageQuery(t, 600.0, DIST, BETA)).value for t in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2]
    assert vals[2] > 1 - 1e-3


def test_inid_matches_monte_carlo():
    spec = FadingSpec.unit_mean(0.5, (0.5, 1.0, 2.0))
    res = coverage_inid(spec, CoverageQuery(1.0, 600.0, DIST, BETA))
    p, se = direct_mc(spec.user, spec.interferers, DIST, 600.0, 1.0)
    assert abs(res.value - p) < 3 * se


def test_rayleigh_examples():
    two = FadingSpec(GammaComponent(1.0, 1.0), (GammaComponent(1.0, 1.0),) * 2)
    assert coverage_rayleigh_inid(two, unit_k_query(2)).value == pytest.approx(0.25, abs=1e-15)
    one = FadingSpec(GammaComponent(1.0, 1.0), (GammaComponent(2.0, 3.0),))
    res = coverage_rayleigh_inid(one, unit_k_query(1))
    assert res.value == pytest.approx(1 / 16, abs=1e-15)
    assert res.method == CLOSED_FORM and res.est_abs_error == 0


def test_rayleigh_needs_unit_shape():
    with pytest.raises(DomainError):
        coverage_rayleigh_inid(FadingSpec.unit_mean(2.0, (1.0,)), unit_k_query(1))


def test_correlated_2x2_example():
    spec = FadingSpec(GammaComponent(1.0, 1.0), (GammaComponent(1.0, 1.0),) * 2)
    corr = CorrelationSpec.exponential(0.25, 2)
    c = coverage_correlated(spec, unit_k_query(2), corr).value
    assert c == pytest.approx(1 / 3.75, abs=1e-14)
    assert c >= coverage_inid(spec, unit_k_query(2)).value


def test_correlated_rho_zero_equals_inid():
    for alpha_u in (0.5, 1.0, 2.0, 2.7):
        spec = FadingSpec.unit_mean(alpha_u, (1.5,) * 3)
        q = CoverageQuery(2.0, 500.0, DIST, BETA)
        a = coverage_inid(spec, q).value
        b = coverage_correlated(spec, q, CorrelationSpec.exponential(0.0, 3)).value
        assert b == pytest.approx(a, abs=1e-12)


def test_correlated_needs_equal_shapes():
    spec = FadingSpec.unit_mean(1.0, (0.5, 1.0))
    with pytest.raises(DomainError):
        coverage_correlated(spec, unit_k_query(2), CorrelationSpec.exponential(0.5, 2))


def test_shape_below_nakagami_range():
    with pytest.raises(DomainError):
        FadingSpec.unit_mean(0.3, (1.0,))


# all evaluation routes agree

route_cases = st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.sampled_from([0.5, 0.8, 1.0, 1.5, 2.0, 3.0]),
    st.lists(st.floats(0.5, 3.0), min_size=n, max_size=n),
    st.lists(st.floats(-2.0, 1.5), min_size=n, max_size=n),
))


@given(route_cases)
def test_routes_agree(p):
    alpha_u, shapes, log_kl = p
    kl = 10.0 ** np.array(log_kl)
    ref = coverage_from_scales(alpha_u, shapes, kl, OUTER_QUADRATURE).value
    methods = [FD_ANALYTIC] + ([CLOSED_FORM] if alpha_u == 1 else [])
    if kl.max() / kl.min() <= 100:
        # the mixture needs a number of terms growing with the scale spread
        methods.append(GAMMA_MIXTURE)
    for method in methods:
        try:
            val = coverage_from_scales(alpha_u, shapes, kl, method).value
        except (StrategyUnavailable, NonConvergenceError):
            # a < 0 with x_i near 1 has no convergent F_D route; auto mode falls back
            assert method == FD_ANALYTIC and alpha_u > 1
            continue
        assert val == pytest.approx(ref, abs=1e-6)
    auto = coverage_from_scales(alpha_u, shapes, kl)
    assert 0.0 <= auto.value <= 1.0


def test_large_n_fallback_to_outer_quadrature():
    res = coverage_from_scales(1.5, [1.0] * 18, np.full(18, 0.05))
    assert res.method == OUTER_QUADRATURE
    mix = coverage_from_scales(1.5, [1.0] * 18, np.full(18, 0.05), GAMMA_MIXTURE)
    assert res.value == pytest.approx(mix.value, abs=1e-9)


@given(route_cases)
def test_rayleigh_closed_form_matches_general(p):
    _, shapes, log_kl = p
    kl = 10.0 ** np.array(log_kl)
    closed = coverage_from_scales(1.0, shapes, kl, CLOSED_FORM).value
    assert coverage_from_scales(1.0, shapes, kl, FD_ANALYTIC).value == pytest.approx(closed, abs=1e-8)


# monotonicity and scale invariance

mono_cases = st.tuples(
    st.sampled_from([0.5, 1.0, 1.7, 2.0]),
    st.lists(st.floats(0.5, 2.5), min_size=3, max_size=3),
    st.floats(-6, 6),
    st.floats(100.0, 900.0),
)


@given(mono_cases, st.floats(1.01, 3.0))
def test_monotone_in_threshold_and_interferer_scale(p, factor):
    alpha_u, shapes, t_db, r = p
    spec = FadingSpec.unit_mean(alpha_u, shapes)
    q = CoverageQuery(10 ** (t_db / 10), r, DIST, BETA)
    base = coverage_inid(spec, q).value
    assert coverage_inid(spec, q.with_T(q.T * factor)).value <= base + 1e-12
    louder = list(spec.interferers)
    louder[1] = GammaComponent(louder[1].shape, louder[1].scale * factor)
    assert coverage_inid(FadingSpec(spec.user, louder), q).value <= base + 1e-12
    stronger_user = GammaComponent(alpha_u, spec.user.scale * factor)
    assert coverage_inid(FadingSpec(stronger_user, spec.interferers), q).value >= base - 1e-12


@given(mono_cases, st.floats(-8, 8))
def test_scale_invariance(p, log_c):
    alpha_u, shapes, t_db, r = p
    c = 10.0 ** log_c
    spec = FadingSpec.unit_mean(alpha_u, shapes)
    scaled = FadingSpec(GammaComponent(alpha_u, spec.user.scale * c),
                        tuple(GammaComponent(x.shape, x.scale * c) for x in spec.interferers))
    q = CoverageQuery(10 ** (t_db / 10), r, DIST, BETA)
    assert coverage_inid(scaled, q).value == pytest.approx(coverage_inid(spec, q).value, abs=1e-12)


corr_cases = st.tuples(
    st.sampled_from([0.5, 0.75, 1.0]),
    st.sampled_from([0.5, 1.0, 2.0]),
    st.floats(0.0, 0.99),
    st.floats(-6, 6),
    st.floats(100.0, 900.0),
)


@given(corr_cases)
def test_correlation_helps_when_alpha_u_at_most_one(p):
    alpha_u, alpha_c, rho, t_db, r = p
    spec = FadingSpec.unit_mean(alpha_u, (alpha_c,) * 3)
    q = CoverageQuery(10 ** (t_db / 10), r, DIST, BETA)
    corr = CorrelationSpec.exponential(rho, 3)
    assert coverage_correlated(spec, q, corr).value >= coverage_inid(spec, q).value - 1e-9


# shadowing

def test_moment_match_identity_at_zero():
    c = GammaComponent(1.7, 0.4)
    out = shadow_moment_match(c, 0.0)
    assert out.shape == pytest.approx(c.shape, rel=1e-14)
    assert out.scale == pytest.approx(c.scale, rel=1e-14)


def test_moment_match_example():
    out = shadow_moment_match(GammaComponent(1.0, 1.0), 8.686)
    assert out.shape == pytest.approx(1 / (2 * math.e - 1), rel=1e-14)
    assert out.shape == pytest.approx(0.22540, abs=5e-6)
    assert out.scale == pytest.approx(2 * math.exp(1.5) - math.exp(0.5), rel=1e-14)
    assert out.scale == pytest.approx(7.3147, abs=5e-5)


@pytest.mark.parametrize("alpha,lam,sigma_db", [(1.0, 1.0, 6.0), (0.5, 2.0, 4.0), (2.0, 0.5, 8.0)])
def test_moment_match_preserves_two_moments(alpha, lam, sigma_db):
    rng = np.random.default_rng(77)
    n = 1_000_000
    s = sigma_db / 8.686
    y = rng.gamma(alpha, lam, n) * np.exp(s * rng.standard_normal(n))
    out = shadow_moment_match(GammaComponent(alpha, lam), sigma_db)
    assert out.shape * out.scale == pytest.approx(y.mean(), rel=0.01)
    # second moment of the product of independent gamma and lognormal factors
    second = alpha * (alpha + 1) * lam ** 2 * math.exp(2 * s * s)
    assert out.shape * (out.shape + 1) * out.scale ** 2 == pytest.approx(second, rel=1e-12)


def test_moment_match_negative_sigma():
    with pytest.raises(DomainError):
        shadow_moment_match(GammaComponent(1.0, 1.0), -1.0)


def test_shadow_corr_coeff_examples():
    assert shadow_corr_coeff(0.0, 0.0, 1.0, 5.0) == 0.0
    assert shadow_corr_coeff(1.0, 1.0, 2.0, 5.0) == pytest.approx(1.0, abs=1e-15)
    e = math.e
    expected = (0.5 / (e - 1) + 0.5 + 0.25) / (1 + 1 / (e - 1) + 1)
    got = shadow_corr_coeff(0.5, 0.5, 1.0, 8.686)
    assert got == pytest.approx(expected, rel=1e-14)
    assert got == pytest.approx(0.403175, abs=1e-6)


def test_shadow_corr_coeff_errors():
    with pytest.raises(DomainError):
        shadow_corr_coeff(0.5, 0.5, 1.0, 0.0)
    with pytest.raises(DomainError):
        shadow_corr_coeff(1.5, 0.5, 1.0, 3.0)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0.5, 5), st.floats(0.1, 15))
def test_shadow_corr_coeff_in_unit_interval(r1, r2, a, s):
    assert 0.0 <= shadow_corr_coeff(r1, r2, a, s) <= 1.0 + 1e-15


def test_shadowed_correlation_entrywise():
    corr = CorrelationSpec.exponential(0.5, 3)
    out = shadowed_correlation(corr, corr, 1.0, 8.686, 3)
    m = out.rho_matrix()
    assert m[0, 1] == pytest.approx(shadow_corr_coeff(0.5, 0.5, 1.0, 8.686))
    assert m[0, 2] == pytest.approx(shadow_corr_coeff(0.25, 0.25, 1.0, 8.686))
    assert np.allclose(np.diag(m), 1.0)


def test_shadowed_sigma_zero_limit():
    spec = FadingSpec.unit_mean(0.5, (0.5, 1.0, 2.0))
    q = CoverageQuery(1.0, 600.0, DIST, BETA)
    assert coverage_shadowed(spec, q, 0.0).value == pytest.approx(coverage_inid(spec, q).value, abs=1e-10)
    tiny = coverage_shadowed(spec, q, 1e-4).value
    assert tiny == pytest.approx(coverage_inid(spec, q).value, abs=1e-6)


@pytest.mark.xfail(strict=True, reason=(
    "moment matching replaces the user's gamma x lognormal law by a gamma law with shape ~0.26, "
    "which puts too much mass near zero; at 6 dB the analytic value sits ~0.13 below the composite"))
def test_shadowed_matches_composite_mc():
    spec = FadingSpec.unit_mean(0.5, (0.5, 1.0, 2.0))
    q = CoverageQuery(1.0, 600.0, DIST, BETA)
    res = coverage_shadowed(spec, q, 6.0)
    p, _ = direct_mc(spec.user, spec.interferers, DIST, 600.0, 1.0, sigma_db=6.0, seed=6)
    assert abs(res.value - p) < 0.02


@given(st.sampled_from([0.5, 0.75, 1.0]), st.floats(0.5, 12), st.floats(0.0, 0.99), st.floats(-5, 5))
def test_shadowed_correlated_helps(alpha_u, sigma_db, rho, t_db):
    spec = FadingSpec.unit_mean(alpha_u, (1.0,) * 3)
    q = CoverageQuery(10 ** (t_db / 10), 600.0, DIST, BETA)
    corr = CorrelationSpec.exponential(rho, 3)
    assert shadow_moment_match(spec.user, sigma_db).shape <= 1.0
    indep = coverage_shadowed(spec, q, sigma_db).value
    correlated = coverage_shadowed(spec, q, sigma_db, corr, corr).value
    assert correlated >= indep - 1e-9


# dominant interferer cancellation

def test_cancel_dominant():
    spec = FadingSpec.unit_mean(1.0, (1.0, 1.0, 1.0))
    q = CoverageQuery(1.0, 600.0, (2000.0, 1200.0, 1200.0), BETA)
    assert dominant_interferer(spec, q) == 1
    spec2, q2, i = cancel_dominant(spec, q)
    assert i == 1 and q2.distances == (2000.0, 1200.0) and len(spec2.interferers) == 2
    assert coverage_inid(spec2, q2).value > coverage_inid(spec, q).value
