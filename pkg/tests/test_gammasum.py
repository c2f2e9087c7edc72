import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from nakcov.errors import DomainError
from nakcov.gammasum import (
    CorrelationSpec,
    GammaComponent,
    correlated_spectrum,
    draw_unit_gammas,
    gamma_sum,
    jacobi_eigenvalues,
    sample_sum,
    standard_gamma,
    sum_cdf,
    weighted_components,
)


def comps(scales, shape=1.0):
    return [GammaComponent(shape, s) for s in scales]


# weighted_components

@pytest.mark.parametrize("lam,d,beta,expected", [
    (1.0, 1.0, 4.0, 1.0),
    (2.0, 10.0, 2.0, 0.02),
    (1.0, 1732.0, 3.76, 1732.0 ** -3.76),
])
def test_weighted_components(lam, d, beta, expected):
    (out,) = weighted_components([GammaComponent(1.5, lam)], [d], beta)
    assert out.scale == pytest.approx(expected, rel=1e-14)
    assert out.shape == 1.5


def test_weighted_components_hand_value():
    (out,) = weighted_components([GammaComponent(1.0, 1.0)], [1732.0], 3.76)
    assert out.scale == pytest.approx(6.5e-13, rel=0.01)


def test_weighted_components_errors():
    with pytest.raises(DomainError):
        weighted_components([GammaComponent(1, 1)], [1.0, 2.0], 3.0)
    with pytest.raises(DomainError):
        weighted_components([GammaComponent(1, 1)], [0.0], 3.0)


# correlation and spectrum

def test_exponential_rho_matrix_and_c():
    corr = CorrelationSpec.exponential(0.25, 3)
    assert np.allclose(corr.rho_matrix(), [[1, 0.25, 0.0625], [0.25, 1, 0.25], [0.0625, 0.25, 1]])
    assert np.allclose(corr.c_matrix(), [[1, 0.5, 0.25], [0.5, 1, 0.5], [0.25, 0.5, 1]])
    plain = CorrelationSpec.exponential(0.25, 3, sqrt_convention=False)
    assert np.allclose(plain.c_matrix(), plain.rho_matrix())


def test_c_not_positive_definite():
    bad = CorrelationSpec.explicit([[1, 1, 0], [1, 1, 1], [0, 1, 1]])
    with pytest.raises(DomainError):
        bad.c_matrix()


@pytest.mark.parametrize("kwargs", [
    dict(kind="exponential", n=3, rho=1.0),
    dict(kind="exponential", n=3, rho=-0.1),
    dict(kind="explicit", n=2, matrix=((1, 0.5), (0.4, 1))),
    dict(kind="explicit", n=2, matrix=((1, 1.5), (1.5, 1))),
    dict(kind="bogus", n=2),
])
def test_correlation_validation(kwargs):
    with pytest.raises(DomainError):
        CorrelationSpec(**kwargs)


def test_spectrum_identity_correlation():
    lam = [0.3, 2.0, 1.1]
    spec = correlated_spectrum(comps(lam), CorrelationSpec.exponential(0.0, 3))
    assert np.allclose(spec.values, sorted(lam, reverse=True), rtol=1e-15)
    assert np.allclose(spec.aligned(), lam, rtol=1e-15)


def test_spectrum_2x2():
    spec = correlated_spectrum(comps([1.0, 1.0]), CorrelationSpec.exponential(0.25, 2))
    assert np.allclose(spec.values, (1.5, 0.5), atol=1e-15)


def cubic_roots(m):
    """Roots of det(m - t I) from the characteristic polynomial coefficients."""
    tr = np.trace(m)
    minors = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0] \
        + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    det = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
           - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
           + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
    roots = mpmath.polyroots([1, -tr, minors, -det], maxsteps=200, extraprec=60)
    return sorted((float(mpmath.re(r)) for r in roots), reverse=True)


def test_spectrum_3x3_matches_cubic_roots():
    lam = np.array([1.0, 2.0, 3.0])
    corr = CorrelationSpec.exponential(0.5, 3)
    spec = correlated_spectrum(comps(lam), corr)
    a = np.diag(lam) @ corr.c_matrix()
    assert np.allclose(spec.values, cubic_roots(a), rtol=0, atol=1e-9)


def test_jacobi_matches_high_precision_18x18():
    rng = np.random.default_rng(11)
    d = 10.0 ** rng.uniform(-13, -10, 18)
    c = CorrelationSpec.exponential(0.98, 18).c_matrix()
    root = np.sqrt(d)
    sym = root[:, None] * c * root[None, :]
    ours = jacobi_eigenvalues(sym)
    with mpmath.workdps(40):
        ev = mpmath.eigsy(mpmath.matrix(sym.tolist()), eigvals_only=True)
        ref = sorted((float(v) for v in ev), reverse=True)
    assert np.allclose(ours, ref, rtol=1e-10, atol=0)


spd_cases = st.integers(2, 10).flatmap(lambda n: st.tuples(
    st.lists(st.floats(-4, 4), min_size=n, max_size=n),
    st.floats(0.0, 0.99),
))


@given(spd_cases)
def test_spectrum_trace_det_majorization(p):
    from nakcov.ordering import majorizes

    logs, rho = p
    lam = 10.0 ** np.array(logs)
    corr = CorrelationSpec.exponential(rho, lam.size)
    spec = correlated_spectrum(comps(lam, 2.0), corr)
    vals = np.array(spec.values)
    assert np.all(vals > 0)
    assert vals.sum() == pytest.approx(lam.sum(), rel=1e-9)
    det = np.prod(lam) * np.linalg.det(corr.c_matrix())
    assert np.prod(vals) == pytest.approx(det, rel=1e-9)
    assert majorizes(vals, lam, tol=1e-9 * lam.sum()).holds


def test_spectrum_unequal_shapes():
    with pytest.raises(DomainError):
        correlated_spectrum([GammaComponent(1, 1), GammaComponent(2, 1)], CorrelationSpec.exponential(0.5, 2))


# sum_cdf

def test_sum_cdf_zero_and_median():
    assert sum_cdf(comps([1.0]), 0.0) == 0.0
    assert sum_cdf(comps([1.0]), math.log(2.0)) == pytest.approx(0.5, abs=1e-14)


def test_sum_cdf_negative_x():
    with pytest.raises(DomainError):
        sum_cdf(comps([1.0]), -1.0)


def test_sum_cdf_monte_carlo_oracle():
    components = [GammaComponent(0.5, 1.0), GammaComponent(1.0, 0.5), GammaComponent(2.0, 2.0)]
    rng = np.random.default_rng(2718)
    n = 1_000_000
    draws = sum(rng.gamma(c.shape, c.scale, n) for c in components)
    p = np.mean(draws <= 3.0)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(sum_cdf(components, 3.0) - p) < 3 * se


def test_sum_cdf_matches_convolution_quadrature():
    a, b = GammaComponent(0.7, 1.3), GammaComponent(2.5, 0.4)
    for x in (0.5, 2.0, 6.0):
        ref, _ = integrate.quad(lambda t: stats.gamma.pdf(t, a.shape, scale=a.scale)
                                * stats.gamma.cdf(x - t, b.shape, scale=b.scale), 0, x, epsabs=1e-13)
        assert sum_cdf([a, b], x) == pytest.approx(ref, abs=1e-10)


def test_sum_cdf_equal_scales_is_gamma():
    components = [GammaComponent(0.5, 2.0), GammaComponent(1.5, 2.0)]
    for x in (0.3, 4.0):
        assert sum_cdf(components, x) == pytest.approx(stats.gamma.cdf(x, 2.0, scale=2.0), abs=1e-13)


sum_cases = st.integers(1, 4).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0.5, 3.0), min_size=n, max_size=n),
    st.lists(st.floats(0.1, 10.0), min_size=n, max_size=n),
))


@given(sum_cases)
def test_sum_cdf_monotone_and_total(p):
    shapes, scales = p
    components = [GammaComponent(a, s) for a, s in zip(shapes, scales)]
    g = gamma_sum(components)
    xs = np.linspace(0, g.mean + 6 * g.sd, 40)
    vals = g.cdf(xs)
    assert np.all(np.diff(vals) >= -1e-13)
    assert np.all((vals >= 0) & (vals <= 1))
    assert sum_cdf(components, g.mean + 40 * g.sd) > 1 - 1e-6


def stop_loss(components, t):
    """E[(X - t)+] = integral of the survival function beyond t."""
    g = gamma_sum(components)
    val, _ = integrate.quad(lambda x: 1.0 - g.cdf(x), t, g.mean + 60 * g.sd, limit=200, epsabs=1e-12)
    return val


@pytest.mark.parametrize("rho", [0.3, 0.9])
def test_correlated_sum_has_larger_stop_loss(rho):
    lam = np.array([1.0, 0.5, 0.25, 0.125])
    inid = comps(lam, 1.5)
    corr = comps(correlated_spectrum(inid, CorrelationSpec.exponential(rho, 4)).values, 1.5)
    mean = 1.5 * lam.sum()
    for t in (mean, 1.5 * mean, 3 * mean):
        assert stop_loss(corr, t) > stop_loss(inid, t)


# sampling

@pytest.mark.parametrize("shape", [0.5, 0.9, 1.0, 2.5, 7.0])
def test_standard_gamma_ks(shape):
    x = standard_gamma(np.random.default_rng(5), shape, 100_000)
    assert stats.kstest(x, stats.gamma(shape).cdf).pvalue > 0.01


def test_standard_gamma_deterministic():
    a = standard_gamma(np.random.default_rng(3), 0.7, 1000)
    b = standard_gamma(np.random.default_rng(3), 0.7, 1000)
    assert np.array_equal(a, b)


def test_sample_sum_ks_against_cdf():
    components = [GammaComponent(0.5, 1.0), GammaComponent(1.0, 0.5), GammaComponent(2.0, 2.0)]
    x = sample_sum(components, np.random.default_rng(9), size=100_000)
    g = gamma_sum(components)
    res = stats.kstest(x, g.cdf)
    crit = stats.kstwo.ppf(0.99, x.size)
    assert res.statistic < crit


def test_paired_sampling_identical_without_correlation():
    components = comps([0.3, 1.0, 2.0], 1.5)
    spec = correlated_spectrum(components, CorrelationSpec.exponential(0.0, 3))
    a = sample_sum(components, np.random.default_rng(1), "inid", size=1000)
    b = sample_sum(components, np.random.default_rng(1), "correlated", spec, size=1000)
    assert np.array_equal(a, b)


def test_correlated_sampling_moments():
    alpha_c = 1.5
    lam = [1.0, 0.6, 0.3, 0.2]
    components = comps(lam, alpha_c)
    spec = correlated_spectrum(components, CorrelationSpec.exponential(0.7, 4))
    n = 1_000_000
    x = sample_sum(components, np.random.default_rng(12), "correlated", spec, size=n)
    mean = alpha_c * sum(spec.values)
    assert mean == pytest.approx(alpha_c * sum(lam), rel=1e-12)
    var = alpha_c * sum(v * v for v in spec.values)
    assert abs(x.mean() - mean) < 3 * math.sqrt(var / n)
    # variance of the sample variance from the fourth central moment
    m4 = np.mean((x - x.mean()) ** 4)
    se_var = math.sqrt((m4 - x.var() ** 2) / n)
    assert abs(x.var() - var) < 3 * se_var


def test_sample_sum_errors():
    components = comps([1.0, 2.0])
    with pytest.raises(DomainError):
        sample_sum(components, np.random.default_rng(0), "correlated")
    with pytest.raises(ValueError):
        sample_sum(components, np.random.default_rng(0), "other")


def test_draw_unit_gammas_shape():
    g = draw_unit_gammas(np.random.default_rng(0), [0.5, 1.0, 3.0], 17)
    assert g.shape == (17, 3)
    assert np.all(g > 0)
