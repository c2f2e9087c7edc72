"""
Analytic coverage probability P(SIR > T) for a user at distance r.

With k = r^beta T / lambda_u and x_i = 1/(1 + k lambda'_i),

    P_c = Gamma(S + alpha_u) / (Gamma(S + 1) Gamma(alpha_u)) * prod x_i^alpha_i
          * F_D(1 - alpha_u; alpha_1..alpha_N; S + 1; x_1..x_N),     S = sum alpha_i.

The correlated case uses the same form with the eigenvalues of A = DC in
place of lambda'_i and the common interferer shape alpha_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special
from scipy.special import gammaln

from . import specialfn as sf
from .errors import DomainError, NonConvergenceError, StrategyUnavailable
from .gammasum import (
    CorrelationSpec,
    GammaComponent,
    common_shape,
    correlated_spectrum,
    gamma_sum,
    weighted_components,
)

CLOSED_FORM = "closed-form-rayleigh"
FD_ANALYTIC = "fd-analytic"
OUTER_QUADRATURE = "outer-quadrature"
GAMMA_MIXTURE = "gamma-mixture"

MIN_SHAPE = 0.5
SHADOW_DB_TO_NEPER = 8.686


@dataclass(frozen=True)
class FadingSpec:
    """User and interferer channel power laws (before path loss)."""

    user: GammaComponent
    interferers: tuple

    def __post_init__(self):
        object.__setattr__(self, "interferers", tuple(self.interferers))
        for comp in (self.user, *self.interferers):
            if comp.shape < MIN_SHAPE - 1e-12:
                raise DomainError(f"Nakagami shape must be >= 0.5, got {comp.shape}")

    @property
    def common_shape(self) -> Optional[float]:
        return common_shape(self.interferers)

    @classmethod
    def unit_mean(cls, alpha_u: float, alphas: Sequence[float]) -> "FadingSpec":
        return cls(GammaComponent.unit_mean(alpha_u), tuple(GammaComponent.unit_mean(a) for a in alphas))


@dataclass(frozen=True)
class CoverageQuery:
    """Target SIR ``T`` (linear), user distance ``r`` and interferer distances."""

    T: float
    r: float
    distances: tuple
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))
        if not self.T > 0:
            raise DomainError(f"target SIR must be positive, got {self.T}")
        if not self.r > 0:
            raise DomainError(f"user distance must be positive, got {self.r}")
        if self.beta < 2:
            raise DomainError(f"path-loss exponent must be >= 2, got {self.beta}")

    def with_T(self, T: float) -> "CoverageQuery":
        return CoverageQuery(T, self.r, self.distances, self.beta)


@dataclass(frozen=True)
class CoverageResult:
    value: float
    method: str
    est_abs_error: float = 0.0

    def __post_init__(self):
        v = min(max(self.value, 0.0), 1.0)
        if abs(v - self.value) > 1e-9 + self.est_abs_error:
            raise NonConvergenceError(f"coverage {self.value} outside [0, 1] ({self.method})")
        object.__setattr__(self, "value", v)


def _weighted_scales(spec: FadingSpec, q: CoverageQuery) -> list[GammaComponent]:
    return weighted_components(spec.interferers, q.distances, q.beta)


def _k(spec: FadingSpec, q: CoverageQuery) -> float:
    return q.r ** q.beta * q.T / spec.user.scale


def coverage_from_scales(
    alpha_u: float,
    shapes: Sequence[float],
    kl: Sequence[float],
    method: str = "auto",
    rel_tol: float = 1e-10,
) -> CoverageResult:
    """Coverage given alpha_u, interferer shapes and the products k*lambda_i.

    This is the common kernel of the i.n.i.d., correlated and shadowed
    variants; they differ only in which scales and shapes they pass.
    """
    shapes = np.asarray(shapes, dtype=float)
    kl = np.asarray(kl, dtype=float)
    if shapes.size == 0:
        return CoverageResult(1.0, CLOSED_FORM if alpha_u == 1 else FD_ANALYTIC, 0.0)
    if method == "auto":
        if alpha_u == 1.0:
            method = CLOSED_FORM
        else:
            try:
                return _fd_path(alpha_u, shapes, kl, rel_tol)
            except (StrategyUnavailable, NonConvergenceError):
                method = OUTER_QUADRATURE
    if method == CLOSED_FORM:
        if alpha_u != 1.0:
            raise DomainError("Rayleigh closed form needs alpha_u == 1")
        return CoverageResult(math.exp(-float(np.dot(shapes, np.log1p(kl)))), CLOSED_FORM, 0.0)
    if method == FD_ANALYTIC:
        return _fd_path(alpha_u, shapes, kl, rel_tol)
    if method == OUTER_QUADRATURE:
        return _outer_quadrature(alpha_u, shapes, kl, rel_tol)
    if method == GAMMA_MIXTURE:
        return _gamma_mixture(alpha_u, shapes, kl)
    raise ValueError(f"unknown coverage method {method!r}")


def _fd_path(alpha_u, shapes, kl, rel_tol) -> CoverageResult:
    s = float(shapes.sum())
    x = 1.0 / (1.0 + kl)
    xc = kl / (1.0 + kl)
    log_pref = (
        gammaln(s + alpha_u) - gammaln(s + 1.0) - gammaln(alpha_u)
        - float(np.dot(shapes, np.log1p(kl)))
    )
    args = sf.FdArgs(1.0 - alpha_u, tuple(shapes), s + 1.0, tuple(x), tuple(xc))
    rep = sf.fd_eval(args, rel_tol=rel_tol, log_scale=log_pref)
    return CoverageResult(rep.value, FD_ANALYTIC, rep.est_abs_error)


def _outer_quadrature(alpha_u, shapes, kl, rel_tol) -> CoverageResult:
    """P_c = E_g[F_I(g / k)] integrated over the user gamma density.

    Works in normalised units (user scale 1, interferer scales k*lambda'_i),
    i.e. g = lambda_u t.
    """
    dist = gamma_sum([GammaComponent(a, l) for a, l in zip(shapes, kl)])
    mean = alpha_u
    upper = mean + 40.0 * math.sqrt(alpha_u)
    log_norm = -gammaln(alpha_u)

    def f(t):
        if t <= 0:
            return 0.0
        dens = math.exp(log_norm + (alpha_u - 1.0) * math.log(t) - t)
        return dens * dist.cdf(t)

    pts = [p for p in (0.25 * mean, mean, 4.0 * mean) if 0 < p < upper]
    val, err = integrate.quad(f, 0.0, upper, points=pts, epsabs=1e-12, epsrel=max(rel_tol, 1e-12), limit=400)
    # mass of the user density beyond `upper`; below 1e-30 for alpha_u >= 0.5
    tail = special.gammaincc(alpha_u, upper)
    return CoverageResult(val, OUTER_QUADRATURE, abs(err) + dist.tail + tail)


def _gamma_mixture(alpha_u, shapes, kl) -> CoverageResult:
    dist = gamma_sum([GammaComponent(a, l) for a, l in zip(shapes, kl)])
    return CoverageResult(dist.ratio_survival(1.0, alpha_u), GAMMA_MIXTURE, dist.tail + 1e-14)


def coverage_rayleigh_inid(spec: FadingSpec, q: CoverageQuery) -> CoverageResult:
    """Exact product form for a Rayleigh user (alpha_u = 1)."""
    if spec.user.shape != 1.0:
        raise DomainError("coverage_rayleigh_inid needs alpha_u == 1")
    k = _k(spec, q)
    comps = _weighted_scales(spec, q)
    return coverage_from_scales(
        1.0, [c.shape for c in comps], [k * c.scale for c in comps], method=CLOSED_FORM
    )


def _coverage_laws(user: GammaComponent, interferers: Sequence[GammaComponent], q: CoverageQuery,
                   corr: Optional[CorrelationSpec], method: str, rel_tol: float) -> CoverageResult:
    """Shared kernel: any gamma laws (shape > 0), independent or correlated."""
    k = q.r ** q.beta * q.T / user.scale
    comps = weighted_components(interferers, q.distances, q.beta)
    if corr is None:
        shapes = [c.shape for c in comps]
        scales = np.array([c.scale for c in comps])
    else:
        alpha_c = common_shape(comps)
        if alpha_c is None:
            raise DomainError("correlated coverage needs equal interferer shapes")
        scales = np.asarray(correlated_spectrum(comps, corr).values)
        shapes = np.full(scales.size, alpha_c)
    return coverage_from_scales(user.shape, shapes, k * scales, method, rel_tol)


def coverage_inid(spec: FadingSpec, q: CoverageQuery, method: str = "auto",
                  rel_tol: float = 1e-10) -> CoverageResult:
    """Coverage with independent, non-identical interferers."""
    return _coverage_laws(spec.user, spec.interferers, q, None, method, rel_tol)


def coverage_correlated(spec: FadingSpec, q: CoverageQuery, corr: CorrelationSpec,
                        method: str = "auto", rel_tol: float = 1e-10) -> CoverageResult:
    """Coverage with correlated equal-shape interferers (eigenvalues of A = DC)."""
    if spec.common_shape is None:
        raise DomainError("correlated coverage needs equal interferer shapes")
    return _coverage_laws(spec.user, spec.interferers, q, corr, method, rel_tol)


def _sigma(sigma_db: float) -> float:
    return sigma_db / SHADOW_DB_TO_NEPER


def shadow_moment_match(comp: GammaComponent, sigma_db: float) -> GammaComponent:
    """Gamma law matching the first two moments of gamma x lognormal shadowing."""
    if sigma_db < 0:
        raise DomainError("sigma_dB must be nonnegative")
    s2 = _sigma(sigma_db) ** 2
    a, lam = comp.shape, comp.scale
    shape = a / ((a + 1.0) * math.exp(s2) - a)
    scale = (1.0 + a) * lam * math.exp(1.5 * s2) - a * lam * math.exp(0.5 * s2)
    return GammaComponent(shape, scale)


def shadow_corr_coeff(rho_fast: float, rho_shadow: float, alpha_c: float, sigma_db: float) -> float:
    """Correlation coefficient of two identically distributed composite channels."""
    if sigma_db <= 0:
        raise DomainError("composite correlation is undefined without shadowing (sigma_dB = 0)")
    for name, v in (("rho_fast", rho_fast), ("rho_shadow", rho_shadow)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {v}")
    inv = 1.0 / math.expm1(_sigma(sigma_db) ** 2)
    num = rho_fast * inv + rho_shadow * alpha_c + rho_fast * rho_shadow
    den = alpha_c + inv + 1.0
    return num / den


def shadowed_correlation(corr: Optional[CorrelationSpec], shadow_corr: Optional[CorrelationSpec],
                         alpha_c: float, sigma_db: float, n: int) -> CorrelationSpec:
    """Entrywise composite correlation rho^l_ij, returned as an explicit spec."""
    fast = corr.rho_matrix() if corr is not None else np.eye(n)
    slow = shadow_corr.rho_matrix() if shadow_corr is not None else np.eye(n)
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = shadow_corr_coeff(fast[i, j], slow[i, j], alpha_c, sigma_db)
    sqrt_conv = corr.sqrt_convention if corr is not None else True
    return CorrelationSpec.explicit(out, sqrt_conv)


def shadowed_laws(spec: FadingSpec, sigma_db: float) -> tuple[GammaComponent, list[GammaComponent]]:
    """Moment-matched (user, interferers).

    These are plain gamma laws: for sigma_dB above roughly 5 dB their shapes
    drop below the Nakagami range, so they are not wrapped in a FadingSpec.
    """
    return (
        shadow_moment_match(spec.user, sigma_db),
        [shadow_moment_match(c, sigma_db) for c in spec.interferers],
    )


def coverage_shadowed(spec: FadingSpec, q: CoverageQuery, sigma_db: float,
                      corr: Optional[CorrelationSpec] = None,
                      shadow_corr: Optional[CorrelationSpec] = None,
                      method: str = "auto", rel_tol: float = 1e-10) -> CoverageResult:
    """Coverage under lognormal shadowing via the moment-matched gamma model.

    Without ``corr`` the interferers are independent.  With ``corr`` the
    composite correlation is formed entrywise from the fast-fading and
    shadowing coefficients, using the unshadowed common interferer shape.
    """
    if sigma_db == 0:
        if corr is None:
            return coverage_inid(spec, q, method, rel_tol)
        return coverage_correlated(spec, q, corr, method, rel_tol)
    user, inter = shadowed_laws(spec, sigma_db)
    if corr is None and shadow_corr is None:
        return _coverage_laws(user, inter, q, None, method, rel_tol)
    alpha_c = spec.common_shape
    if alpha_c is None:
        raise DomainError("correlated shadowed coverage needs equal interferer shapes")
    comp_corr = shadowed_correlation(corr, shadow_corr, alpha_c, sigma_db, len(spec.interferers))
    return _coverage_laws(user, inter, q, comp_corr, method, rel_tol)


def dominant_interferer(spec: FadingSpec, q: CoverageQuery) -> int:
    """Index of the interferer with the largest mean received power (first on ties)."""
    powers = [c.shape * c.scale * d ** (-q.beta) for c, d in zip(spec.interferers, q.distances)]
    return int(np.argmax(powers))


def cancel_dominant(spec: FadingSpec, q: CoverageQuery) -> tuple[FadingSpec, CoverageQuery, int]:
    """Remove the strongest interferer, modelling a receiver that cancels it."""
    i = dominant_interferer(spec, q)
    inter = spec.interferers[:i] + spec.interferers[i + 1:]
    dist = q.distances[:i] + q.distances[i + 1:]
    return FadingSpec(spec.user, inter), CoverageQuery(q.T, q.r, dist, q.beta), i
