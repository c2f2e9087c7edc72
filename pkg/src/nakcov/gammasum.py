"""
Sums of independent weighted gamma variates.

Covers the weighted (path-loss scaled) interferer components, the eigenvalue
reduction of a correlated equal-shape gamma sum to an independent weighted
sum, the distribution function of the sum, and sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import signal, special, stats

from .errors import DomainError, NonConvergenceError

SHAPE_RTOL = 1e-12
DEFAULT_TERM_CAP = 100_000


@dataclass(frozen=True)
class GammaComponent:
    """Gamma law G(shape, scale) with density y^(shape-1) e^(-y/scale) / (scale^shape Gamma(shape))."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and math.isfinite(self.shape)):
            raise DomainError(f"gamma shape must be positive, got {self.shape}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"gamma scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @classmethod
    def unit_mean(cls, shape: float) -> "GammaComponent":
        return cls(shape, 1.0 / shape)


@dataclass(frozen=True)
class CorrelationSpec:
    """Correlation structure between interferer powers.

    ``kind`` is "exponential" (rho_pq = rho^|p-q|) or "explicit" (``matrix``
    holds rho_ij).  The matrix C used in the analysis has sqrt(rho_ij) off the
    diagonal; ``sqrt_convention=False`` uses rho_ij directly instead.
    """

    kind: str
    n: int
    rho: float = 0.0
    matrix: Optional[tuple] = None
    sqrt_convention: bool = True

    def __post_init__(self):
        if self.kind == "exponential":
            if not (0.0 <= self.rho < 1.0):
                raise DomainError(f"exponential rho must lie in [0, 1), got {self.rho}")
        elif self.kind == "explicit":
            if self.matrix is None:
                raise DomainError("explicit correlation needs a matrix")
            m = np.asarray(self.matrix, dtype=float)
            if m.shape != (self.n, self.n):
                raise DomainError(f"correlation matrix shape {m.shape} != ({self.n}, {self.n})")
            if not np.allclose(m, m.T, atol=1e-14):
                raise DomainError("correlation matrix is not symmetric")
            if np.any(m < 0) or np.any(m > 1):
                raise DomainError("correlation coefficients must lie in [0, 1]")
            if not np.allclose(np.diag(m), 1.0):
                raise DomainError("correlation matrix needs a unit diagonal")
            object.__setattr__(self, "matrix", tuple(tuple(float(v) for v in row) for row in m))
        else:
            raise DomainError(f"unknown correlation kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("correlation dimension must be >= 1")

    @classmethod
    def exponential(cls, rho: float, n: int, sqrt_convention: bool = True) -> "CorrelationSpec":
        return cls("exponential", n, rho=rho, sqrt_convention=sqrt_convention)

    @classmethod
    def explicit(cls, matrix, sqrt_convention: bool = True) -> "CorrelationSpec":
        m = np.asarray(matrix, dtype=float)
        return cls("explicit", m.shape[0], matrix=m, sqrt_convention=sqrt_convention)

    def rho_matrix(self) -> np.ndarray:
        if self.kind == "exponential":
            idx = np.arange(self.n)
            return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)
        return np.array(self.matrix, dtype=float)

    def c_matrix(self) -> np.ndarray:
        """The s.p.d. matrix C; raises DomainError if it is not positive definite."""
        rho = self.rho_matrix()
        c = np.sqrt(rho) if self.sqrt_convention else rho.copy()
        np.fill_diagonal(c, 1.0)
        try:
            np.linalg.cholesky(c)
        except np.linalg.LinAlgError as exc:
            raise DomainError("correlation matrix C is not positive definite") from exc
        return c

    def subset(self, keep: Sequence[int]) -> "CorrelationSpec":
        """Restrict to the interferers at positions ``keep`` (explicit result)."""
        keep = list(keep)
        sub = self.rho_matrix()[np.ix_(keep, keep)]
        return CorrelationSpec.explicit(sub, self.sqrt_convention)


@dataclass(frozen=True)
class EigenSpectrum:
    """Eigenvalues of A = DC (descending) together with the diagonal of D."""

    values: tuple
    source_diagonal: tuple

    def aligned(self) -> np.ndarray:
        """Eigenvalues placed at the rank positions of ``source_diagonal``.

        The largest eigenvalue sits where the largest diagonal entry sits and
        so on, so sum(aligned * G) pairs each draw G_i with a comparable
        weight.  With C = I this returns the diagonal itself.
        """
        diag = np.asarray(self.source_diagonal)
        order = np.argsort(-diag, kind="stable")
        out = np.empty_like(diag)
        out[order] = np.asarray(self.values)
        return out


def _round_robin(n: int) -> list[list[tuple]]:
    """Tournament schedule: n - 1 rounds (n even) of disjoint index pairs covering all pairs."""
    m = n + (n % 2)
    idx = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(idx[i], idx[m - 1 - i]) for i in range(m // 2)]
        rounds.append([(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n])
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return rounds


def jacobi_eigenvalues(a, rel_tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by Jacobi rotations.

    Sweeps visit every pair in round-robin order, so each round applies up
    to n/2 disjoint rotations as one orthogonal similarity.  An off-diagonal
    entry is annihilated unless |a_pq| <= rel_tol * sqrt(|a_pp a_qq|);
    iteration stops after a sweep that rotates nothing.  The relative
    threshold keeps small eigenvalues of badly scaled positive definite
    matrices accurate.  Returned in descending order.
    """
    m = np.array(a, dtype=float)
    n = m.shape[0]
    if m.ndim != 2 or m.shape != (n, n):
        raise DomainError("jacobi_eigenvalues needs a square matrix")
    if not np.allclose(m, m.T, rtol=1e-12, atol=1e-300):
        raise DomainError("jacobi_eigenvalues needs a symmetric matrix")
    m = 0.5 * (m + m.T)
    if n == 1:
        return m[0].copy()
    rounds = [(np.array([p for p, _ in r]), np.array([q for _, q in r])) for r in _round_robin(n)]
    eye = np.eye(n)
    for _ in range(max_sweeps):
        rotated = False
        for ps, qs in rounds:
            apq = m[ps, qs]
            dg = np.diagonal(m)
            app, aqq = dg[ps], dg[qs]
            act = np.abs(apq) > rel_tol * np.sqrt(np.abs(app * aqq))
            if not act.all():
                m[ps[~act], qs[~act]] = 0.0
                m[qs[~act], ps[~act]] = 0.0
                if not act.any():
                    continue
                ps, qs, apq, app, aqq = ps[act], qs[act], apq[act], app[act], aqq[act]
            rotated = True
            tau = (aqq - app) / (2.0 * apq)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
            c = 1.0 / np.hypot(1.0, t)
            # disjoint plane rotations; entries outside the pairs stay exact zeros
            j = eye.copy()
            j[ps, ps] = c
            j[qs, qs] = c
            j[ps, qs] = t * c
            j[qs, ps] = -t * c
            m = j.T @ m @ j
            m[ps, qs] = 0.0
            m[qs, ps] = 0.0
        if not rotated:
            return np.sort(np.diag(m))[::-1]
    raise NonConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")


def weighted_components(
    interferers: Sequence[GammaComponent], distances: Sequence[float], beta: float
) -> list[GammaComponent]:
    """Fold path loss into the scales: lambda'_i = lambda_i d_i^(-beta)."""
    if len(interferers) != len(distances):
        raise DomainError(f"{len(interferers)} interferers but {len(distances)} distances")
    out = []
    for comp, d in zip(interferers, distances):
        if not d > 0:
            raise DomainError(f"distance must be positive, got {d}")
        out.append(GammaComponent(comp.shape, comp.scale * float(d) ** (-beta)))
    return out


def common_shape(components: Sequence[GammaComponent]) -> Optional[float]:
    """The shared shape if all components have (numerically) equal shapes."""
    if not components:
        return None
    s0 = components[0].shape
    if all(abs(c.shape - s0) <= SHAPE_RTOL * s0 for c in components):
        return s0
    return None


def correlated_spectrum(
    components: Sequence[GammaComponent], corr: CorrelationSpec
) -> EigenSpectrum:
    """Eigenvalues of A = D C via the symmetric similar matrix D^(1/2) C D^(1/2)."""
    if common_shape(components) is None:
        raise DomainError("correlated interference needs equal interferer shapes")
    if corr.n != len(components):
        raise DomainError(f"correlation dimension {corr.n} != {len(components)} interferers")
    lam = np.array([c.scale for c in components])
    c = corr.c_matrix()
    root = np.sqrt(lam)
    sym = root[:, None] * c * root[None, :]
    # exact diagonal, so that C = I reproduces lambda' bit for bit
    np.fill_diagonal(sym, lam)
    vals = jacobi_eigenvalues(sym)
    if np.any(vals <= 0):
        raise DomainError("A = DC has a non-positive eigenvalue")
    return EigenSpectrum(tuple(vals.tolist()), tuple(lam.tolist()))


# ---------------------------------------------------------------------------
# distribution of the sum


class GammaSum:
    """Distribution of X = sum of independent G(alpha_i, lambda_i).

    With lambda_1 = min lambda_i, X is the mixture sum_k p_k G(rho + k, lambda_1)
    where rho = sum alpha_i and p_k are the coefficients of
    prod_i (lambda_1/lambda_i)^alpha_i (1 - q_i z)^(-alpha_i), q_i = 1 - lambda_1/lambda_i
    (the Moschopoulos expansion).  Each factor is a negative-binomial
    probability mass function, so p_k is their convolution; the weights are
    nonnegative and sum to one, and 1 - sum_{k<K} p_k bounds the truncation
    error of every mixture expectation of a [0, 1]-valued function.
    """

    def __init__(self, components: Sequence[GammaComponent], tail_tol: float = 1e-14,
                 term_cap: int = DEFAULT_TERM_CAP):
        if not components:
            raise DomainError("GammaSum needs at least one component")
        self.components = tuple(components)
        alpha = np.array([c.shape for c in components])
        lam = np.array([c.scale for c in components])
        self.rho = float(alpha.sum())
        self.lam_min = float(lam.min())
        ratio = self.lam_min / lam
        q = 1.0 - ratio
        mean = float(np.sum(alpha * q / ratio))
        sd = math.sqrt(float(np.sum(alpha * q / ratio**2)))
        k = int(mean + 12.0 * sd + 64)
        while True:
            if k > term_cap:
                raise NonConvergenceError(
                    f"gamma-sum mixture needs more than {term_cap} terms "
                    f"(scale ratio {lam.max() / self.lam_min:.3g})"
                )
            weights = self._weights(alpha, ratio, k)
            tail = max(0.0, 1.0 - math.fsum(weights))
            if tail <= tail_tol:
                break
            k *= 2
        self.weights = weights
        self.tail = tail

    @staticmethod
    def _weights(alpha, ratio, k):
        ks = np.arange(k)
        out = None
        for a, r in zip(alpha, ratio):
            if r >= 1.0:
                continue
            pmf = stats.nbinom.pmf(ks, a, r)
            out = pmf if out is None else signal.fftconvolve(out, pmf)[:k]
        if out is None:
            out = np.zeros(k)
            out[0] = 1.0
        return np.clip(out, 0.0, None)

    @property
    def n_terms(self) -> int:
        return len(self.weights)

    @property
    def mean(self) -> float:
        return sum(c.mean for c in self.components)

    @property
    def sd(self) -> float:
        return math.sqrt(sum(c.shape * c.scale**2 for c in self.components))

    def cdf(self, x):
        """P(X <= x); vectorised over x."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(xs)
        pos = xs > 0
        if np.any(pos):
            shapes = self.rho + np.arange(self.n_terms)
            z = xs[pos][:, None] / self.lam_min
            out[pos] = special.gammainc(shapes[None, :], z) @ self.weights
        out = np.clip(out, 0.0, 1.0)
        return out if np.ndim(x) else float(out[0])

    def ratio_survival(self, theta: float, alpha_u: float) -> float:
        """P(G_u > theta * X) for an independent G_u ~ G(alpha_u, 1).

        G_u > theta*lambda_1*Y  <=>  Y/(Y+G_u) < 1/(1+theta*lambda_1) for Y ~ G(rho+k, 1),
        and Y/(Y+G_u) is Beta(rho+k, alpha_u) distributed.
        """
        shapes = self.rho + np.arange(self.n_terms)
        xb = 1.0 / (1.0 + theta * self.lam_min)
        vals = special.betainc(shapes, alpha_u, xb)
        return float(np.clip(vals @ self.weights, 0.0, 1.0))


@lru_cache(maxsize=256)
def _cached_sum(key: tuple) -> GammaSum:
    return GammaSum([GammaComponent(a, l) for a, l in key])


def gamma_sum(components: Sequence[GammaComponent]) -> GammaSum:
    return _cached_sum(tuple((c.shape, c.scale) for c in components))


def sum_cdf(components: Sequence[GammaComponent], x: float, rel_tol: float = 1e-12) -> float:
    """P(sum of independent components <= x)."""
    if x < 0:
        raise DomainError("sum_cdf needs x >= 0")
    if x == 0:
        return 0.0
    return float(gamma_sum(components).cdf(x))


# ---------------------------------------------------------------------------
# sampling


def standard_gamma(rng: np.random.Generator, shape: float, size: int) -> np.ndarray:
    """G(shape, 1) variates by the Marsaglia-Tsang squeeze method.

    For shape < 1 the variate is drawn at shape + 1 and multiplied by
    U^(1/shape).  Consumption of ``rng`` depends only on its state, so equal
    seeds give equal draws.
    """
    if shape <= 0:
        raise DomainError("shape must be positive")
    boost = shape < 1.0
    a = shape + 1.0 if boost else shape
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        m = need + need // 16 + 16
        x = rng.standard_normal(m)
        u = rng.random(m)
        v = 1.0 + c * x
        ok = v > 0
        v = np.where(ok, v, 1.0) ** 3
        x2 = x * x
        accept = ok & (
            (u < 1.0 - 0.0331 * x2 * x2)
            | (np.log(u) < 0.5 * x2 + d * (1.0 - v + np.log(v)))
        )
        got = (d * v)[accept][:need]
        out[filled:filled + got.size] = got
        filled += got.size
    if boost:
        out *= rng.random(size) ** (1.0 / shape)
    return out


def draw_unit_gammas(rng: np.random.Generator, shapes: Sequence[float], size: int) -> np.ndarray:
    """Matrix (size, N) whose column i holds G(shapes[i], 1) draws."""
    cols = [standard_gamma(rng, float(s), size) for s in shapes]
    return np.column_stack(cols) if cols else np.zeros((size, 0))


def sample_sum(
    components: Sequence[GammaComponent],
    rng: np.random.Generator,
    mode: str = "inid",
    spectrum: Optional[EigenSpectrum] = None,
    size: Optional[int] = None,
):
    """Draw the interference sum.

    ``inid`` returns sum lambda'_i G_i; ``correlated`` returns
    sum lambda_hat_i G_i from the same G_i draws (same rng consumption), with
    the eigenvalues rank-aligned to the components.
    """
    n = 1 if size is None else size
    shapes = [c.shape for c in components]
    g = draw_unit_gammas(rng, shapes, n)
    if mode == "inid":
        w = np.array([c.scale for c in components])
    elif mode == "correlated":
        if spectrum is None:
            raise DomainError("correlated sampling needs a spectrum")
        if common_shape(components) is None:
            raise DomainError("correlated sampling needs equal shapes")
        w = spectrum.aligned()
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    out = g @ w
    return float(out[0]) if size is None else out
