"""Majorization, Schur-convexity and convex-order checks.

These turn the structural facts behind "correlation helps coverage" into
executable tests: eigenvalues of DC majorize the diagonal of D, the
coverage kernel prod (1 + k x_i)^-a is Schur-convex, and a majorizing
weight vector yields a larger sum in the convex order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coverage import CoverageQuery, FadingSpec
from .errors import DomainError
from .gammasum import CorrelationSpec, correlated_spectrum, draw_unit_gammas, jacobi_eigenvalues, weighted_components
from .montecarlo import BLOCK_SIZE, run_blocks
from .specialfn import pochhammer

MAJORIZATION_TOL = 1e-9
MAX_SERIES_ORDER = 6
EXPOSED_SERIES_ORDER = 3


@dataclass(frozen=True)
class MajorizationVerdict:
    holds: bool
    partial_sum_slacks: tuple
    total_sum_gap: float


def majorizes(a: Sequence[float], b: Sequence[float], tol: float = MAJORIZATION_TOL) -> MajorizationVerdict:
    """Does ``a`` majorize ``b``?

    With both sorted ascending, every k-smallest partial sum of ``b`` must
    be at least that of ``a`` (k < n) and the totals must agree, both to
    within the absolute tolerance ``tol``.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise DomainError(f"length mismatch: {a.size} vs {b.size}")
    ca, cb = np.cumsum(a), np.cumsum(b)
    slacks = tuple((cb[:-1] - ca[:-1]).tolist())
    gap = float(cb[-1] - ca[-1]) if a.size else 0.0
    holds = all(s >= -tol for s in slacks) and abs(gap) <= tol
    return MajorizationVerdict(holds, slacks, gap)


def schur_product(k: float, x: Sequence[float], a: Sequence[float]) -> float:
    """prod_i (1 + k x_i)^(-a_i), evaluated as exp(-sum a_i log1p(k x_i))."""
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return math.exp(-float(np.dot(a, np.log1p(k * x))))


def schur_hessian(k: float, x: Sequence[float], a: Sequence[float]) -> np.ndarray:
    """Closed-form Hessian of schur_product in x.

    H = k^2 f (P + Q) with P = diag(a_i / (1 + k x_i)^2) and
    Q_ij = a_i a_j / ((1 + k x_i)(1 + k x_j)).
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    u = a / (1.0 + k * x)
    p = np.diag(a / (1.0 + k * x) ** 2)
    return k * k * schur_product(k, x, a) * (p + np.outer(u, u))


def hessian_psd_check(k: float, x: Sequence[float], a: Sequence[float],
                      fd_step: float = 1e-4) -> tuple[float, float]:
    """(smallest eigenvalue of the analytic Hessian, relative gap to finite differences).

    Central differences use the per-coordinate step fd_step * (x_i + 1/k),
    the natural length scale of (1 + k x_i)^-a; see the ledger for why the
    max(1, |x_i|) scaling was not used.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(x <= 0):
        raise DomainError("hessian_psd_check needs x_i > 0")
    n = x.size
    h_an = schur_hessian(k, x, a)
    h = fd_step * (np.abs(x) + (1.0 / k if k > 0 else 1.0))
    f = lambda z: schur_product(k, z, a)  # noqa: E731
    h_fd = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            if i == j:
                e = np.zeros(n)
                e[i] = h[i]
                val = (f(x + e) - 2.0 * f(x) + f(x - e)) / h[i] ** 2
            else:
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h[i]
                ej[j] = h[j]
                val = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * h[i] * h[j])
            h_fd[i, j] = h_fd[j, i] = val
    scale = float(np.max(np.abs(h_an)))
    gap = float(np.max(np.abs(h_fd - h_an))) / scale if scale > 0 else float(np.max(np.abs(h_fd)))
    min_eig = float(jacobi_eigenvalues(h_an)[-1])
    return min_eig, gap


# ---------------------------------------------------------------------------
# convex order


def _phi(family: str, s: float):
    if family == "log1p-ratio":
        if not s > 0:
            raise DomainError("log1p-ratio needs s > 0")
        return lambda v: np.log1p(s / v)
    if family == "quadratic":
        return lambda v: v * v
    if family == "exponential":
        return lambda v: np.exp(-v)
    raise DomainError(f"unknown phi family {family!r}")


def convex_order_test(weights_a: Sequence[float], weights_b: Sequence[float], shape: float,
                      phi_family: str = "log1p-ratio", trials: int = 100_000, seed: int = 0,
                      s: float = 1.0, block_size: int = BLOCK_SIZE) -> tuple[float, float]:
    """Paired estimate of E[phi(sum b_i G_i)] - E[phi(sum a_i G_i)], G_i iid G(shape, 1).

    ``weights_b`` must majorize ``weights_a``; both sums use the same draws.
    Returns (mean gap, standard error).
    """
    wa = np.asarray(weights_a, dtype=float)
    wb = np.asarray(weights_b, dtype=float)
    verdict = majorizes(wb, wa)
    if not verdict.holds:
        raise DomainError(f"weights_b does not majorize weights_a (slacks {verdict.partial_sum_slacks})")
    phi = _phi(phi_family, s)
    shapes = [shape] * wa.size

    def fn(rng, n):
        g = draw_unit_gammas(rng, shapes, n)
        return [phi(g @ wb) - phi(g @ wa)]

    (m,) = run_blocks(fn, trials, seed, block_size=block_size)
    return m.mean, m.stderr


# ---------------------------------------------------------------------------
# layer-by-layer series comparison


def partitions(m: int) -> list[tuple]:
    """Integer partitions of m, largest first part first: (3), (2,1), (1,1,1)."""
    out = []

    def rec(rest, cap, acc):
        if rest == 0:
            out.append(tuple(acc))
            return
        for p in range(min(rest, cap), 0, -1):
            rec(rest - p, p, acc + [p])

    rec(m, m, [])
    return out


def monomial_symmetric(x: Sequence[float], parts: Sequence[int]) -> float:
    """m_parts(x): sum over distinct index tuples of prod x_i^part, each monomial once."""
    x = np.asarray(x, dtype=float)
    ell = len(parts)
    if ell > x.size:
        return 0.0
    perms = sorted(set(itertools.permutations(parts)))
    combos = np.array(list(itertools.combinations(range(x.size), ell)))
    xs = x[combos]
    total = 0.0
    for perm in perms:
        total += float(np.sum(np.prod(xs ** np.array(perm), axis=1)))
    return total


def series_coefficient(alpha_u: float, alpha_c: float, n: int, parts: Sequence[int]) -> float:
    """K for partition ``parts`` of m in the F_D(1 - alpha_u; alpha_c..; N alpha_c + 1; x) expansion."""
    m = sum(parts)
    num = pochhammer(1.0 - alpha_u, m)
    for p in parts:
        num *= pochhammer(alpha_c, p) / math.factorial(p)
    return num / pochhammer(n * alpha_c + 1.0, m)


@dataclass(frozen=True)
class SeriesComparison:
    """Per-(layer, partition) terms of the i.n.i.d. and correlated F_D series.

    Keys are (m, j) with j the 1-based position of the partition of m in
    ``partitions(m)``.  ``slacks`` holds K * (corr term - inid term).
    """

    order: int
    alpha_u: float
    coefficients: dict
    partitions: dict
    inid_terms: dict
    corr_terms: dict
    sign_profile: dict
    slacks: dict

    def layer(self, m: int, which: str = "inid") -> float:
        terms = self.inid_terms if which == "inid" else self.corr_terms
        return sum(self.coefficients[key] * terms[key] for key in terms if key[0] == m)

    def truncated(self, which: str = "inid") -> float:
        return 1.0 + sum(self.layer(m, which) for m in range(1, self.order + 1))

    @property
    def dominance_holds(self) -> bool:
        return all(v >= -1e-10 for v in self.slacks.values())


def fd_series_arguments(spec: FadingSpec, q: CoverageQuery, corr: CorrelationSpec):
    """(k, inid arguments 1/(1 + k lambda'_i), correlated arguments 1/(1 + k lambda_hat_i))."""
    comps = weighted_components(spec.interferers, q.distances, q.beta)
    k = q.r ** q.beta * q.T / spec.user.scale
    lam = np.array([c.scale for c in comps])
    spectrum = np.asarray(correlated_spectrum(comps, corr).values)
    return k, 1.0 / (1.0 + k * lam), 1.0 / (1.0 + k * spectrum)


def fd_series_comparison(spec: FadingSpec, q: CoverageQuery, corr: CorrelationSpec,
                         order_m: int = EXPOSED_SERIES_ORDER, internal: bool = False) -> SeriesComparison:
    """Compare each symmetric layer term of the two coverage series.

    Orders up to 3 are exposed by default; ``internal=True`` allows up to 6.
    For alpha_u < 1 every coefficient is positive and, because each term is
    Schur-convex, every correlated term dominates its i.n.i.d. counterpart.
    """
    alpha_c = spec.common_shape
    if alpha_c is None:
        raise DomainError("series comparison needs equal interferer shapes")
    cap = MAX_SERIES_ORDER if internal else EXPOSED_SERIES_ORDER
    if not 1 <= order_m <= cap:
        raise DomainError(f"order_m must lie in 1..{cap}")
    _, x_inid, x_corr = fd_series_arguments(spec, q, corr)
    n = x_inid.size
    alpha_u = spec.user.shape
    coeffs, parts_map, inid, cor, slacks, signs = {}, {}, {}, {}, {}, {}
    for m in range(1, order_m + 1):
        layer_sign = 0
        for j, parts in enumerate(partitions(m), start=1):
            key = (m, j)
            kc = series_coefficient(alpha_u, alpha_c, n, parts)
            coeffs[key] = kc
            parts_map[key] = parts
            inid[key] = monomial_symmetric(x_inid, parts)
            cor[key] = monomial_symmetric(x_corr, parts)
            slacks[key] = kc * (cor[key] - inid[key])
            if kc != 0:
                layer_sign = int(np.sign(kc))
        signs[m] = layer_sign
    return SeriesComparison(order_m, alpha_u, coeffs, parts_map, inid, cor, signs, slacks)


def random_spd_pair(rng: np.random.Generator, n: int, rho_max: float = 0.99,
                    log10_range: tuple = (-3.0, 3.0)) -> tuple[np.ndarray, np.ndarray]:
    """(diagonal of D, eigenvalues of DC) for a random exponential-correlation C.

    D is log-uniform over 10**log10_range and rho ~ U[0, rho_max].
    """
    d = 10.0 ** rng.uniform(*log10_range, size=n)
    rho = rng.uniform(0.0, rho_max)
    c = CorrelationSpec.exponential(rho, n).c_matrix()
    root = np.sqrt(d)
    eig = jacobi_eigenvalues(root[:, None] * c * root[None, :])
    return d, eig

