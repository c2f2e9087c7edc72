"""
Scalar special-function kernels: Pochhammer symbols and the Lauricella
function of the fourth kind F_D^(N).

F_D(a; b_1..b_N; c; x_1..x_N) is evaluated by one of three routes:

* a terminating series when ``a`` is zero or a negative integer,
* the Euler single integral
      Gamma(c)/(Gamma(a)Gamma(c-a)) int_0^1 t^(a-1) (1-t)^(c-a-1) prod (1-x_i t)^(-b_i) dt
  when c > a > 0,
* the truncated N-fold power series for small N.

The N-fold series is summed by total-order layers.  The layer of total
order m equals (a)_m/(c)_m times the z^m coefficient of
prod_j (1 - x_j z)^(-b_j), and those coefficients obey the recursion
m e_m = sum_{n=1..m} p_n e_{m-n} with p_n = sum_j b_j x_j^n, so a layer
costs O(m) instead of O(m^(N-1)) multi-indices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import DomainError, NonConvergenceError, StrategyUnavailable

TERMINATING = "terminating-series"
TRUNCATED = "truncated-series"
EULER = "euler-integral"
OUTER = "outer-quadrature"

DEFAULT_REL_TOL = 1e-10
DEFAULT_MAX_TERMS = 500
N_SERIES_MAX = 4
QUAD_ABS_TOL = 1e-10

_LOG_DIRECT_LIMIT = 50


@dataclass(frozen=True)
class FdArgs:
    """Arguments of F_D^(N)(a; b; c; x).

    ``xc`` optionally carries 1 - x_i computed without cancellation; callers
    that know x_i is within rounding of 1 should supply it.
    """

    a: float
    b: tuple
    c: float
    x: tuple
    xc: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        b = tuple(float(v) for v in self.b)
        x = tuple(float(v) for v in self.x)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "c", float(self.c))
        if len(b) != len(x):
            raise DomainError(f"len(b)={len(b)} differs from len(x)={len(x)}")
        if self.c <= 0 and float(self.c).is_integer():
            raise DomainError(f"c={self.c} is a non-positive integer")
        if self.xc is not None:
            xc = tuple(float(v) for v in self.xc)
            if len(xc) != len(x):
                raise DomainError("xc must have the same length as x")
            object.__setattr__(self, "xc", xc)

    @property
    def n(self) -> int:
        return len(self.x)

    def complements(self) -> np.ndarray:
        if self.xc is not None:
            return np.asarray(self.xc)
        return 1.0 - np.asarray(self.x)


@dataclass(frozen=True)
class EvalReport:
    value: float
    strategy: str
    terms_or_nodes: int
    est_abs_error: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise NonConvergenceError(f"non-finite value from {self.strategy}")
        if self.est_abs_error < 0:
            raise ValueError("est_abs_error must be nonnegative")


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1); (a)_0 = 1."""
    if n < 0:
        raise DomainError("pochhammer needs n >= 0")
    if n <= _LOG_DIRECT_LIMIT:
        out = 1.0
        for j in range(n):
            out *= a + j
        return out
    factors = [a + j for j in range(n)]
    if any(f == 0.0 for f in factors):
        return 0.0
    negatives = sum(1 for f in factors if f < 0)
    log_abs = math.fsum(math.log(abs(f)) for f in factors)
    sign = -1.0 if negatives % 2 else 1.0
    return sign * math.exp(log_abs)


def _terminating_order(a: float) -> Optional[int]:
    if a <= 0 and float(a).is_integer():
        return int(-a)
    return None


def fd_series(
    args: FdArgs,
    rel_tol: float = DEFAULT_REL_TOL,
    max_terms: int = DEFAULT_MAX_TERMS,
    log_scale: float = 0.0,
) -> EvalReport:
    """Sum the F_D power series by total-order layers.

    Returns exp(log_scale) * F_D.  A terminating series (a = 0, -1, -2, ...)
    is summed exactly; otherwise summation stops once two consecutive layers,
    each with its geometric tail bound added, fall below rel_tol * |partial sum|.
    """
    if rel_tol <= 0:
        raise ValueError("rel_tol must be positive")
    x = np.asarray(args.x, dtype=float)
    b = np.asarray(args.b, dtype=float)
    q = _terminating_order(args.a)
    xmax = float(np.max(np.abs(x))) if x.size else 0.0
    if q is None and xmax >= 1.0:
        raise DomainError(f"series needs max|x_i| < 1, got {xmax}")

    scale = math.exp(log_scale)
    last_order = q if q is not None else max_terms
    # weighted power sums p_n = sum_j b_j x_j^n, built incrementally
    xpow = np.ones_like(x)
    p = [0.0]
    e = [1.0]
    ratio = 1.0  # (a)_m / (c)_m
    partial = 1.0
    small = 0
    last_layer = 0.0
    for m in range(1, last_order + 1):
        xpow = xpow * x
        p.append(float(np.dot(b, xpow)))
        e.append(math.fsum(p[n] * e[m - n] for n in range(1, m + 1)) / m)
        ratio *= (args.a + m - 1) / (args.c + m - 1)
        layer = ratio * e[m]
        partial += layer
        last_layer = layer
        if q is None:
            # remaining layers are bounded by a geometric series in max|x_i|
            tail = abs(layer) * xmax / (1.0 - xmax)
            if abs(layer) + tail <= rel_tol * abs(partial):
                small += 1
                if small >= 2:
                    return EvalReport(partial * scale, TRUNCATED, m + 1, (abs(layer) + tail) * scale)
            else:
                small = 0
    if q is not None:
        return EvalReport(partial * scale, TERMINATING, q + 1, 0.0)
    raise NonConvergenceError(
        f"F_D series did not converge in {max_terms} layers "
        f"(last layer {last_layer:.3e}, partial {partial:.6g}, max|x|={xmax:.6f})"
    )


def fd_transform(args: FdArgs) -> tuple[FdArgs, float]:
    """Pfaff-type transformation of F_D.

    F_D(a; b; c; x) = prod(1-x_i)^(-b_i) F_D(c-a; b; c; x/(x-1)).
    Returns the transformed arguments and the prefactor.
    """
    x = np.asarray(args.x, dtype=float)
    xc = args.complements()
    if np.any(xc == 0.0):
        raise DomainError("fd_transform undefined when some x_i == 1")
    new_x = x / (x - 1.0)
    new_xc = 1.0 / xc
    log_pref = float(-np.dot(np.asarray(args.b), np.log(np.abs(xc))))
    sign = 1.0
    for bi, v in zip(args.b, xc):
        if v < 0 and not float(bi).is_integer():
            raise DomainError("prefactor is complex for x_i > 1 with non-integer b_i")
        if v < 0 and int(bi) % 2:
            sign = -sign
    out = FdArgs(args.c - args.a, args.b, args.c, tuple(new_x), tuple(new_xc))
    return out, sign * math.exp(log_pref)


def _log_product(b: np.ndarray, one_minus_xt: np.ndarray) -> float:
    return float(-np.dot(b, np.log(one_minus_xt)))


def fd_euler(
    args: FdArgs,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = QUAD_ABS_TOL,
    log_scale: float = 0.0,
) -> EvalReport:
    """Evaluate exp(log_scale) * F_D through the Euler integral (c > a > 0, x_i < 1).

    The interval is split at t = 1/2.  On the left the substitution
    t = v^(1/a) removes a t^(a-1) singularity; on the right 1 - t = exp(-s)
    turns the (1-t)^(c-a-1) endpoint and the near-pole behaviour of
    (1 - x_i t)^(-b_i) for x_i close to 1 into smooth transitions in s.
    """
    a, c = args.a, args.c
    if not (c > a > 0):
        raise StrategyUnavailable(f"Euler integral needs c > a > 0 (a={a}, c={c})")
    x = np.asarray(args.x, dtype=float)
    xc = args.complements()
    if np.any(xc <= 0):
        raise DomainError("Euler integral needs x_i < 1")
    b = np.asarray(args.b, dtype=float)
    log_k = gammaln(c) - gammaln(a) - gammaln(c - a) + log_scale
    cma = c - a

    # left piece, t in (0, 1/2]
    def h_left(t):
        return math.exp(log_k + (cma - 1.0) * math.log1p(-t) + _log_product(b, 1.0 - x * t))

    left_points = sorted({1.0 / abs(v) for v in x if abs(v) > 2.0})
    if a < 1.0:
        vmax = 0.5 ** a

        def f_left(v):
            if v <= 0.0:
                return h_left(0.0) / a
            return h_left(v ** (1.0 / a)) / a

        pts = [p ** a for p in left_points if p < 0.5]
        left, left_err, info_l = _quad(f_left, 0.0, vmax, pts, rel_tol, abs_tol)
    else:

        def f_left(t):
            base = h_left(t)
            return base * (t ** (a - 1.0) if t > 0 else (1.0 if a == 1.0 else 0.0))

        pts = [p for p in left_points if p < 0.5]
        left, left_err, info_l = _quad(f_left, 0.0, 0.5, pts, rel_tol, abs_tol)

    # right piece, 1 - t = exp(-s), s in [ln 2, inf)
    def f_right(s):
        w = math.exp(-s)
        return math.exp(
            log_k + (a - 1.0) * math.log1p(-w) - cma * s + _log_product(b, xc + x * w)
        )

    s0 = math.log(2.0)
    feats = [math.log(xi / xci) for xi, xci in zip(x, xc) if xi > 0 and xi / xci > 2.0]
    s_feat = max(feats) if feats else s0
    s_end = max(s_feat, s0) + 3.0 + (math.log(1.0 / min(rel_tol, 1e-3)) + 12.0) / cma
    pts = [s for s in feats if s0 < s < s_end]
    right, right_err, info_r = _quad(f_right, s0, s_end, pts, rel_tol, abs_tol)
    # beyond s_end the product has saturated and the integrand decays like exp(-cma*s)
    tail = f_right(s_end) / cma
    value = left + right + tail
    nodes = info_l + info_r
    return EvalReport(value, EULER, nodes, abs(left_err) + abs(right_err) + abs(tail))


def _quad(f, lo, hi, points, rel_tol, abs_tol):
    pts = [p for p in points if lo < p < hi]
    kwargs = dict(epsabs=abs_tol, epsrel=max(rel_tol, 1e-13), limit=400, full_output=1)
    if pts:
        kwargs["points"] = pts
    res = integrate.quad(f, lo, hi, **kwargs)
    value, err, info = res[0], res[1], res[2]
    if len(res) > 3 and err > max(abs_tol, rel_tol * abs(value)) * 100:
        raise NonConvergenceError(f"quadrature failed: {res[3]}")
    return value, err, int(info["neval"])


def fd_eval(
    args: FdArgs,
    rel_tol: float = DEFAULT_REL_TOL,
    log_scale: float = 0.0,
    strategy: Optional[str] = None,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> EvalReport:
    """Evaluate exp(log_scale) * F_D with the first applicable strategy.

    Order: terminating series, Euler integral, truncated series (N <= 4).
    ``strategy`` forces a particular route.  Raises StrategyUnavailable when
    nothing applies, so callers can switch to an outer quadrature.
    """
    if strategy == TERMINATING:
        if _terminating_order(args.a) is None:
            raise StrategyUnavailable("series does not terminate for this a")
        return fd_series(args, rel_tol, max_terms, log_scale)
    if strategy == EULER:
        return fd_euler(args, rel_tol, log_scale=log_scale)
    if strategy == TRUNCATED:
        return fd_series(args, rel_tol, max_terms, log_scale)
    if strategy is not None:
        raise ValueError(f"unknown strategy {strategy!r}")

    if _terminating_order(args.a) is not None:
        return fd_series(args, rel_tol, max_terms, log_scale)
    xc = args.complements()
    if args.c > args.a > 0 and np.all(xc > 0):
        return fd_euler(args, rel_tol, log_scale=log_scale)
    if args.n <= N_SERIES_MAX and max(map(abs, args.x), default=0.0) < 1.0:
        return fd_series(args, rel_tol, max_terms, log_scale)
    raise StrategyUnavailable(
        f"no F_D strategy for a={args.a}, c={args.c}, N={args.n}"
    )
