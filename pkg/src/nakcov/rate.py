"""Average rate E[ln(1 + SIR)] obtained by integrating coverage over the threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from scipy import integrate

from .errors import NonConvergenceError

DEFAULT_ABS_TOL = 1e-7
T_LIMIT = 200.0
QUADRATURE = "threshold-quadrature"


@dataclass(frozen=True)
class RateResult:
    """Average rate in nats per channel use."""

    value: float
    est_abs_error: float
    method: str = QUADRATURE

    def __post_init__(self):
        if self.value < 0:
            if self.value < -self.est_abs_error - 1e-12:
                raise NonConvergenceError(f"negative rate {self.value}")
            object.__setattr__(self, "value", 0.0)


@dataclass(frozen=True)
class RatePoint:
    r: float
    variant: str
    value: float
    est_abs_error: float
    method: str


def _cutoff(f: Callable[[float], float], threshold: float) -> float:
    t = 4.0
    while f(t) >= threshold:
        if t >= T_LIMIT:
            raise NonConvergenceError(
                f"coverage still {f(t):.3g} at t={T_LIMIT}; rate integral tail not controlled"
            )
        t = min(2.0 * t, T_LIMIT)
    return t


def avg_rate(coverage_fn: Callable[[float], float], r: Optional[float] = None,
             abs_tol: float = DEFAULT_ABS_TOL) -> RateResult:
    """R = int_0^inf P_c(e^t - 1) dt for a coverage function of the linear threshold.

    ``r`` is carried only for labelling; ``coverage_fn`` already encodes the
    user position.  The integration range stops where the integrand drops
    below abs_tol / 10; the neglected tail is bounded assuming the integrand
    decays at least geometrically from there on.
    """
    def f(t):
        return coverage_fn(math.expm1(t)) if t > 0 else 1.0

    t_max = _cutoff(f, abs_tol / 10.0)
    val, err = integrate.quad(f, 0.0, t_max, epsabs=abs_tol / 4.0, epsrel=1e-10, limit=400)
    f_end = f(t_max)
    f_prev = f(t_max - 1.0)
    if f_end <= 0.0:
        tail = 0.0
    elif f_prev > f_end:
        # geometric decay with ratio f_end / f_prev per unit t
        tail = f_end / math.log(f_prev / f_end)
    else:
        tail = f_end * (T_LIMIT - t_max)
    return RateResult(max(val, 0.0), abs(err) + tail)


def rate_curve(scenario, r_grid: Sequence[float], variant: str,
               abs_tol: float = DEFAULT_ABS_TOL) -> list[RatePoint]:
    """avg_rate at each r of ``r_grid`` using ``scenario``'s analytic evaluator for ``variant``."""
    out = []
    for r in r_grid:
        fn = scenario.coverage_fn(float(r), variant)
        res = avg_rate(fn, float(r), abs_tol)
        out.append(RatePoint(float(r), variant, res.value, res.est_abs_error, res.method))
    return out
