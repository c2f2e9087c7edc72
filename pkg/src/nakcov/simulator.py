"""Monte Carlo SIR simulation on the hexagonal layout.

Every block draws, in this order: the user gamma, the user lognormal (only
if a shadowed variant is present), then for each distinct interferer shape
vector one (n, N) gamma matrix and, when needed, one (n, N) normal matrix.
Variants simulated together therefore share draws whenever their shapes
agree, which gives common random numbers for paired comparisons.  Separate
``simulate`` calls with the same seed consume the same streams too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .coverage import SHADOW_DB_TO_NEPER, dominant_interferer, shadowed_correlation, shadowed_laws
from .errors import DomainError
from .gammasum import correlated_spectrum, draw_unit_gammas, standard_gamma, weighted_components
from .montecarlo import BLOCK_SIZE, run_blocks
from .scenario import (
    CORRELATED,
    INID,
    SHADOWED_CORRELATED,
    SHADOWED_INID,
    SHADOWED_SIMO_CANCEL,
    SIMO_CANCEL,
    Scenario,
)

COVERAGE = "coverage"
RATE = "rate"
DEFAULT_TRIALS = 10_000


@dataclass(frozen=True)
class SimEstimate:
    mean: float
    stderr: float
    trials: int
    seed: int
    variant: str
    metric: str = COVERAGE


@dataclass(frozen=True)
class _Plan:
    """Interference model of one variant: sum_i weights_i G_i (x lognormal_i)."""

    shapes: tuple
    weights: np.ndarray
    lognormal: bool
    shadowed_user: bool


def _plan(sc: Scenario, r: float, variant: str, matched: bool = False) -> _Plan:
    sc.check_variant(variant)
    if sc.angles is not None:
        raise DomainError("Monte Carlo runs along a single ray; clear `angles`")
    shadowed = variant in (SHADOWED_INID, SHADOWED_CORRELATED, SHADOWED_SIMO_CANCEL) and sc.sigma_db > 0
    dist = sc.distances(r)
    beta = sc.geometry.beta
    if shadowed and (matched or variant == SHADOWED_CORRELATED):
        # moment-matched gamma interferers; the user keeps the composite law
        _, matched_inter = shadowed_laws(sc.fading, sc.sigma_db)
        comps = weighted_components(matched_inter, dist, beta)
        shapes = tuple(c.shape for c in comps)
        if variant == SHADOWED_CORRELATED:
            corr = shadowed_correlation(sc.corr, sc.shadow_corr, sc.fading.common_shape,
                                        sc.sigma_db, sc.n)
            w = correlated_spectrum(comps, corr).aligned()
        else:
            w = np.array([c.scale for c in comps])
            if variant == SHADOWED_SIMO_CANCEL:
                w[_dominant(sc, r)] = 0.0
        return _Plan(shapes, w, False, True)
    comps = weighted_components(sc.fading.interferers, dist, beta)
    shapes = tuple(c.shape for c in comps)
    if variant in (CORRELATED, SHADOWED_CORRELATED):
        w = correlated_spectrum(comps, sc.effective_corr()).aligned()
    else:
        w = np.array([c.scale for c in comps])
        if variant in (SIMO_CANCEL, SHADOWED_SIMO_CANCEL):
            w[_dominant(sc, r)] = 0.0
    return _Plan(shapes, w, shadowed, shadowed)


def _dominant(sc: Scenario, r: float) -> int:
    return dominant_interferer(sc.fading, sc.query(1.0, r))


def _block_fn(sc: Scenario, r: float, plans: Sequence[_Plan], metric: str, T: Optional[float],
              diffs: Sequence[tuple]):
    sigma = sc.sigma_db / SHADOW_DB_TO_NEPER
    shape_groups = []
    for p in plans:
        if p.shapes not in shape_groups:
            shape_groups.append(p.shapes)
    any_shadow_user = any(p.shadowed_user for p in plans)
    path_gain = r ** (-sc.geometry.beta)
    user = sc.fading.user

    def fn(rng: np.random.Generator, n: int):
        g = user.scale * standard_gamma(rng, user.shape, n)
        z_user = rng.standard_normal(n) if any_shadow_user else None
        draws = {}
        for shapes in shape_groups:
            gm = draw_unit_gammas(rng, shapes, n)
            need_ln = any(p.lognormal for p in plans if p.shapes == shapes)
            zm = np.exp(sigma * rng.standard_normal((n, len(shapes)))) if need_ln else None
            draws[shapes] = (gm, zm)
        outs = []
        for p in plans:
            gm, zm = draws[p.shapes]
            inter = (gm * zm) @ p.weights if p.lognormal else gm @ p.weights
            sig = g * np.exp(sigma * z_user) if p.shadowed_user else g
            with np.errstate(divide="ignore"):
                sir = sig * path_gain / inter
            if metric == COVERAGE:
                outs.append((sir > T).astype(float))
            else:
                outs.append(np.log1p(sir))
        for a, b in diffs:
            outs.append(outs[b] - outs[a])
        return outs

    return fn


def _check_metric(metric: str, T: Optional[float]) -> None:
    if metric == COVERAGE:
        if T is None or not T > 0:
            raise DomainError("coverage metric needs a positive linear threshold T")
    elif metric != RATE:
        raise DomainError(f"unknown metric {metric!r}")


def simulate(scenario: Scenario, r: float, metric: str = COVERAGE, variant: str = INID,
             trials: int = DEFAULT_TRIALS, seed: int = 0, T: Optional[float] = None,
             workers: int = 1, block_size: int = BLOCK_SIZE) -> SimEstimate:
    """Monte Carlo estimate of coverage P(SIR > T) or rate E[ln(1 + SIR)] at distance r."""
    _check_metric(metric, T)
    plan = _plan(scenario, r, variant)
    fn = _block_fn(scenario, r, [plan], metric, T, [])
    (m,) = run_blocks(fn, trials, seed, workers, block_size)
    return SimEstimate(m.mean, m.stderr, trials, seed, variant, metric)


def paired_compare(scenario: Scenario, r: float, metric: str = RATE, trials: int = DEFAULT_TRIALS,
                   seed: int = 0, T: Optional[float] = None, pair: tuple = (INID, CORRELATED),
                   workers: int = 1, block_size: int = BLOCK_SIZE):
    """Estimate both variants of ``pair`` from shared draws, plus their paired gap.

    Returns (first, second, gap) with gap = second - first.  For the shadowed
    pair (shadowed-inid, shadowed-correlated) both sides use the
    moment-matched gamma interferers so that they share their gamma draws.
    """
    _check_metric(metric, T)
    first, second = pair
    matched = SHADOWED_CORRELATED in pair
    plans = [_plan(scenario, r, first, matched), _plan(scenario, r, second, matched)]
    if plans[0].shapes != plans[1].shapes:
        raise DomainError("paired comparison needs equal interferer shapes on both sides")
    fn = _block_fn(scenario, r, plans, metric, T, [(0, 1)])
    ma, mb, md = run_blocks(fn, trials, seed, workers, block_size)
    return (
        SimEstimate(ma.mean, ma.stderr, trials, seed, first, metric),
        SimEstimate(mb.mean, mb.stderr, trials, seed, second, metric),
        SimEstimate(md.mean, md.stderr, trials, seed, f"{second}-minus-{first}", metric),
    )


def unpaired_gap_stderr(a: SimEstimate, b: SimEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)
