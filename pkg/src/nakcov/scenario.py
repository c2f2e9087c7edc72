"""A fully specified network scenario and its per-variant analytic evaluators."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .coverage import (
    CoverageQuery,
    CoverageResult,
    FadingSpec,
    cancel_dominant,
    coverage_correlated,
    coverage_inid,
    coverage_shadowed,
)
from .errors import DomainError
from .gammasum import CorrelationSpec
from .geometry import N_INTERFERERS, NetworkGeometry, interferer_distances

INID = "inid"
CORRELATED = "correlated"
SHADOWED_INID = "shadowed-inid"
SHADOWED_CORRELATED = "shadowed-correlated"
SIMO_CANCEL = "simo-cancel"
SHADOWED_SIMO_CANCEL = "shadowed-simo-cancel"
VARIANTS = (INID, CORRELATED, SHADOWED_INID, SHADOWED_CORRELATED, SIMO_CANCEL, SHADOWED_SIMO_CANCEL)


@dataclass(frozen=True)
class Scenario:
    """Geometry, channel laws and correlation for one network configuration.

    ``bs`` lists which of the 18 surrounding base stations interfere, in the
    order of ``fading.interferers``.  Correlation matrices are indexed in the
    same order.  ``angles`` optionally replaces the single user ray by an
    average over several rays (degrees); angles whose cell boundary lies
    inside r are skipped.
    """

    geometry: NetworkGeometry
    fading: FadingSpec
    bs: tuple = tuple(range(1, N_INTERFERERS + 1))
    corr: Optional[CorrelationSpec] = None
    sigma_db: float = 0.0
    shadow_corr: Optional[CorrelationSpec] = None
    angles: Optional[tuple] = None
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bs", tuple(int(b) for b in self.bs))
        if self.angles is not None:
            object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        n = len(self.fading.interferers)
        if len(self.bs) != n:
            raise DomainError(f"{len(self.bs)} interfering BSs but {n} interferer channels")
        if len(set(self.bs)) != n or any(not 1 <= b <= N_INTERFERERS for b in self.bs):
            raise DomainError(f"interfering BS indices must be distinct values in 1..18, got {self.bs}")
        for name, c in (("correlation", self.corr), ("shadow correlation", self.shadow_corr)):
            if c is not None and c.n != n:
                raise DomainError(f"{name} has dimension {c.n}, expected {n}")
        if self.sigma_db < 0:
            raise DomainError("sigma_dB must be nonnegative")

    @property
    def n(self) -> int:
        return len(self.bs)

    def ray_angles(self, r: float) -> list[float]:
        if self.angles is None:
            return [self.geometry.user_angle_deg]
        ok = [a for a in self.angles if r <= self.geometry.cell_boundary(a) * (1 + 1e-12)]
        if not ok:
            raise DomainError(f"no averaging ray reaches r={r}")
        return ok

    def distances(self, r: float, angle_deg: Optional[float] = None) -> np.ndarray:
        d = interferer_distances(self.geometry, r, angle_deg)
        return d[np.array(self.bs) - 1]

    def query(self, T: float, r: float, angle_deg: Optional[float] = None) -> CoverageQuery:
        return CoverageQuery(T, r, tuple(self.distances(r, angle_deg)), self.geometry.beta)

    def check_variant(self, variant: str) -> None:
        if variant not in VARIANTS:
            raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        if variant in (CORRELATED, SHADOWED_CORRELATED) and self.fading.common_shape is None:
            raise DomainError(f"variant {variant!r} needs equal interferer shapes")

    def effective_corr(self) -> CorrelationSpec:
        return self.corr if self.corr is not None else CorrelationSpec.exponential(0.0, self.n)

    def _coverage_ray(self, q: CoverageQuery, variant: str, method: str) -> CoverageResult:
        if variant == INID:
            return coverage_inid(self.fading, q, method)
        if variant == CORRELATED:
            return coverage_correlated(self.fading, q, self.effective_corr(), method)
        if variant == SHADOWED_INID:
            return coverage_shadowed(self.fading, q, self.sigma_db, method=method)
        if variant == SHADOWED_CORRELATED:
            if self.sigma_db == 0:
                return coverage_correlated(self.fading, q, self.effective_corr(), method)
            return coverage_shadowed(
                self.fading, q, self.sigma_db, self.effective_corr(), self.shadow_corr, method
            )
        spec, q2, _ = cancel_dominant(self.fading, q)
        if variant == SHADOWED_SIMO_CANCEL:
            return coverage_shadowed(spec, q2, self.sigma_db, method=method)
        return coverage_inid(spec, q2, method)

    def coverage(self, T: float, r: float, variant: str = INID, method: str = "auto") -> CoverageResult:
        """Analytic coverage, averaged over rays when ``angles`` is set."""
        self.check_variant(variant)
        res = [self._coverage_ray(self.query(T, r, a), variant, method) for a in self.ray_angles(r)]
        if len(res) == 1:
            return res[0]
        return CoverageResult(
            float(np.mean([x.value for x in res])), res[0].method,
            float(np.mean([x.est_abs_error for x in res])),
        )

    def coverage_fn(self, r: float, variant: str = INID, method: str = "auto") -> Callable[[float], float]:
        self.check_variant(variant)
        self.ray_angles(r)

        def fn(T: float) -> float:
            return self.coverage(T, r, variant, method).value

        return fn
