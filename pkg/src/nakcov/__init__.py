"""Coverage and rate of a downlink cellular user under Nakagami fading with
correlated, non-identical interferers."""

from .coverage import (
    CoverageQuery,
    CoverageResult,
    FadingSpec,
    coverage_correlated,
    coverage_inid,
    coverage_rayleigh_inid,
    coverage_shadowed,
)
from .errors import DomainError, NakcovError, NonConvergenceError, ScenarioError, StrategyUnavailable
from .gammasum import CorrelationSpec, GammaComponent
from .geometry import NetworkGeometry, hex_layout, interferer_distances
from .rate import RateResult, avg_rate, rate_curve
from .scenario import VARIANTS, Scenario
from .simulator import SimEstimate, paired_compare, simulate

__version__ = "0.1.0"
