"""Exception types shared across the package."""


class NakcovError(Exception):
    """Base class for all package errors."""


class DomainError(NakcovError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class NonConvergenceError(NakcovError, RuntimeError):
    """A series or quadrature failed to reach its tolerance within its budget."""


class StrategyUnavailable(NakcovError, RuntimeError):
    """No evaluation strategy applies to the supplied arguments."""


class ScenarioError(NakcovError, ValueError):
    """A scenario file or scenario object is malformed or inconsistent."""
