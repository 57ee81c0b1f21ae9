"""
Exception hierarchy for balance-flux.

Library code raises these; the verification layer turns them into failed
report entries and the CLI turns them into a non-zero exit code.
"""

from typing import Any, Optional, Sequence


class BalanceFluxError(Exception):
    """Base class for all balance-flux errors"""
    pass


class ModelDomainError(BalanceFluxError):
    """Raised when a state lies outside a model's admissible set"""

    def __init__(self, message: str, component: Optional[str] = None):
        super().__init__(message)
        self.component = component


class PreconditionError(BalanceFluxError):
    """Raised when an operation is called with arguments violating its contract"""
    pass


class RiemannSolverError(BalanceFluxError):
    """Raised when the star-state iteration does not converge"""

    def __init__(self, message: str, last_iterate: Any = None):
        super().__init__(message)
        self.last_iterate = last_iterate


class QuadratureAccuracyError(BalanceFluxError):
    """Raised when a quadrature cannot reach the requested tolerance"""

    def __init__(self, message: str, achieved: float = float("nan")):
        super().__init__(message)
        self.achieved = achieved


class GeometryError(BalanceFluxError):
    """Raised for empty, inverted or otherwise invalid domains"""
    pass


class SamplerDomainError(BalanceFluxError):
    """Raised when a sampler is asked about a face it cannot represent"""
    pass


class DegenerateStepError(BalanceFluxError):
    """Raised when no positive time step can be formed"""
    pass


class CheckpointError(BalanceFluxError):
    """Raised when a trajectory has no record at the requested time"""
    pass


class ConfigError(BalanceFluxError):
    """Raised when a run configuration fails validation"""

    def __init__(self, message: str, paths: Sequence[str] = ()):
        super().__init__(message)
        self.paths = list(paths)
