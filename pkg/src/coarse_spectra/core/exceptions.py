"""
Custom exceptions for coarse-spectra.

Every error carries the process exit code the CLI reports for it:
1 invariant violation, 2 invalid input, 3 mathematical obstruction.

Modified: 2026-10-19
"""

from typing import Any, Optional


class CoarseSpectraError(Exception):
    """Base exception for all coarse-spectra errors."""

    exit_code = 1


class InvalidInputError(CoarseSpectraError):
    """Raised when an input document or argument is malformed."""

    exit_code = 2


class SpecFormatError(InvalidInputError):
    """Raised when a JSON spec document cannot be interpreted."""

    pass


class SpaceMismatchError(InvalidInputError):
    """Raised when kernels or vectors living on different spaces are combined."""

    pass


class DisconnectedGraphError(InvalidInputError):
    """Raised when a graph space is not connected (its metric would be infinite)."""

    pass


class WindowCapError(InvalidInputError):
    """Raised when a window would exceed the configured size cap."""

    def __init__(self, message: str, size: int = 0, cap: int = 0):
        super().__init__(message)
        self.size = size
        self.cap = cap


class InsufficientWindowError(InvalidInputError):
    """Raised when a window is too small for the requested radius."""

    pass


class ContainmentError(InvalidInputError):
    """Raised when a cutoff is requested for sets violating G_(r) ⊆ F."""

    pass


class NonSelfAdjointError(InvalidInputError):
    """Raised when a self-adjoint operation receives a non-self-adjoint input."""

    pass


class AperiodicError(InvalidInputError):
    """Raised when a Floquet computation receives non-periodic coefficients."""

    pass


class ConfigurationError(CoarseSpectraError):
    """Raised when configuration is invalid."""

    exit_code = 2


class InvariantViolationError(CoarseSpectraError):
    """Raised when a checked contract fails numerically."""

    exit_code = 1


class ObstructionError(CoarseSpectraError):
    """Raised when a computation is mathematically blocked (no limit, no horizon left)."""

    exit_code = 3


class NoLimitError(ObstructionError):
    """Raised when a band coefficient has no limit along a direction proxy."""

    def __init__(
        self,
        message: str,
        band: Optional[tuple] = None,
        proxy: Optional[str] = None,
        amplitude: float = 0.0,
    ):
        super().__init__(message)
        self.band = band
        self.proxy = proxy
        self.amplitude = amplitude


class HorizonExhaustedError(ObstructionError):
    """Raised when no generator of a filter meets the window."""

    pass


class MarginExhaustedError(ObstructionError):
    """Raised when a translation leaves no overlap with the window."""

    pass


class FactorizationDepthError(ObstructionError):
    """Raised when a factorization cannot reach the requested depth inside the window."""

    def __init__(self, message: str, achieved_depth: int = 0, partial: Any = None):
        super().__init__(message)
        self.achieved_depth = achieved_depth
        self.partial = partial


class NormConvergenceError(ObstructionError):
    """Raised when the iterative norm oracle does not converge."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual
