"""
Core numerics for coarse-spectra.

Spaces, kernels, filters, ideals, localizations and spectra. All modules are
interface-agnostic; the CLI is a thin layer on top.

Modified: 2026-10-19
"""

from coarse_spectra.core.exceptions import (
    CoarseSpectraError,
    ConfigurationError,
    InvalidInputError,
    InvariantViolationError,
    ObstructionError,
)

__all__ = [
    "CoarseSpectraError",
    "ConfigurationError",
    "InvalidInputError",
    "InvariantViolationError",
    "ObstructionError",
]
