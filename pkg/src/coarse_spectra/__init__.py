"""
coarse-spectra

Controlled-kernel calculus, Property A truncation, ghost and coarse-ideal
diagnostics, limit operators and essential spectra on discrete
metric-measure spaces.

Created: 2026-10-19
"""

__version__ = "0.1.0"
