"""
Configuration management for coarse-spectra.

Handles loading and merging configuration from multiple sources:
- Default settings
- User config file (~/.config/coarse-spectra/config.yaml)
- .env file and environment variables

Modified: 2026-10-19
"""

from coarse_spectra.config.settings import (
    LocalizationSettings,
    NormSettings,
    OutputSettings,
    ParallelSettings,
    Settings,
    SpectraSettings,
    ToleranceSettings,
    WindowSettings,
    get_config_dir,
)

__all__ = [
    "Settings",
    "WindowSettings",
    "ToleranceSettings",
    "NormSettings",
    "SpectraSettings",
    "LocalizationSettings",
    "ParallelSettings",
    "OutputSettings",
    "get_config_dir",
]
