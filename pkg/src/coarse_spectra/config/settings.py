"""
Configuration management for coarse-spectra.

Hierarchical settings loading: defaults → config file → .env → environment variables

Modified: 2026-10-19
"""

import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

from coarse_spectra.core.exceptions import ConfigurationError

DEFAULT_MAX_POINTS = 200_000
DEFAULT_DENSE_CAP = 1500
DEFAULT_MAX_GRAPH_POINTS = 2000

DEFAULT_NORM_TOL = 1e-10
DEFAULT_SELF_ADJOINT_TOL = 1e-10
DEFAULT_RESIDUAL_TOL = 1e-8
DEFAULT_LIMIT_TOL = 1e-8
DEFAULT_MERGE_TOL = 1e-9
DEFAULT_VERDICT_TOL = 1e-3

DEFAULT_MAX_ITERATIONS = 5000
DEFAULT_BAND_CAP = 64

DEFAULT_FLOQUET_GRID = 512
DEFAULT_TORUS_GRID = 96
DEFAULT_HAUSDORFF_STEP = 1e-3

DEFAULT_CAUCHY_WINDOW = 10
DEFAULT_MAX_PERIOD = 8
DEFAULT_LIMIT_HORIZON = 10**9


@dataclass
class WindowSettings:
    """Window size caps."""

    max_points: int = DEFAULT_MAX_POINTS
    dense_cap: int = DEFAULT_DENSE_CAP  # largest window handled with dense SVD
    max_graph_points: int = DEFAULT_MAX_GRAPH_POINTS  # graph spaces keep a full distance table


@dataclass
class ToleranceSettings:
    """Numerical tolerances."""

    norm: float = DEFAULT_NORM_TOL
    self_adjoint: float = DEFAULT_SELF_ADJOINT_TOL
    limit: float = DEFAULT_LIMIT_TOL
    merge: float = DEFAULT_MERGE_TOL
    verdict: float = DEFAULT_VERDICT_TOL


@dataclass
class NormSettings:
    """Operator norm oracle settings."""

    max_iterations: int = DEFAULT_MAX_ITERATIONS
    band_cap: int = DEFAULT_BAND_CAP  # widest Gram band solved with LAPACK band routines


@dataclass
class SpectraSettings:
    """Spectral pipeline settings."""

    floquet_grid: int = DEFAULT_FLOQUET_GRID
    torus_grid: int = DEFAULT_TORUS_GRID
    hausdorff_step: float = DEFAULT_HAUSDORFF_STEP


@dataclass
class LocalizationSettings:
    """Limit detection settings."""

    cauchy_window: int = DEFAULT_CAUCHY_WINDOW
    max_period: int = DEFAULT_MAX_PERIOD
    horizon: int = DEFAULT_LIMIT_HORIZON  # first proxy index sampled by the Cauchy test


@dataclass
class ParallelSettings:
    """Worker pool settings."""

    threads: Optional[int] = None  # None uses every core


@dataclass
class OutputSettings:
    """Report output settings."""

    indent: int = 2
    csv_precision: int = 17


@dataclass
class Settings:
    """Main settings container."""

    window: WindowSettings = field(default_factory=WindowSettings)
    tolerances: ToleranceSettings = field(default_factory=ToleranceSettings)
    norm: NormSettings = field(default_factory=NormSettings)
    spectra: SpectraSettings = field(default_factory=SpectraSettings)
    localization: LocalizationSettings = field(default_factory=LocalizationSettings)
    parallel: ParallelSettings = field(default_factory=ParallelSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    @classmethod
    def load(cls, config_path: Optional[Path] = None) -> "Settings":
        """
        Load settings from file and environment variables.

        Priority:
        1. Default values (defined in dataclasses)
        2. Config file (~/.config/coarse-spectra/config.yaml)
        3. Environment variables, after reading a local .env file

        Args:
            config_path: Optional path to config file

        Returns:
            Settings instance

        Raises:
            ConfigurationError: If a value has the wrong type or is out of range
        """
        settings = cls()

        if config_path is None:
            config_path = Path.home() / ".config" / "coarse-spectra" / "config.yaml"

        if config_path.exists():
            with open(config_path) as f:
                try:
                    config_data = yaml.safe_load(f) or {}
                except yaml.YAMLError as e:
                    raise ConfigurationError(f"Cannot parse {config_path}: {e}") from e

            if not isinstance(config_data, dict):
                raise ConfigurationError(f"{config_path} must contain a mapping")

            if "window" in config_data:
                window = config_data["window"]
                settings.window = WindowSettings(
                    max_points=int(window.get("max_points", DEFAULT_MAX_POINTS)),
                    dense_cap=int(window.get("dense_cap", DEFAULT_DENSE_CAP)),
                    max_graph_points=int(
                        window.get("max_graph_points", DEFAULT_MAX_GRAPH_POINTS)
                    ),
                )

            if "tolerances" in config_data:
                tol = config_data["tolerances"]
                settings.tolerances = ToleranceSettings(
                    norm=float(tol.get("norm", DEFAULT_NORM_TOL)),
                    self_adjoint=float(tol.get("self_adjoint", DEFAULT_SELF_ADJOINT_TOL)),
                    limit=float(tol.get("limit", DEFAULT_LIMIT_TOL)),
                    merge=float(tol.get("merge", DEFAULT_MERGE_TOL)),
                    verdict=float(tol.get("verdict", DEFAULT_VERDICT_TOL)),
                )

            if "norm" in config_data:
                norm = config_data["norm"]
                settings.norm = NormSettings(
                    max_iterations=int(norm.get("max_iterations", DEFAULT_MAX_ITERATIONS)),
                    band_cap=int(norm.get("band_cap", DEFAULT_BAND_CAP)),
                )

            if "spectra" in config_data:
                spectra = config_data["spectra"]
                settings.spectra = SpectraSettings(
                    floquet_grid=int(spectra.get("floquet_grid", DEFAULT_FLOQUET_GRID)),
                    torus_grid=int(spectra.get("torus_grid", DEFAULT_TORUS_GRID)),
                    hausdorff_step=float(
                        spectra.get("hausdorff_step", DEFAULT_HAUSDORFF_STEP)
                    ),
                )

            if "localization" in config_data:
                loc = config_data["localization"]
                settings.localization = LocalizationSettings(
                    cauchy_window=int(loc.get("cauchy_window", DEFAULT_CAUCHY_WINDOW)),
                    max_period=int(loc.get("max_period", DEFAULT_MAX_PERIOD)),
                    horizon=int(loc.get("horizon", DEFAULT_LIMIT_HORIZON)),
                )

            if "parallel" in config_data:
                threads = config_data["parallel"].get("threads")
                settings.parallel = ParallelSettings(
                    threads=int(threads) if threads is not None else None
                )

            if "output" in config_data:
                output = config_data["output"]
                settings.output = OutputSettings(
                    indent=int(output.get("indent", 2)),
                    csv_precision=int(output.get("csv_precision", 17)),
                )

        # Override with environment variables
        load_dotenv()

        threads_env = os.getenv("COARSE_SPECTRA_THREADS")
        if threads_env:
            settings.parallel.threads = _parse_int("COARSE_SPECTRA_THREADS", threads_env)

        max_points_env = os.getenv("COARSE_SPECTRA_MAX_POINTS")
        if max_points_env:
            settings.window.max_points = _parse_int("COARSE_SPECTRA_MAX_POINTS", max_points_env)

        grid_env = os.getenv("COARSE_SPECTRA_FLOQUET_GRID")
        if grid_env:
            settings.spectra.floquet_grid = _parse_int("COARSE_SPECTRA_FLOQUET_GRID", grid_env)

        settings.validate()
        return settings

    def validate(self) -> None:
        """Check ranges; every tolerance must be positive."""
        for name, value in asdict(self.tolerances).items():
            if not value > 0:
                raise ConfigurationError(f"tolerance '{name}' must be > 0, got {value}")
        if self.window.max_points < 1 or self.window.dense_cap < 1:
            raise ConfigurationError("window caps must be positive")
        if self.parallel.threads is not None and self.parallel.threads < 1:
            raise ConfigurationError("parallel.threads must be >= 1")
        if self.spectra.floquet_grid < 4 or self.spectra.floquet_grid % 2:
            raise ConfigurationError("spectra.floquet_grid must be an even number >= 4")
        if self.localization.cauchy_window < 2:
            raise ConfigurationError("localization.cauchy_window must be >= 2")
        if self.localization.max_period < 1 or self.localization.horizon < 0:
            raise ConfigurationError("localization needs max_period >= 1 and horizon >= 0")
        if self.norm.max_iterations < 1 or self.norm.band_cap < 0:
            raise ConfigurationError("norm needs max_iterations >= 1 and band_cap >= 0")

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to dictionary."""
        return {
            "window": asdict(self.window),
            "tolerances": asdict(self.tolerances),
            "norm": asdict(self.norm),
            "spectra": asdict(self.spectra),
            "localization": asdict(self.localization),
            "parallel": asdict(self.parallel),
            "output": asdict(self.output),
        }


def _parse_int(name: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigurationError(f"{name} must be an integer, got '{raw}'") from e


def get_config_dir() -> Path:
    """Get configuration directory, creating if needed."""
    config_dir = Path.home() / ".config" / "coarse-spectra"
    config_dir.mkdir(parents=True, exist_ok=True)
    return config_dir
