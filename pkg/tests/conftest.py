"""Shared test fixtures for coarse-spectra tests.

Created: 2026-10-19
"""

import json
from pathlib import Path

import numpy as np
import pytest

from coarse_spectra.config.settings import Settings
from coarse_spectra.core.coefficients import Constant, Step
from coarse_spectra.core.filters import DirectionProxy
from coarse_spectra.core.ideals import build_hls
from coarse_spectra.core.localization import AsymptoticOperatorSpec, ProxyDeclaration
from coarse_spectra.core.space import build_graph_space, build_lattice_window

INPUTS_DIR = Path(__file__).resolve().parents[1] / "docs" / "inputs"


@pytest.fixture
def settings():
    """Default settings, no config file involved."""
    return Settings()


@pytest.fixture
def rng():
    """Seeded generator so randomized suites are reproducible."""
    return np.random.default_rng(20261019)


@pytest.fixture
def line_window():
    """Truncated window {-20..20} of Z."""
    return build_lattice_window(1, 20)


@pytest.fixture
def square_window():
    """Truncated window {-6..6}^2 of Z^2 (169 points)."""
    return build_lattice_window(2, 6)


@pytest.fixture
def ring_window():
    """Periodic window Z/11Z."""
    return build_lattice_window(1, 5, "periodic")


@pytest.fixture
def path_graph():
    """Path graph on six vertices 0-1-2-3-4-5."""
    return build_graph_space([(i, i + 1) for i in range(5)])


@pytest.fixture
def free_spec():
    """2 - S - S* on Z."""
    return AsymptoticOperatorSpec(
        dimension=1,
        bands={(0,): Constant(2.0), (1,): Constant(-1.0), (-1,): Constant(-1.0)},
        self_adjoint=True,
        name="free",
    )


@pytest.fixture
def step_spec():
    """2 - S - S* + V with V = 0 on the left half-line and 5 on the right."""
    return AsymptoticOperatorSpec(
        dimension=1,
        bands={
            (0,): Step(left=2.0, right=7.0, at=0),
            (1,): Constant(-1.0),
            (-1,): Constant(-1.0),
        },
        proxies=(
            ProxyDeclaration(DirectionProxy((1,)), {(0,): Constant(7.0)}),
            ProxyDeclaration(DirectionProxy((-1,)), {(0,): Constant(2.0)}),
        ),
        self_adjoint=True,
        name="step",
    )


@pytest.fixture
def small_hls():
    """HLS ghost projection with component sizes 1, 2, 3."""
    return build_hls([1, 2, 3])


@pytest.fixture
def inputs_dir():
    """Sample input documents shipped with the docs."""
    return INPUTS_DIR


@pytest.fixture
def write_document(tmp_path):
    """Write a JSON document to a temporary file and return its path.

    Usage:
        path = write_document({"space": {...}, "operator": {...}})
    """

    def write(data, name="document.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return write
