"""Test utilities and helper functions.

Created: 2026-10-19
"""

from typing import Dict, List, Tuple

import numpy as np

from coarse_spectra.core.coefficients import (
    Coefficient,
    Constant,
    Decay,
    Periodic,
    Product,
    Step,
    Sum,
    Table,
)
from coarse_spectra.core.filters import FilterSpec, Frechet, HalfSpace, Obstacle, thicken
from coarse_spectra.core.kernels import BandKernel, random_band_kernel
from coarse_spectra.core.localization import AsymptoticOperatorSpec
from coarse_spectra.core.space import Space, build_lattice_window

# Window of the operator library and the generator scales compared on it.
# Generators at these scales keep adjacent pairs on both sides of the window.
LIBRARY_WINDOW = 30
LIBRARY_SCALES = [float(s) for s in range(16)]


def create_band_kernel(space: Space, bands: Dict[int, Coefficient]) -> BandKernel:
    """Factory for kernels on a window of Z given as offset -> coefficient.

    Args:
        space: One-dimensional lattice window
        bands: Offset j -> c_j with k(x, x+j) = c_j(x)

    Returns:
        BandKernel

    Example:
        kernel = create_band_kernel(space, {1: Constant(1.0), -1: Constant(1.0)})
    """
    spec = AsymptoticOperatorSpec(dimension=1, bands={(j,): c for j, c in bands.items()})
    return spec.kernel_on(space)


def operator_library() -> List[Tuple[str, BandKernel]]:
    """Twenty constructed operators on {-30..30} whose ideal verdicts are clear-cut.

    Every operator either vanishes (up to far less than 1e-3) on some generator
    of each library filter, or has entries of order one on all of them.
    """
    space = build_lattice_window(1, LIBRARY_WINDOW)
    two_deltas = Table(values=(1.0,) + (0.0,) * 9 + (1.0,), start=-5)
    library: List[Tuple[str, Dict[int, Coefficient]]] = [
        ("zero", {}),
        ("delta at 0", {0: Table(values=(1.0,), start=0)}),
        ("right potential", {0: Step(left=0.0, right=1.0, at=0)}),
        ("right hopping", {1: Step(right=1.0, at=0), -1: Step(right=1.0, at=1)}),
        ("fast decay", {0: Decay(amplitude=1.0, power=4.0)}),
        ("slow decay", {0: Decay(amplitude=1.0, power=1.0)}),
        ("identity", {0: Constant(1.0)}),
        ("adjacency", {1: Constant(1.0), -1: Constant(1.0)}),
        ("potential beyond 10", {0: Step(left=0.0, right=1.0, at=10)}),
        ("potential below -10", {0: Step(left=1.0, right=0.0, at=-10)}),
        ("two deltas", {0: two_deltas}),
        ("alternating potential", {0: Periodic(values=(1.0, 0.0))}),
        (
            "local hopping",
            {1: Table(values=(1.0,) * 7, start=-3), -1: Table(values=(1.0,) * 7, start=-2)},
        ),
        ("left potential", {0: Step(left=2.0, right=0.0, at=-5)}),
        ("shift", {1: Constant(1.0)}),
        ("decaying shift", {1: Decay(amplitude=1.0, power=4.0)}),
        ("far potential", {0: Step(left=0.0, right=2.0, at=20)}),
        ("left potential plus decay", {0: Sum((Step(left=2.0, at=-5), Decay(power=4.0)))}),
        ("decaying alternation", {0: Product((Periodic(values=(1.0, -1.0)), Decay(power=4.0)))}),
        ("tiny adjacency", {1: Constant(1e-5), -1: Constant(1e-5)}),
    ]
    return [(name, create_band_kernel(space, bands)) for name, bands in library]


def coarse_filter_library() -> Dict[str, FilterSpec]:
    """Four coarse filters on Z."""
    return {
        "frechet": Frechet(),
        "right": HalfSpace((1,)),
        "left": HalfSpace((-1,)),
        "obstacle": Obstacle(obstacle=(10, -10)),
    }


def create_kernel_pair(
    space: Space, rng: np.random.Generator, max_propagation: int = 2
) -> Tuple[BandKernel, BandKernel]:
    """Two independent random complex band kernels with propagation 1..max_propagation."""
    first = random_band_kernel(space, float(rng.integers(1, max_propagation + 1)), rng)
    second = random_band_kernel(space, float(rng.integers(1, max_propagation + 1)), rng)
    return first, second


def create_set_pair(
    space: Space, rng: np.random.Generator, density: float = 0.7
) -> Tuple[np.ndarray, np.ndarray]:
    """Two independent random subsets of a window as boolean masks."""
    return rng.random(space.size) < density, rng.random(space.size) < density


def create_fat_set(
    space: Space, rng: np.random.Generator, seeds: int = 4, r: float = 3.0
) -> np.ndarray:
    """Union of r-balls around random seed points; its 1-shrink is never empty."""
    mask = np.zeros(space.size, dtype=bool)
    mask[rng.choice(space.size, size=seeds, replace=False)] = True
    return thicken(space, mask, r)


def random_weights(space: Space, rng: np.random.Generator) -> np.ndarray:
    """Point masses drawn from [0.5, 2)."""
    return rng.uniform(0.5, 2.0, space.size)
