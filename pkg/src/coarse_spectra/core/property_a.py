"""
Property A witnesses and kernel truncation.

A witness assigns to each point x a unit vector φ(x) with nonnegative
entries supported in B_x(s). Truncation multiplies a kernel entrywise by the
overlap ⟨φ(x), φ(y)⟩, which vanishes once d(x, y) > 2s.

Modified: 2026-10-19
"""

import itertools
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from coarse_spectra.core.exceptions import (
    InsufficientWindowError,
    InvalidInputError,
    InvariantViolationError,
)
from coarse_spectra.core.kernels import BandKernel, _check_same_space, operator_norm
from coarse_spectra.core.models import TruncationRow
from coarse_spectra.core.space import RADIUS_EPS, Space

logger = logging.getLogger(__name__)


class WitnessA(ABC):
    """Property A witness x ↦ φ(x) on a space."""

    space: Space

    @property
    @abstractmethod
    def support_radius(self) -> float:
        """s with supp φ(x) ⊆ B_x(s)."""

    @abstractmethod
    def overlap_values(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """⟨φ(x), φ(y)⟩ for index pairs (rows[k], cols[k])."""

    def overlap(self, x, y) -> float:
        i, j = self.space.index(x), self.space.index(y)
        return float(self.overlap_values(np.array([i]), np.array([j]))[0])

    def squared_distance_values(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """‖φ(x) − φ(y)‖² = 2(1 − overlap) for unit nonnegative profiles."""
        return 2.0 * (1.0 - self.overlap_values(rows, cols))

    def variation(self, r: float) -> float:
        """sup_{d(x,y) ≤ r} ‖φ(x) − φ(y)‖."""
        rows, cols = self.space.pairs_within(r)
        return float(np.sqrt(max(self.squared_distance_values(rows, cols).max(), 0.0)))


@dataclass(frozen=True, eq=False)
class BallWitness(WitnessA):
    """
    φ(x) = |B_x(R)|^{-1/2}·1_{B_x(R)} on the ambient lattice ℤ^d.

    Overlaps depend only on the displacement t = y − x; on ℤ they equal
    (2R+1−|t|)/(2R+1) for |t| ≤ 2R+1.
    """

    space: Space
    radius: int
    _overlap_cache: Dict[Tuple[int, ...], float] = field(default_factory=dict, repr=False)

    @property
    def support_radius(self) -> float:
        return float(self.radius)

    @cached_property
    def offsets(self) -> np.ndarray:
        """Offsets o ∈ ℤ^d with ‖o‖₁ ≤ R."""
        assert self.space.ambient is not None
        d, R = self.space.ambient.dimension, self.radius
        grid = np.array(list(itertools.product(range(-R, R + 1), repeat=d)), dtype=np.int64)
        return grid[np.abs(grid).sum(axis=1) <= R]

    def _shift_overlap(self, t: Tuple[int, ...]) -> float:
        if t not in self._overlap_cache:
            shifted = np.abs(self.offsets - np.asarray(t)).sum(axis=1) <= self.radius
            self._overlap_cache[t] = float(np.count_nonzero(shifted)) / len(self.offsets)
        return self._overlap_cache[t]

    def displacements(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """y − x in ℤ^d, minimal image on periodic windows."""
        assert self.space.coords is not None and self.space.ambient is not None
        t = self.space.coords[cols] - self.space.coords[rows]
        if self.space.is_periodic:
            side, w = self.space.ambient.side, self.space.ambient.radius
            t = np.mod(t + w, side) - w
        return t

    def overlap_values(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        t = self.displacements(rows, cols)
        if t.shape[1] == 1:
            width = 2 * self.radius + 1
            return np.maximum(0, width - np.abs(t[:, 0])) / width
        unique, inverse = np.unique(t, axis=0, return_inverse=True)
        values = np.array([self._shift_overlap(tuple(int(c) for c in row)) for row in unique])
        return values[np.asarray(inverse).reshape(-1)]

    def profile(self, x) -> Dict[Tuple[int, ...], float]:
        """φ(x) as ambient lattice point ↦ value."""
        assert self.space.coords is not None
        center = self.space.coords[self.space.index(x)]
        value = 1.0 / np.sqrt(len(self.offsets))
        return {tuple(int(c) for c in center + o): value for o in self.offsets}


@dataclass(frozen=True, eq=False)
class TableWitness(WitnessA):
    """Witness given by an explicit table of profiles over the window (ℋ = L²(X, μ))."""

    space: Space
    profiles: np.ndarray
    radius: float

    @property
    def support_radius(self) -> float:
        return self.radius

    @cached_property
    def _gram(self) -> np.ndarray:
        return (self.profiles * self.space.weights) @ self.profiles.T

    def overlap_values(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        return self._gram[rows, cols]

    def profile(self, x) -> np.ndarray:
        return self.profiles[self.space.index(x)]


def witness_ball_average(space: Space, R: int) -> BallWitness:
    """
    Følner-ball witness on a lattice window.

    The support radius is s = R, so a window of radius W hosts the witness
    together with its R + s margin only when 2R ≤ W.

    Raises:
        InvalidInputError: If the space is not a lattice window or R < 0
        InsufficientWindowError: If the window is narrower than the R + s margin
    """
    if space.ambient is None or space.coords is None:
        raise InvalidInputError("ball witnesses need a lattice window")
    if R < 0:
        raise InvalidInputError(f"witness radius must be >= 0, got {R}")
    margin = 2 * R
    if margin > space.ambient.radius and space.ambient.radius > 0:
        raise InsufficientWindowError(
            f"witness radius {R} needs a margin of {margin} but the window radius is "
            f"{space.ambient.radius}"
        )
    return BallWitness(space=space, radius=int(R))


def witness_from_table(
    space: Space, profiles: Union[np.ndarray, Sequence[Sequence[float]]], tol: float = 1e-12
) -> TableWitness:
    """
    Validate an explicit profile table.

    Args:
        space: Space the profiles live on
        profiles: n×n array, row x is φ(x)
        tol: Unit-norm tolerance

    Raises:
        InvalidInputError: On complex or negative entries, or non-unit rows
    """
    table = np.asarray(profiles)
    if np.iscomplexobj(table):
        raise InvalidInputError("witness profiles must be real (complex witnesses rejected)")
    table = table.astype(float)
    n = space.size
    if table.shape != (n, n):
        raise InvalidInputError(f"profile table must be {n}x{n}")
    if np.any(table < 0):
        raise InvalidInputError("witness profiles must be nonnegative")
    norms = np.sqrt((table**2 * space.weights).sum(axis=1))
    if np.any(np.abs(norms - 1.0) > tol):
        raise InvalidInputError("every profile must be a unit vector")

    rows, cols = np.nonzero(table)
    reach = float(space.pair_distances(rows, cols).max()) if len(rows) else 0.0
    return TableWitness(space=space, profiles=table, radius=reach)


def verify_witness_support(witness: WitnessA) -> float:
    """
    Scan overlaps just beyond 2s and return the largest one found (0 when sound).

    Raises:
        InvariantViolationError: If some overlap beyond 2s is nonzero
    """
    space = witness.space
    reach = 2 * witness.support_radius
    rows, cols = space.pairs_within(reach + 2)
    far = space.pair_distances(rows, cols) > reach + RADIUS_EPS
    worst = 0.0
    if far.any():
        worst = float(np.abs(witness.overlap_values(rows[far], cols[far])).max())
    if worst > 0:
        raise InvariantViolationError(f"overlap {worst} at distance beyond 2s = {reach}")
    return worst


def truncate(
    k: Union[BandKernel, np.ndarray, sp.spmatrix],
    witness: WitnessA,
    verify: bool = True,
) -> BandKernel:
    """
    k_φ(x,y) = ⟨φ(x), φ(y)⟩·k(x,y), with d(k_φ) ≤ min(d(k), 2s).

    Args:
        k: Kernel, or a full window matrix of kernel entries
        witness: Property A witness on the same space
        verify: Check the contraction ‖T_φ‖ ≤ ‖T‖ numerically

    Raises:
        InvariantViolationError: If the contraction check fails
    """
    if not isinstance(k, BandKernel):
        k = BandKernel.from_matrix(witness.space, k)
    _check_same_space(k.space, witness.space)

    coo = k.matrix.tocoo()
    data = coo.data * witness.overlap_values(coo.row, coo.col)
    n = k.space.size
    matrix = sp.csr_matrix((data, (coo.row, coo.col)), shape=(n, n))
    truncated = BandKernel(
        k.space, min(k.propagation, 2 * witness.support_radius), matrix
    )

    if verify and k.matrix.nnz:
        before, after = operator_norm(k), operator_norm(truncated)
        if after > before + 1e-9:
            raise InvariantViolationError(f"truncation increased the norm: {after} > {before}")
    return truncated


def truncation_error_bound(k: BandKernel, witness: WitnessA) -> float:
    """(sup|k|/2)·max_x Σ_{y∈B_x(d(k))} w(y)‖φ(x) − φ(y)‖²."""
    _check_same_space(k.space, witness.space)
    if k.matrix.nnz == 0:
        return 0.0
    space = k.space
    rows, cols = space.pairs_within(k.propagation)
    spread = witness.squared_distance_values(rows, cols) * space.weights[cols]
    per_point = np.bincount(rows, weights=spread, minlength=space.size)
    return float(k.sup_norm / 2.0 * per_point.max())


def truncation_sweep(
    k: BandKernel,
    radii: Sequence[int],
    witness_factory: Callable[[Space, int], WitnessA] = witness_ball_average,
) -> List[TruncationRow]:
    """
    Measured ‖T − T_φ‖ against the error bound for each witness radius.

    Raises:
        InvariantViolationError: If a measured error exceeds its bound
    """
    return [truncation_row(k, witness_factory(k.space, int(R))) for R in radii]


def truncation_row(k: BandKernel, witness: WitnessA) -> TruncationRow:
    """
    Measured ‖T − T_φ‖ and its bound for one witness.

    Raises:
        InvariantViolationError: If the measured error exceeds the bound
    """
    R = int(np.ceil(witness.support_radius))
    truncated = truncate(k, witness, verify=False)
    measured = operator_norm(k - truncated)
    bound = truncation_error_bound(k, witness)
    logger.info(f"truncation R={R}: measured={measured:.6g} bound={bound:.6g}")
    if measured > bound + 1e-9:
        raise InvariantViolationError(f"truncation error {measured} exceeds bound {bound} at R={R}")
    return TruncationRow(radius=R, measured=measured, bound=bound)


def witness_from_dict(space: Space, data: Dict) -> WitnessA:
    """Build a witness from {kind: "ball", R} or {kind: "table", profiles}."""
    kind = data.get("kind", "ball")
    if kind == "ball":
        return witness_ball_average(space, int(data.get("R", 0)))
    if kind == "table":
        return witness_from_table(space, data["profiles"])
    raise InvalidInputError(f"unknown witness kind '{kind}'")
