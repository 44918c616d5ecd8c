"""
Discrete metric-measure spaces: lattice windows, graphs and subsets of ℤ^d.

A Space is an immutable finite window of a proper metric-measure space.
Lattice and subset spaces carry integer coordinates with the ℓ¹ metric
(toroidal on periodic windows); graph spaces carry a shortest-path table.

Modified: 2026-10-19
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from coarse_spectra.config.settings import DEFAULT_MAX_GRAPH_POINTS, DEFAULT_MAX_POINTS
from coarse_spectra.core.exceptions import (
    DisconnectedGraphError,
    InsufficientWindowError,
    InvalidInputError,
    InvariantViolationError,
    WindowCapError,
)

logger = logging.getLogger(__name__)

Point = Hashable

# Radii are compared against integer or real distances; this absorbs rounding in r.
RADIUS_EPS = 1e-9


class SpaceKind(str, Enum):
    """How the metric of a space is realized."""

    LATTICE = "lattice"
    GRAPH = "graph"
    SUBSET = "subset"


class BoundaryPolicy(str, Enum):
    """Window-edge semantics for lattice windows."""

    TRUNCATE = "truncate"
    PERIODIC = "periodic"


@dataclass(frozen=True)
class LatticeAmbient:
    """Ambient lattice ℤ^d seen through the window {−W..W}^d."""

    dimension: int
    radius: int

    @property
    def side(self) -> int:
        return 2 * self.radius + 1


@dataclass(frozen=True, eq=False)
class Space:
    """
    Finite window of a discrete metric-measure space.

    Points are ordered; every array indexed by points (weights, profiles,
    set masks) follows that order.
    """

    kind: SpaceKind
    points: Tuple[Point, ...]
    weights: np.ndarray
    coords: Optional[np.ndarray] = None
    distance_table: Optional[np.ndarray] = None
    ambient: Optional[LatticeAmbient] = None
    boundary_policy: BoundaryPolicy = BoundaryPolicy.TRUNCATE
    origin: int = 0

    def __post_init__(self) -> None:
        if len(self.points) == 0:
            raise InvalidInputError("a space needs at least one point")
        if self.weights.shape != (len(self.points),):
            raise InvalidInputError("one weight per point is required")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise InvalidInputError("weights must be finite and strictly positive")
        if (self.coords is None) == (self.distance_table is None):
            raise InvalidInputError("a space has either coordinates or a distance table")

    # ------------------------------------------------------------------
    # Basic accessors
    # ------------------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dimension(self) -> Optional[int]:
        return None if self.coords is None else int(self.coords.shape[1])

    @property
    def is_counting(self) -> bool:
        """True when μ is the counting measure."""
        return bool(np.all(self.weights == 1.0))

    @property
    def is_periodic(self) -> bool:
        return self.kind == SpaceKind.LATTICE and self.boundary_policy == BoundaryPolicy.PERIODIC

    @property
    def has_edge(self) -> bool:
        """True for truncated lattice windows, whose outer layers are boundary artifacts."""
        return (
            self.kind == SpaceKind.LATTICE
            and self.boundary_policy == BoundaryPolicy.TRUNCATE
            and self.ambient is not None
            and self.ambient.radius >= 1
        )

    @cached_property
    def _index(self) -> Dict[Point, int]:
        return {point: i for i, point in enumerate(self.points)}

    def index(self, point: Point) -> int:
        """Position of a point id in the point order."""
        try:
            return self._index[point]
        except KeyError as e:
            raise InvalidInputError(f"point {point!r} is not in the space") from e

    def indices(self, points: Sequence[Point]) -> np.ndarray:
        return np.array([self.index(p) for p in points], dtype=np.int64)

    def mask(self, points: Sequence[Point]) -> np.ndarray:
        """Boolean mask of a point set."""
        out = np.zeros(self.size, dtype=bool)
        out[self.indices(points)] = True
        return out

    def points_of(self, mask: np.ndarray) -> List[Point]:
        return [self.points[i] for i in np.flatnonzero(mask)]

    def index_of_coords(self, coords: np.ndarray) -> np.ndarray:
        """
        Map integer coordinates to point indices.

        Args:
            coords: Array of shape (m, d)

        Returns:
            Index array of length m; −1 marks coordinates outside the window
        """
        if self.coords is None:
            raise InvalidInputError("graph spaces have no coordinates")
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.coords.shape[1])
        if self.kind == SpaceKind.LATTICE and self.ambient is not None:
            w, side = self.ambient.radius, self.ambient.side
            shifted = coords + w
            if self.is_periodic:
                shifted = np.mod(shifted, side)
                valid = np.ones(len(coords), dtype=bool)
            else:
                valid = np.all((shifted >= 0) & (shifted < side), axis=1)
            flat = np.zeros(len(coords), dtype=np.int64)
            for k in range(shifted.shape[1]):
                flat = flat * side + shifted[:, k]
            return np.where(valid, flat, -1)

        lookup = self._coord_lookup
        return np.array([lookup.get(tuple(row), -1) for row in coords.tolist()], dtype=np.int64)

    @cached_property
    def _coord_lookup(self) -> Dict[Tuple[int, ...], int]:
        assert self.coords is not None
        return {tuple(row): i for i, row in enumerate(self.coords.tolist())}

    # ------------------------------------------------------------------
    # Metric
    # ------------------------------------------------------------------

    def _coord_differences(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = np.abs(a - b)
        if self.is_periodic:
            assert self.ambient is not None
            diff = np.minimum(diff, self.ambient.side - diff)
        return diff

    def distances_from(self, i: int) -> np.ndarray:
        """Distances from point index i to every point."""
        if self.distance_table is not None:
            return self.distance_table[i]
        assert self.coords is not None
        return self._coord_differences(self.coords, self.coords[i]).sum(axis=1).astype(float)

    def pair_distances(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Distances d(rows[k], cols[k]) for index arrays."""
        if self.distance_table is not None:
            return self.distance_table[rows, cols]
        assert self.coords is not None
        return self._coord_differences(self.coords[rows], self.coords[cols]).sum(axis=1).astype(
            float
        )

    def distance(self, x: Point, y: Point) -> float:
        i, j = self.index(x), self.index(y)
        return float(self.pair_distances(np.array([i]), np.array([j]))[0])

    @cached_property
    def _shifted_coords(self) -> np.ndarray:
        assert self.coords is not None
        if self.is_periodic:
            assert self.ambient is not None
            return (self.coords + self.ambient.radius).astype(float)
        return self.coords.astype(float)

    def _make_tree(self, data: np.ndarray) -> cKDTree:
        if self.is_periodic:
            assert self.ambient is not None
            return cKDTree(data, boxsize=float(self.ambient.side))
        return cKDTree(data)

    @cached_property
    def _tree(self) -> cKDTree:
        return self._make_tree(self._shifted_coords)

    def ball_indices(self, i: int, r: float) -> np.ndarray:
        """Sorted indices of the closed ball B_x(r) around point index i."""
        if r < 0:
            raise InvalidInputError(f"ball radius must be >= 0, got {r}")
        if self.distance_table is not None:
            return np.flatnonzero(self.distance_table[i] <= r + RADIUS_EPS)
        found = self._tree.query_ball_point(self._shifted_coords[i], r + RADIUS_EPS, p=1)
        return np.array(sorted(found), dtype=np.int64)

    def balls(self, r: float) -> List[np.ndarray]:
        """Sorted index arrays of B_x(r) for every point, in point order."""
        if r < 0:
            raise InvalidInputError(f"ball radius must be >= 0, got {r}")
        if self.distance_table is not None:
            return [np.flatnonzero(row <= r + RADIUS_EPS) for row in self.distance_table]
        found = self._tree.query_ball_point(self._shifted_coords, r + RADIUS_EPS, p=1)
        return [np.array(sorted(f), dtype=np.int64) for f in found]

    def ball(self, x: Point, r: float) -> List[Point]:
        """Closed ball B_x(r) = {y : d(x,y) ≤ r} as point ids."""
        return [self.points[j] for j in self.ball_indices(self.index(x), r)]

    def pairs_within(self, r: float) -> Tuple[np.ndarray, np.ndarray]:
        """All ordered index pairs (i, j) with d(i, j) ≤ r, diagonal included."""
        if self.distance_table is not None:
            rows, cols = np.nonzero(self.distance_table <= r + RADIUS_EPS)
            return rows.astype(np.int64), cols.astype(np.int64)
        diag = np.arange(self.size, dtype=np.int64)
        pairs = self._tree.query_pairs(r + RADIUS_EPS, p=1, output_type="ndarray")
        if len(pairs) == 0:
            return diag, diag.copy()
        rows = np.concatenate([pairs[:, 0], pairs[:, 1], diag])
        cols = np.concatenate([pairs[:, 1], pairs[:, 0], diag])
        order = np.lexsort((cols, rows))
        return rows[order].astype(np.int64), cols[order].astype(np.int64)

    def proximity_matrix(self, r: float) -> sp.csr_matrix:
        """0/1 sparse matrix of the relation d(x,y) ≤ r."""
        rows, cols = self.pairs_within(r)
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(self.size, self.size))

    def distance_to_set(self, mask: np.ndarray) -> np.ndarray:
        """d(x, F) for every x; +inf everywhere when F is empty."""
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return np.full(self.size, np.inf)
        if self.distance_table is not None:
            return self.distance_table[:, mask].min(axis=1)
        tree = self._make_tree(self._shifted_coords[mask])
        dist, _ = tree.query(self._shifted_coords, k=1, p=1)
        return np.asarray(dist, dtype=float)

    @cached_property
    def norms(self) -> np.ndarray:
        """|x| = d(x, origin) for every point."""
        return self.distances_from(self.origin)

    # ------------------------------------------------------------------
    # Window edge
    # ------------------------------------------------------------------

    @cached_property
    def edge_depth(self) -> np.ndarray:
        """W − max_k |x_k| on truncated lattice windows, +inf elsewhere."""
        if not self.has_edge:
            return np.full(self.size, np.inf)
        assert self.coords is not None and self.ambient is not None
        return (self.ambient.radius - np.abs(self.coords).max(axis=1)).astype(float)

    def distance_to_outside(self) -> np.ndarray:
        """ℓ¹ distance from each point to the nearest lattice point outside the window."""
        return self.edge_depth + 1.0

    def interior_mask(self, r: float) -> np.ndarray:
        """Points whose ball B_x(r) lies entirely inside the window."""
        return self.edge_depth >= np.floor(r + RADIUS_EPS)

    # ------------------------------------------------------------------
    # Measure
    # ------------------------------------------------------------------

    def ball_measures(self, r: float) -> np.ndarray:
        """μ(B_x(r)) for every x."""
        return np.array([self.weights[b].sum() for b in self.balls(r)])

    @cached_property
    def _max_ball_measures(self) -> Dict[float, float]:
        return {}

    def max_ball_measure(self, r: float) -> float:
        """max over all window points of μ(B_x(r)); an upper bound usable anywhere."""
        cache = self._max_ball_measures
        if r not in cache:
            cache[r] = float(self.ball_measures(r).max())
        return cache[r]

    @cached_property
    def nu(self) -> float:
        """ν = min_x μ(B_x(1/2))."""
        return float(self.ball_measures(0.5).min())


# ----------------------------------------------------------------------
# Builders
# ----------------------------------------------------------------------


def build_lattice_window(
    d: int,
    W: int,
    boundary_policy: Union[BoundaryPolicy, str] = BoundaryPolicy.TRUNCATE,
    weights: Optional[Sequence[float]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> Space:
    """
    Build the window {−W..W}^d of ℤ^d with the ℓ¹ metric.

    Args:
        d: Lattice dimension (≥ 1)
        W: Window radius (W = 0 gives a single point)
        boundary_policy: "truncate" or "periodic"
        weights: Optional per-point measure, counting measure by default
        max_points: Size cap

    Returns:
        Space of kind LATTICE, points in lexicographic order

    Raises:
        InvalidInputError: On bad dimension, radius or weights
        WindowCapError: If (2W+1)^d exceeds max_points
    """
    if d < 1:
        raise InvalidInputError(f"lattice dimension must be >= 1, got {d}")
    if W < 0:
        raise InvalidInputError(f"window radius must be >= 0, got {W}")
    policy = BoundaryPolicy(boundary_policy)
    side = 2 * W + 1
    size = side**d
    if size > max_points:
        raise WindowCapError(
            f"window (2*{W}+1)^{d} = {size} points exceeds cap {max_points}",
            size=size,
            cap=max_points,
        )

    coords = np.array(list(itertools.product(range(-W, W + 1), repeat=d)), dtype=np.int64)
    points: Tuple[Point, ...]
    if d == 1:
        points = tuple(int(c) for c in coords[:, 0])
    else:
        points = tuple(tuple(int(c) for c in row) for row in coords)

    w = np.ones(size) if weights is None else np.asarray(weights, dtype=float)
    logger.debug(f"Built lattice window d={d} W={W} ({size} points, {policy.value})")
    return Space(
        kind=SpaceKind.LATTICE,
        points=points,
        weights=w,
        coords=coords,
        ambient=LatticeAmbient(dimension=d, radius=W),
        boundary_policy=policy,
        origin=(size - 1) // 2,
    )


def build_subset_space(
    coords: Sequence[Union[int, Sequence[int]]],
    weights: Optional[Sequence[float]] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> Space:
    """
    Build a finite subset of ℤ^d with the inherited ℓ¹ metric.

    The origin is the first listed point. Points keep their listed order.
    """
    if len(coords) > max_points:
        raise WindowCapError(
            f"{len(coords)} points exceed cap {max_points}", size=len(coords), cap=max_points
        )
    array = np.asarray(coords, dtype=np.int64)
    if array.ndim == 1:
        array = array[:, None]
    if len({tuple(row) for row in array.tolist()}) != len(array):
        raise InvalidInputError("subset coordinates must be distinct")

    points: Tuple[Point, ...]
    if array.shape[1] == 1:
        points = tuple(int(c) for c in array[:, 0])
    else:
        points = tuple(tuple(int(c) for c in row) for row in array)
    w = np.ones(len(array)) if weights is None else np.asarray(weights, dtype=float)
    return Space(kind=SpaceKind.SUBSET, points=points, weights=w, coords=array)


def build_graph_space(
    edges: Sequence[Sequence],
    nodes: Optional[Sequence[Point]] = None,
    weights: Optional[Sequence[float]] = None,
    max_points: int = DEFAULT_MAX_GRAPH_POINTS,
) -> Space:
    """
    Build a graph space with the shortest-path metric.

    Args:
        edges: Items (u, v) or (u, v, length) with positive lengths
        nodes: Optional explicit vertex order (needed for a single vertex)
        weights: Optional per-vertex measure, counting measure by default
        max_points: Size cap (a full distance table is stored)

    Returns:
        Space of kind GRAPH

    Raises:
        DisconnectedGraphError: If the graph is not connected
        InvalidInputError: On non-positive edge lengths
    """
    graph = nx.Graph()
    if nodes is not None:
        graph.add_nodes_from(nodes)
    for edge in edges:
        if len(edge) not in (2, 3):
            raise InvalidInputError(f"edge {edge!r} must be (u, v) or (u, v, length)")
        length = float(edge[2]) if len(edge) == 3 else 1.0
        if not length > 0:
            raise InvalidInputError(f"edge {edge!r} has non-positive length")
        graph.add_edge(edge[0], edge[1], weight=length)

    if graph.number_of_nodes() == 0:
        raise InvalidInputError("a graph space needs at least one vertex")
    if graph.number_of_nodes() > max_points:
        raise WindowCapError(
            f"graph with {graph.number_of_nodes()} vertices exceeds cap {max_points}",
            size=graph.number_of_nodes(),
            cap=max_points,
        )
    if not nx.is_connected(graph):
        components = nx.number_connected_components(graph)
        raise DisconnectedGraphError(f"graph has {components} connected components")

    order = list(graph.nodes)
    position = {node: i for i, node in enumerate(order)}
    table = np.full((len(order), len(order)), np.inf)
    for source, lengths in nx.all_pairs_dijkstra_path_length(graph, weight="weight"):
        i = position[source]
        for target, length in lengths.items():
            table[i, position[target]] = length

    w = np.ones(len(order)) if weights is None else np.asarray(weights, dtype=float)
    return Space(kind=SpaceKind.GRAPH, points=tuple(order), weights=w, distance_table=table)


# ----------------------------------------------------------------------
# Volume growth and nets
# ----------------------------------------------------------------------


class VolumeGrowth:
    """r ↦ V(r), the largest ball measure over window-interior points."""

    def __init__(self, space: Space):
        self.space = space
        self._cache: Dict[float, float] = {}

    def __call__(self, r: float) -> float:
        if r < 0:
            raise InvalidInputError(f"radius must be >= 0, got {r}")
        if r not in self._cache:
            interior = self.space.interior_mask(r)
            if not interior.any():
                radius = self.space.ambient.radius if self.space.ambient else 0
                raise InsufficientWindowError(
                    f"insufficient window: no interior point at scale {r} (W={radius})"
                )
            measures = self.space.ball_measures(r)
            self._cache[r] = float(measures[interior].max())
        return self._cache[r]


def volume_growth(space: Space) -> VolumeGrowth:
    """Return the volume growth function of a space."""
    return VolumeGrowth(space)


@dataclass(frozen=True, eq=False)
class Net:
    """Maximal separated subset of a space with its capacity bound."""

    space: Space
    centers: np.ndarray
    separation: float = 1.0

    @property
    def center_points(self) -> List[Point]:
        return [self.space.points[i] for i in self.centers]

    def capacity_bound(self, r: float) -> float:
        """N(r) = V(2r+2)/ν."""
        return volume_growth(self.space)(2 * r + 2) / self.space.nu

    def measured_capacity(self, r: float) -> int:
        """max_x #{z ∈ Z : B_z(r) ∩ B_x(r) ≠ ∅}."""
        proximity = self.space.proximity_matrix(r)
        meets = (proximity @ proximity[:, self.centers]).tocsr()
        meets.data = np.ones_like(meets.data)
        return int(np.asarray(meets.sum(axis=1)).max())

    def verify(self) -> None:
        """Check separation and the covering property."""
        mask = np.zeros(self.space.size, dtype=bool)
        mask[self.centers] = True
        for z in self.centers:
            near = self.space.distances_from(int(z))[self.centers]
            if np.count_nonzero(near <= self.separation) != 1:
                raise InvariantViolationError(f"net centers closer than {self.separation}")
        if np.any(self.space.distance_to_set(mask) > self.separation + RADIUS_EPS):
            raise InvariantViolationError("net does not cover the space")


def greedy_net(space: Space, separation: float = 1.0) -> Net:
    """
    Greedy maximal separated set in point order.

    Args:
        space: Space to cover
        separation: Distinct centers satisfy d(a, b) > separation

    Returns:
        Verified Net
    """
    excluded = np.zeros(space.size, dtype=bool)
    centers: List[int] = []
    for i in range(space.size):
        if excluded[i]:
            continue
        centers.append(i)
        excluded[space.ball_indices(i, separation)] = True

    net = Net(space=space, centers=np.array(centers, dtype=np.int64), separation=separation)
    net.verify()
    logger.debug(f"Greedy net: {len(centers)} centers out of {space.size} points")
    return net


def verify_metric(space: Space, max_points: int = 1000) -> None:
    """
    Exhaustively check the metric axioms on a window.

    Raises:
        InvalidInputError: If the window is too large for an exhaustive check
        InvariantViolationError: On the first violated axiom
    """
    n = space.size
    if n > max_points:
        raise InvalidInputError(f"exhaustive metric check limited to {max_points} points")
    table = np.vstack([space.distances_from(i) for i in range(n)])
    if not np.all(np.isfinite(table)):
        raise InvariantViolationError("infinite distance in metric table")
    if not np.array_equal(table, table.T):
        raise InvariantViolationError("metric is not symmetric")
    off_diagonal = ~np.eye(n, dtype=bool)
    if np.any(np.diag(table) != 0) or np.any(table[off_diagonal] <= 0):
        raise InvariantViolationError("d(x,y) = 0 must hold exactly when x = y")
    for k in range(n):
        if np.any(table > table[:, k, None] + table[None, k, :] + RADIUS_EPS):
            raise InvariantViolationError(f"triangle inequality fails through point {k}")
