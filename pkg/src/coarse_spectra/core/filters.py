"""
Coarse filters and the shrink/thicken set calculus.

Sets are boolean masks over the points of a Space. A FilterSpec is a
symbolic filter base: generator(space, r) returns the generating set at
scale r, and generators decrease as r grows.

Modified: 2026-10-19
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from coarse_spectra.core.exceptions import (
    ContainmentError,
    HorizonExhaustedError,
    InvalidInputError,
    InvariantViolationError,
    SpecFormatError,
)
from coarse_spectra.core.models import CertificateEntry, CertificateReport
from coarse_spectra.core.space import RADIUS_EPS, Space

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Set calculus
# ----------------------------------------------------------------------


def thicken(space: Space, F: np.ndarray, r: float) -> np.ndarray:
    """F_(r) = {x : d(x, F) ≤ r}."""
    return space.distance_to_set(F) <= r + RADIUS_EPS


def distance_to_complement(
    space: Space, F: np.ndarray, edge_as_complement: bool = False
) -> np.ndarray:
    """
    d(x, F^c) for every x.

    With edge_as_complement, lattice points outside a truncated window count
    as part of F^c.
    """
    F = np.asarray(F, dtype=bool)
    distance = space.distance_to_set(~F)
    if edge_as_complement:
        distance = np.minimum(distance, space.distance_to_outside())
    return distance


def shrink(
    space: Space, F: np.ndarray, r: float, edge_as_complement: bool = False
) -> np.ndarray:
    """F^(r) = {x : d(x, F^c) > r}."""
    return distance_to_complement(space, F, edge_as_complement) > r + RADIUS_EPS


def cutoff(space: Space, F: np.ndarray, G: np.ndarray, r: float) -> np.ndarray:
    """
    θ = d_{F^c} / (d_{F^c} + d_G), with 1_G ≤ θ ≤ 1_F and Lipschitz constant ≤ 3/r.

    Args:
        space: Space the sets live on
        F: Outer set
        G: Inner set with G_(r) ⊆ F
        r: Separation scale, r > 0

    Returns:
        θ as an array over points

    Raises:
        InvalidInputError: If G is empty or r ≤ 0
        ContainmentError: If G_(r) is not contained in F
        InvariantViolationError: If a verified contract fails
    """
    F = np.asarray(F, dtype=bool)
    G = np.asarray(G, dtype=bool)
    if r <= 0:
        raise InvalidInputError(f"cutoff scale must be > 0, got {r}")
    if not G.any():
        raise InvalidInputError("cutoff needs a nonempty inner set G")
    if np.any(thicken(space, G, r) & ~F):
        raise ContainmentError(f"G_({r}) is not contained in F")

    to_complement = distance_to_complement(space, F)
    to_inner = space.distance_to_set(G)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.where(
            np.isinf(to_complement), 1.0, to_complement / (to_complement + to_inner)
        )
    if np.any(to_complement + to_inner <= 0):
        raise InvariantViolationError("cutoff denominator vanished")

    if np.any(theta[G] != 1.0) or np.any(theta[~F] != 0.0):
        raise InvariantViolationError("cutoff violates 1_G <= theta <= 1_F")
    constant = measured_lipschitz(space, theta, r / 3.0)
    if constant > 3.0 / r + 1e-12:
        raise InvariantViolationError(f"cutoff Lipschitz constant {constant} exceeds 3/{r}")
    return theta


def measured_lipschitz(space: Space, values: np.ndarray, reach: float) -> float:
    """
    max |f(x) − f(y)| / d(x, y) over pairs with 0 < d(x,y) ≤ reach.

    For θ with values in [0, 1], pairs farther than r/3 cannot exceed 3/r, so
    reach = r/3 makes the scan exhaustive.
    """
    rows, cols = space.pairs_within(max(reach, 1.0))
    distance = space.pair_distances(rows, cols)
    keep = distance > 0
    if not keep.any():
        return 0.0
    return float((np.abs(values[rows[keep]] - values[cols[keep]]) / distance[keep]).max())


# ----------------------------------------------------------------------
# Filter families
# ----------------------------------------------------------------------


def _lattice_coords(space: Space) -> np.ndarray:
    if space.coords is None:
        raise InvalidInputError("this filter needs a lattice or subset space")
    return space.coords


def _point_mask(space: Space, points: Sequence) -> np.ndarray:
    mask = np.zeros(space.size, dtype=bool)
    if not points:
        return mask
    if space.coords is not None:
        coords = np.asarray(points, dtype=np.int64).reshape(len(points), -1)
        found = space.index_of_coords(coords)
        mask[found[found >= 0]] = True
        return mask
    known = set(space.points)
    for point in points:
        if point in known:
            mask[space.index(point)] = True
    return mask


class FilterSpec(ABC):
    """Symbolic filter base with a generator accessor."""

    kind: str = "filter"
    is_coarse_kind: bool = True

    @abstractmethod
    def generator(self, space: Space, r: float) -> np.ndarray:
        """Generating set at scale r, as a mask over the window."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON form of the filter."""

    @property
    def label(self) -> str:
        return self.kind

    def generators(self, space: Space, scales: Iterable[float]) -> List[np.ndarray]:
        return [self.generator(space, s) for s in scales]


@dataclass(frozen=True)
class Frechet(FilterSpec):
    """Complements of bounded sets: generator(r) = {x : |x| > r}."""

    kind = "frechet"

    def generator(self, space: Space, r: float) -> np.ndarray:
        return space.norms > r + RADIUS_EPS

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class HalfSpace(FilterSpec):
    """generator(r) = {x : ⟨x, v⟩ ≥ r·‖v‖_∞} on a lattice."""

    direction: Tuple[int, ...]
    kind = "halfspace"

    def __post_init__(self) -> None:
        if not any(self.direction):
            raise InvalidInputError("half-space direction must be nonzero")

    def generator(self, space: Space, r: float) -> np.ndarray:
        coords = _lattice_coords(space)
        v = np.asarray(self.direction, dtype=np.int64)
        if len(v) != coords.shape[1]:
            raise InvalidInputError(f"direction {self.direction} does not match the lattice")
        return coords @ v >= r * np.abs(v).max() - RADIUS_EPS

    @property
    def label(self) -> str:
        return f"halfspace{list(self.direction)}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "v": list(self.direction)}


@dataclass(frozen=True)
class Obstacle(FilterSpec):
    """Filter generated by the sets L_(r)^c."""

    obstacle: Tuple = ()
    kind = "obstacle"

    def obstacle_mask(self, space: Space) -> np.ndarray:
        return _point_mask(space, list(self.obstacle))

    def generator(self, space: Space, r: float) -> np.ndarray:
        return space.distance_to_set(self.obstacle_mask(space)) > r + RADIUS_EPS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "L": [list(p) if isinstance(p, tuple) else p for p in self.obstacle],
        }


@dataclass(frozen=True)
class Grassmann(FilterSpec):
    """
    Complements of r-neighbourhoods of finitely many proper sublattices.

    Each sublattice is {x : ⟨n, x⟩ = 0 for every normal n}; distances to it
    are measured inside the window.
    """

    sublattices: Tuple[Tuple[Tuple[int, ...], ...], ...]
    kind = "grassmann"

    def __post_init__(self) -> None:
        if not self.sublattices:
            raise InvalidInputError("Grassmann filter needs at least one sublattice")
        for normals in self.sublattices:
            if not normals or not any(any(n) for n in normals):
                raise InvalidInputError("a proper sublattice needs a nonzero normal vector")

    def obstacle_mask(self, space: Space) -> np.ndarray:
        coords = _lattice_coords(space)
        mask = np.zeros(space.size, dtype=bool)
        for normals in self.sublattices:
            on = np.ones(space.size, dtype=bool)
            for normal in normals:
                on &= coords @ np.asarray(normal, dtype=np.int64) == 0
            mask |= on
        return mask

    def generator(self, space: Space, r: float) -> np.ndarray:
        return space.distance_to_set(self.obstacle_mask(space)) > r + RADIUS_EPS

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "sublattices": [[list(n) for n in normals] for normals in self.sublattices],
        }


@dataclass(frozen=True)
class Intersection(FilterSpec):
    """Meet of filters: sets belonging to every member; generator(r) = ∪ generator_i(r)."""

    members: Tuple[FilterSpec, ...]
    kind = "intersection"

    def __post_init__(self) -> None:
        if not self.members:
            raise InvalidInputError("intersection needs at least one filter")

    @property
    def is_coarse_kind(self) -> bool:  # type: ignore[override]
        return all(m.is_coarse_kind for m in self.members)

    def generator(self, space: Space, r: float) -> np.ndarray:
        mask = np.zeros(space.size, dtype=bool)
        for member in self.members:
            mask |= member.generator(space, r)
        return mask

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "filters": [m.to_dict() for m in self.members]}


@dataclass(frozen=True)
class Join(FilterSpec):
    """Filter generated by a family of filters; generator(r) = ∩ generator_i(r)."""

    members: Tuple[FilterSpec, ...]
    kind = "join"

    def __post_init__(self) -> None:
        if not self.members:
            raise InvalidInputError("join needs at least one filter")

    @property
    def is_coarse_kind(self) -> bool:  # type: ignore[override]
        return all(m.is_coarse_kind for m in self.members)

    def generator(self, space: Space, r: float) -> np.ndarray:
        mask = np.ones(space.size, dtype=bool)
        for member in self.members:
            mask &= member.generator(space, r)
        return mask

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "filters": [m.to_dict() for m in self.members]}


@dataclass(frozen=True)
class DirectionProxy(FilterSpec):
    """
    Affine sequence a_n = n·p·v standing in for an ultrafilter at infinity.

    The ultrafilter is pinned to the even-index sub-tails {a_n : n ≥ r, n even};
    those sparse sets are its generators. Membership tests use the full tail.
    """

    direction: Tuple[int, ...]
    period: int = 1
    kind = "proxy"
    is_coarse_kind = False

    def __post_init__(self) -> None:
        if not any(self.direction):
            raise InvalidInputError("proxy direction must be nonzero")
        if self.period < 1:
            raise InvalidInputError(f"proxy period must be >= 1, got {self.period}")

    @property
    def step(self) -> np.ndarray:
        """a_{n+1} − a_n."""
        return self.period * np.asarray(self.direction, dtype=np.int64)

    def point(self, n: int) -> np.ndarray:
        return n * self.step

    def points(self, ns: Sequence[int]) -> np.ndarray:
        return np.outer(np.asarray(ns, dtype=np.int64), self.step)

    def _tail_indices(self, space: Space, start: int, stride: int) -> np.ndarray:
        coords = _lattice_coords(space)
        if coords.shape[1] != len(self.direction):
            raise InvalidInputError(f"proxy {self.label} does not match the lattice")
        extent = int(np.abs(coords).max()) if len(coords) else 0
        reach = extent // int(np.abs(self.step).max()) + 1
        ns = np.arange(max(start, 0), reach + 1, stride)
        if len(ns) == 0:
            return np.zeros(0, dtype=np.int64)
        found = space.index_of_coords(self.points(ns))
        if space.is_periodic:
            # Wrapped proxies revisit the window; keep only the unwrapped tail.
            assert space.ambient is not None
            inside = np.all(np.abs(self.points(ns)) <= space.ambient.radius, axis=1)
            found = np.where(inside, found, -1)
        return found[found >= 0]

    def tail(self, space: Space, horizon: int) -> np.ndarray:
        """Mask of {a_n : n ≥ horizon} inside the window."""
        mask = np.zeros(space.size, dtype=bool)
        mask[self._tail_indices(space, horizon, 1)] = True
        return mask

    def generator(self, space: Space, r: float) -> np.ndarray:
        start = int(np.ceil(r - RADIUS_EPS))
        start += start % 2
        mask = np.zeros(space.size, dtype=bool)
        mask[self._tail_indices(space, start, 2)] = True
        return mask

    @property
    def label(self) -> str:
        sign = "".join("+" if c > 0 else "-" if c < 0 else "0" for c in self.direction)
        return f"{sign}{list(self.direction)}x{self.period}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "v": list(self.direction), "period": self.period}


# ----------------------------------------------------------------------
# Certificates and envelopes
# ----------------------------------------------------------------------


def _search_scales(space: Space, start: float) -> List[float]:
    limit = int(np.ceil(space.norms.max())) + 2
    return [float(s) for s in range(int(np.floor(start)), limit + 1)]


def is_coarse_certificate(
    xi: FilterSpec,
    r_max: int,
    space: Space,
    scales: Optional[Sequence[float]] = None,
    edge_as_complement: bool = False,
) -> CertificateReport:
    """
    Check, for each generator scale and each r ≤ r_max, that shrink(generator, r)
    contains a nonempty generator of the family.

    Args:
        xi: Filter family
        r_max: Largest shrink radius
        space: Window
        scales: Generator scales to test (0..r_max by default)
        edge_as_complement: Window-edge convention for shrink

    Returns:
        CertificateReport with one entry per (scale, r)
    """
    report = CertificateReport(
        filter_kind=xi.label, r_max=r_max, edge_as_complement=edge_as_complement
    )
    scales = list(scales) if scales is not None else list(range(0, r_max + 1))
    for scale in scales:
        F = xi.generator(space, scale)
        if not F.any():
            logger.debug(f"certificate: generator at scale {scale} misses the window")
            continue
        for r in range(1, r_max + 1):
            shrunk = shrink(space, F, r, edge_as_complement)
            found: Optional[float] = None
            if shrunk.any():
                candidates = [float(scale + r + 1)] + _search_scales(space, scale)
                for candidate in candidates:
                    G = xi.generator(space, candidate)
                    if G.any() and not np.any(G & ~shrunk):
                        found = candidate
                        break
            report.entries.append(
                CertificateEntry(
                    scale=float(scale), r=r, passed=found is not None, witness_scale=found
                )
            )
    logger.info(f"coarseness certificate for {xi.label}: passed={report.passed}")
    return report


def translation_stability(
    xi: FilterSpec,
    space: Space,
    shifts: Sequence[Sequence[int]],
    scales: Sequence[float],
) -> bool:
    """
    Check that every translate a + generator(scale) contains a nonempty generator.

    The comparison is made on the points whose ℓ^∞ distance to the window edge
    exceeds the shift, where both sides are fully visible.
    """
    coords = _lattice_coords(space)
    for a in shifts:
        shift = np.asarray(a, dtype=np.int64)
        domain = space.interior_mask(float(np.abs(shift).max()))
        for scale in scales:
            F = xi.generator(space, scale)
            moved = np.zeros(space.size, dtype=bool)
            targets = space.index_of_coords(coords[F] + shift)
            moved[targets[targets >= 0]] = True
            if not any(
                (G := xi.generator(space, candidate) & domain).any() and not np.any(G & ~moved)
                for candidate in _search_scales(space, scale)
            ):
                logger.debug(f"translation by {list(a)} breaks scale {scale} of {xi.label}")
                return False
    return True


def coarse_envelope_member(
    xi: DirectionProxy,
    space: Space,
    F: np.ndarray,
    r_max: int,
    horizon: int,
    edge_as_complement: bool = False,
) -> bool:
    """
    Finite-horizon test of F ∈ co(κ): shrink(F, r) ⊇ {a_n : n ≥ horizon} for r ≤ r_max.

    Raises:
        HorizonExhaustedError: If the tail misses the window
    """
    tail = xi.tail(space, horizon)
    if not tail.any():
        raise HorizonExhaustedError(f"proxy {xi.label} has no tail point beyond n={horizon}")
    F = np.asarray(F, dtype=bool)
    for r in range(1, r_max + 1):
        if np.any(tail & ~shrink(space, F, r, edge_as_complement)):
            logger.debug(f"envelope membership fails at r={r}")
            return False
    return True


# ----------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------


def _as_point(value: Any) -> Any:
    return tuple(value) if isinstance(value, list) else value


def filter_from_dict(data: Dict[str, Any]) -> FilterSpec:
    """
    Build a FilterSpec from its JSON form.

    Accepted kinds: frechet, halfspace {v}, obstacle {L}, grassmann {sublattices},
    intersection {filters}, join {filters}, proxy {v, period} or {proxy: {pattern, v, period}}.
    """
    kind = str(data.get("kind", "")).lower()
    try:
        if kind == "frechet":
            return Frechet()
        if kind == "halfspace":
            return HalfSpace(direction=_vector(data["v"]))
        if kind == "obstacle":
            return Obstacle(obstacle=tuple(_as_point(p) for p in data.get("L", [])))
        if kind == "grassmann":
            return Grassmann(
                sublattices=tuple(
                    tuple(_vector(n) for n in (s if isinstance(s[0], list) else [s]))
                    for s in data["sublattices"]
                )
            )
        if kind in ("intersection", "join"):
            members = tuple(filter_from_dict(item) for item in data["filters"])
            return Intersection(members) if kind == "intersection" else Join(members)
        if kind == "proxy" or "proxy" in data:
            proxy = data.get("proxy", data)
            pattern = proxy.get("pattern", "linear")
            if pattern != "linear":
                raise SpecFormatError(f"unsupported proxy pattern '{pattern}'")
            return DirectionProxy(direction=_vector(proxy["v"]), period=int(proxy.get("period", 1)))
    except (KeyError, TypeError, IndexError) as e:
        raise SpecFormatError(f"malformed {kind or 'filter'} spec: {e}") from e
    raise SpecFormatError(f"unknown filter kind '{kind}'")


def _vector(value: Any) -> Tuple[int, ...]:
    if isinstance(value, (int, float)):
        return (int(value),)
    return tuple(int(c) for c in value)


def proxy_from_label(label: str, dimension: int = 1) -> DirectionProxy:
    """
    Parse a CLI proxy label: "+1", "-1", "+2" (axis 1 stepped by period 2 on ℤ),
    or "axis:sign[:period]" such as "0:+" or "1:-:2" on ℤ^d.
    """
    text = label.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            axis, sign = int(parts[0]), parts[1]
            period = int(parts[2]) if len(parts) > 2 else 1
            direction = [0] * dimension
            direction[axis] = -1 if sign.startswith("-") else 1
            return DirectionProxy(tuple(direction), period)
        value = int(text)
    except (ValueError, IndexError) as e:
        raise InvalidInputError(f"cannot parse proxy '{label}'") from e
    if dimension != 1 or value == 0:
        raise InvalidInputError(f"proxy '{label}' needs the axis:sign form on ℤ^{dimension}")
    return DirectionProxy((1 if value > 0 else -1,), abs(value))
