"""
Membership diagnostics for the ghost ideal and the filter ideals.

Every diagnostic works on a finite window, so results carry the horizons
and scales they were computed at; verdicts compare the farthest values
against a tolerance.

Modified: 2026-10-19
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from coarse_spectra.config.settings import DEFAULT_MAX_POINTS, DEFAULT_VERDICT_TOL
from coarse_spectra.core.exceptions import (
    FactorizationDepthError,
    HorizonExhaustedError,
    InsufficientWindowError,
    InvalidInputError,
    InvariantViolationError,
    WindowCapError,
)
from coarse_spectra.core.filters import DirectionProxy, FilterSpec, cutoff, shrink
from coarse_spectra.core.kernels import (
    BandKernel,
    Vector,
    block_norm,
    local_norm_profile,
    right_norm_profile,
)
from coarse_spectra.core.models import (
    BallCriterionResult,
    DefectResult,
    GhostCurve,
    GhostReport,
)
from coarse_spectra.core.space import RADIUS_EPS, Space, build_subset_space, greedy_net
from coarse_spectra.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

MAX_HORIZONS = 64


# ----------------------------------------------------------------------
# Ghost ideal
# ----------------------------------------------------------------------


def _horizons(norms: np.ndarray) -> np.ndarray:
    unique = np.unique(norms)
    if len(unique) <= MAX_HORIZONS:
        return unique
    picks = np.linspace(0, len(unique) - 1, MAX_HORIZONS).round().astype(int)
    return unique[np.unique(picks)]


def _tail_sup(profile: np.ndarray, norms: np.ndarray, horizons: np.ndarray) -> np.ndarray:
    """h ↦ sup{profile(x) : |x| ≥ h}, 0 when no point qualifies."""
    order = np.argsort(norms)
    suffix = np.maximum.accumulate(profile[order][::-1])[::-1]
    position = np.searchsorted(norms[order], horizons - RADIUS_EPS, side="left")
    out = np.zeros(len(horizons))
    inside = position < len(order)
    out[inside] = suffix[position[inside]]
    return out


def ghost_report(
    k: BandKernel,
    radii: Sequence[float],
    tol: float = DEFAULT_VERDICT_TOL,
    threads: Optional[int] = None,
) -> GhostReport:
    """
    Decay curves h ↦ sup_{|x| ≥ h, x interior} ‖1_{B_x(r)} T‖ and the ghost verdict.

    The r = 1 verdict is reported separately; when the window hosts the
    capacity bound N(r), the curves are also checked against
    curve_r(h) ≤ N(r)·curve_1(h − r − 1).

    Args:
        k: Operator kernel
        radii: Ball radii r
        tol: Verdict tolerance on the farthest value of each curve
        threads: Worker count for the local profiles

    Returns:
        GhostReport
    """
    space = k.space
    norms = space.norms
    radii = [float(r) for r in radii]
    if not radii or min(radii) <= 0:
        raise InvalidInputError("ghost radii must be positive")

    profiles: Dict[float, np.ndarray] = {}
    curves: List[GhostCurve] = []
    r1_curve: Optional[GhostCurve] = None
    for r in sorted(set(radii) | {1.0}):
        profile = local_norm_profile(k, r, threads)
        profiles[r] = profile
        interior = space.interior_mask(r)
        if not interior.any():
            raise InsufficientWindowError(f"no interior point at scale {r}")
        horizons = _horizons(norms[interior])
        left = _tail_sup(profile[interior], norms[interior], horizons)
        right_profile = right_norm_profile(k, r, threads)
        right = _tail_sup(right_profile[interior], norms[interior], horizons)
        curve = GhostCurve(
            radius=r,
            horizons=horizons.tolist(),
            values=left.tolist(),
            right_values=right.tolist(),
        )
        if r in radii:
            curves.append(curve)
        if r == 1.0:
            r1_curve = curve

    assert r1_curve is not None
    verdict = all(curve.final < tol for curve in curves)
    r1_verdict = r1_curve.final < tol
    if verdict != r1_verdict:
        logger.warning(
            f"ghost verdict {verdict} differs from the r=1 verdict {r1_verdict} at this window"
        )

    capacity_consistent: Optional[bool] = None
    try:
        net = greedy_net(space)
        capacity_consistent = True
        every = _horizons(norms)
        for r in radii:
            bound = net.capacity_bound(r)
            shifted = _tail_sup(profiles[1.0], norms, every - r - 1)
            measured = _tail_sup(profiles[r], norms, every)
            if np.any(measured > bound * shifted + 1e-9):
                capacity_consistent = False
                logger.warning(f"capacity estimate fails at r={r}")
    except InsufficientWindowError as e:
        logger.debug(f"capacity cross-check skipped: {e}")

    logger.info(f"ghost report: verdict={verdict} r1={r1_verdict} radii={radii}")
    return GhostReport(
        radii=radii,
        tol=tol,
        curves=curves,
        verdict=verdict,
        r1_verdict=r1_verdict,
        capacity_consistent=capacity_consistent,
        parameters={"points": space.size, "max_norm": float(norms.max())},
    )


# ----------------------------------------------------------------------
# HLS ghost projection
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class GapRule:
    """Gap g_n = n·scale + 1 between the n-th and (n+1)-th component."""

    scale: float = 1.0

    def gap(self, n: int) -> int:
        return int(np.ceil(n * self.scale)) + 1

    def to_dict(self) -> Dict[str, Any]:
        return {"scale": self.scale}


@dataclass(frozen=True, eq=False)
class HLSProjection:
    """
    Block projection π = Σ_n |e_n⟩⟨e_n| with e_n = Σ_{x∈X_n} x / v_n.

    Components X_n are runs of v_n² consecutive integers.
    """

    sizes: Tuple[int, ...]
    space: Space
    blocks: Tuple[np.ndarray, ...]
    kernel: BandKernel
    gap_rule: GapRule

    @property
    def rank(self) -> int:
        return int(round(self.trace))

    @property
    def trace(self) -> float:
        return float(self.kernel.matrix.diagonal().real.sum())

    def flat_vector(self, n: int) -> Vector:
        """e_n for the 1-based component index n."""
        values = np.zeros(self.space.size)
        values[self.blocks[n - 1]] = 1.0 / self.sizes[n - 1]
        return Vector(self.space, values)

    def component_of(self) -> np.ndarray:
        """Component number (1-based) of every point."""
        owner = np.zeros(self.space.size, dtype=np.int64)
        for n, block in enumerate(self.blocks, start=1):
            owner[block] = n
        return owner

    def verify(self, tol: float = 1e-12) -> None:
        """
        Check π² = π, π* = π, trace = m and the block structure.

        Raises:
            InvariantViolationError: On the first failed check
        """
        matrix = self.kernel.matrix
        square = matrix @ matrix
        if _sparse_max(square - matrix) > tol:
            raise InvariantViolationError("HLS projection is not idempotent")
        if _sparse_max(matrix - matrix.conj().T) > tol:
            raise InvariantViolationError("HLS projection is not self-adjoint")
        if abs(self.trace - len(self.sizes)) > tol * max(1, len(self.sizes)):
            raise InvariantViolationError(f"trace {self.trace} differs from {len(self.sizes)}")
        owner = self.component_of()
        coo = matrix.tocoo()
        if np.any(owner[coo.row] != owner[coo.col]):
            raise InvariantViolationError("HLS projection couples different components")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "sizes": list(self.sizes),
            "gap_rule": self.gap_rule.to_dict(),
            "points": self.space.size,
            "trace": self.trace,
            "rank": self.rank,
        }


def _sparse_max(matrix: sp.spmatrix) -> float:
    data = sp.csr_matrix(matrix).data
    return float(np.abs(data).max()) if len(data) else 0.0


def build_hls(
    sizes: Sequence[int],
    gap_rule: Optional[GapRule] = None,
    max_points: int = DEFAULT_MAX_POINTS,
) -> Tuple[Space, HLSProjection]:
    """
    Assemble the HLS ghost projection on a subset of ℤ.

    Args:
        sizes: v_1 ≤ v_2 ≤ … with v_n ≥ 1
        gap_rule: Spacing between consecutive components
        max_points: Cap on Σ v_n²

    Returns:
        (space, projection), projection verified

    Raises:
        InvalidInputError: If sizes are empty, non-positive or decreasing
        WindowCapError: If the components exceed max_points
    """
    sizes = tuple(int(v) for v in sizes)
    if not sizes or min(sizes) < 1:
        raise InvalidInputError("HLS sizes must be positive integers")
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise InvalidInputError("HLS sizes must be non-decreasing")
    total = sum(v * v for v in sizes)
    if total > max_points:
        raise WindowCapError(
            f"HLS components hold {total} points, cap is {max_points}", size=total, cap=max_points
        )
    rule = gap_rule or GapRule()

    coords: List[int] = []
    blocks: List[np.ndarray] = []
    start = 0
    for n, v in enumerate(sizes, start=1):
        blocks.append(np.arange(len(coords), len(coords) + v * v, dtype=np.int64))
        coords.extend(range(start, start + v * v))
        start += v * v - 1 + rule.gap(n)

    space = build_subset_space(coords, max_points=max_points)
    rows, cols, data = [], [], []
    for v, block in zip(sizes, blocks):
        r, c = np.meshgrid(block, block, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        data.append(np.full(r.size, 1.0 / (v * v)))
    matrix = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.size, space.size),
    )
    propagation = float(max(v * v for v in sizes) - 1)
    projection = HLSProjection(
        sizes=sizes,
        space=space,
        blocks=tuple(blocks),
        kernel=BandKernel(space, propagation, matrix),
        gap_rule=rule,
    )
    projection.verify()
    logger.info(f"HLS projection: {len(sizes)} components, {space.size} points")
    return space, projection


# ----------------------------------------------------------------------
# Filter ideals
# ----------------------------------------------------------------------


def _default_scales(space: Space) -> List[float]:
    return [float(s) for s in range(int(np.ceil(space.norms.max())) + 1)]


def _edge_band(space: Space, reach: float) -> np.ndarray:
    return space.edge_depth < reach


def jxi_defect(
    k: BandKernel,
    xi: FilterSpec,
    scales: Optional[Sequence[float]] = None,
    tol: float = 1e-9,
) -> DefectResult:
    """
    Left and right filter defects min_F ‖1_F T‖ and min_F ‖T 1_F‖ over generator sets.

    Left and right defects are tied by the shifted inequalities
    ‖T 1_{F(s+d+1)}‖ ≤ ‖1_{F(s)} T‖ and ‖1_{F(s+d+1)} T‖ ≤ ‖T 1_{F(s)}‖, which
    are checked at every scale. window_bias is ‖1_E T‖ + ‖T 1_E‖ on the band E
    of points closer than d(T) to the window edge.

    Raises:
        InvalidInputError: If the filter is not a coarse kind
        HorizonExhaustedError: If no generator meets the window
        InvariantViolationError: If a shifted inequality fails
    """
    if not xi.is_coarse_kind:
        raise InvalidInputError(f"jxi_defect needs a coarse filter, got {xi.label}")
    space = k.space
    everything = np.ones(space.size, dtype=bool)
    scales = list(scales) if scales is not None else _default_scales(space)
    reach = float(np.ceil(k.propagation))

    used, lefts, rights = [], [], []
    for s in scales:
        F = xi.generator(space, s)
        if not F.any():
            continue
        left, right = block_norm(k, F), block_norm(k, everything, F)
        G = xi.generator(space, s + reach + 1)
        if G.any():
            if block_norm(k, everything, G) > left + tol or block_norm(k, G) > right + tol:
                raise InvariantViolationError(
                    f"left/right defects of {xi.label} are not interlaced at scale {s}"
                )
        used.append(float(s))
        lefts.append(left)
        rights.append(right)
    if not used:
        raise HorizonExhaustedError(f"no generator of {xi.label} meets the window")

    edge = _edge_band(space, reach)
    bias = block_norm(k, edge) + block_norm(k, everything, edge) if edge.any() else 0.0
    result = DefectResult(
        left=min(lefts),
        right=min(rights),
        scales=used,
        left_by_scale=lefts,
        right_by_scale=rights,
        window_bias=bias,
    )
    logger.debug(f"defect along {xi.label}: left={result.left:.3g} right={result.right:.3g}")
    return result


def localization_ball_criterion(
    k: BandKernel,
    xi: FilterSpec,
    radii: Sequence[float],
    tol: float = DEFAULT_VERDICT_TOL,
    scales: Optional[Sequence[float]] = None,
    horizon: Optional[int] = None,
    threads: Optional[int] = None,
) -> BallCriterionResult:
    """
    Ball profile x ↦ ‖1_{B_x(r)} T‖ along a filter.

    For a coarse filter the value at radius r is min over scales of the sup over
    interior points of generator(scale). For a direction proxy it is the sup over
    the interior tail points a_n with n ≥ horizon; without a horizon the sup starts
    halfway along the interior tail.

    Raises:
        HorizonExhaustedError: If no interior generator or tail point is left
    """
    space = k.space
    scales = list(scales) if scales is not None else _default_scales(space)
    values: Dict[float, float] = {}
    horizons: Dict[float, int] = {}
    for r in radii:
        profile = local_norm_profile(k, float(r), threads)
        interior = space.interior_mask(float(r))
        if isinstance(xi, DirectionProxy):
            tail = xi.tail(space, horizon or 0) & interior
            if not tail.any():
                raise HorizonExhaustedError(f"proxy {xi.label} has no interior tail at r={r}")
            stride = float(np.abs(xi.step).sum())
            start = horizon if horizon is not None else int(space.norms[tail].max() // stride) // 2
            beyond = tail & (space.norms >= start * stride - RADIUS_EPS)
            values[float(r)] = float(profile[beyond].max())
            horizons[float(r)] = start
            continue
        best = np.inf
        for s in scales:
            F = xi.generator(space, s) & interior
            if F.any():
                best = min(best, float(profile[F].max()))
        if not np.isfinite(best):
            raise HorizonExhaustedError(f"no interior generator of {xi.label} at r={r}")
        values[float(r)] = best
    verdict = all(v < tol for v in values.values())
    return BallCriterionResult(verdict=verdict, tol=tol, values=values, horizons=horizons)


def discrete_entry_criterion(
    k: BandKernel, xi: FilterSpec, scales: Optional[Sequence[float]] = None
) -> float:
    """
    min over generators F of sup_{x,y∈F} |⟨x|Ty⟩|.

    Raises:
        InvalidInputError: If the measure is not counting measure
        HorizonExhaustedError: If no generator meets the window
    """
    space = k.space
    if not space.is_counting:
        raise InvalidInputError("the entry criterion needs counting measure")
    scales = list(scales) if scales is not None else _default_scales(space)
    magnitude = abs(k.matrix).tocsr()
    best = np.inf
    for s in scales:
        F = xi.generator(space, s)
        if not F.any():
            continue
        index = np.flatnonzero(F)
        block = magnitude[index][:, index]
        best = min(best, float(block.max()) if block.nnz else 0.0)
    if not np.isfinite(best):
        raise HorizonExhaustedError(f"no generator of {xi.label} meets the window")
    return best


def ball_entry_criterion(
    k: BandKernel,
    xi: FilterSpec,
    r: float,
    scales: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
) -> float:
    """min over generators F of sup_{x∈F} sup_{y,z∈B_x(r)} |⟨y|Tz⟩|."""
    space = k.space
    magnitude = abs(k.matrix).tocsr()
    balls = space.balls(r)

    def local(i: int) -> float:
        block = magnitude[balls[i]][:, balls[i]]
        return float(block.max()) if block.nnz else 0.0

    per_point = np.asarray(parallel_map(local, range(space.size), threads))
    scales = list(scales) if scales is not None else _default_scales(space)
    best = np.inf
    for s in scales:
        F = xi.generator(space, s)
        if F.any():
            best = min(best, float(per_point[F].max()))
    if not np.isfinite(best):
        raise HorizonExhaustedError(f"no generator of {xi.label} meets the window")
    return best


# ----------------------------------------------------------------------
# Factorization through the filter ideal
# ----------------------------------------------------------------------


@dataclass
class Factorization:
    """T = φ(Q)·S with φ = (1 + Σθ_n)^{-1} and S = (1 + Σθ_n)(Q)·T."""

    phi: np.ndarray
    S: BandKernel
    outer_sets: List[np.ndarray] = field(default_factory=list)
    inner_sets: List[np.ndarray] = field(default_factory=list)
    cutoffs: List[np.ndarray] = field(default_factory=list)
    defects: List[float] = field(default_factory=list)
    residual: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.outer_sets)

    def phi_bounds(self) -> List[float]:
        """max φ on the m-th outer set F_m, which is at most 1/m."""
        return [float(self.phi[F].max()) for F in self.outer_sets]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "depth": self.depth,
            "residual": self.residual,
            "defects": self.defects,
            "phi_bounds": self.phi_bounds(),
            "outer_sizes": [int(F.sum()) for F in self.outer_sets],
        }


def _assemble(k: BandKernel, factorization: Factorization) -> Factorization:
    theta = np.sum(factorization.cutoffs, axis=0) if factorization.cutoffs else 0.0
    weight = 1.0 + np.zeros(k.space.size) + theta
    factorization.phi = 1.0 / weight
    factorization.S = k.row_scaled(weight)
    difference = factorization.S.row_scaled(factorization.phi) - k
    data = difference.matrix.data
    factorization.residual = float(np.abs(data).max()) if len(data) else 0.0
    return factorization


def factor_through_ideal(
    k: BandKernel,
    xi: FilterSpec,
    depth: int,
    schedule: Optional[Callable[[int], float]] = None,
    scales: Optional[Sequence[float]] = None,
    residual_tol: float = 1e-10,
) -> Factorization:
    """
    Factor T = φ(Q)·S through nested generators F_1 ⊃ G_1 ⊃ F_2 ⊃ G_2 ⊃ ….

    F_n is the first generator, intersected with G_{n−1} and with {|x| > n}, that
    satisfies ‖1_{F_n} T‖ ≤ schedule(n); G_n = shrink(F_n, 1) and θ_n is the
    cutoff between them at r = 1.

    Args:
        k: Operator kernel
        xi: Coarse filter
        depth: Number of nested pairs
        schedule: Required defect at level n (n^{-2} by default)
        scales: Generator scales to search
        residual_tol: Bound on max |φ S − T|

    Raises:
        FactorizationDepthError: If the window runs out before the requested depth;
            the partial factorization is attached
        InvariantViolationError: If the reconstruction residual is too large
    """
    if depth < 0:
        raise InvalidInputError(f"depth must be >= 0, got {depth}")
    schedule = schedule or (lambda n: 1.0 / (n * n))
    space = k.space
    scales = list(scales) if scales is not None else _default_scales(space)
    factorization = Factorization(phi=np.ones(space.size), S=k)

    previous = np.ones(space.size, dtype=bool)
    for n in range(1, depth + 1):
        allowed = previous & (space.norms > n + RADIUS_EPS)
        chosen = None
        for s in scales:
            F = xi.generator(space, s) & allowed
            G = shrink(space, F, 1.0)
            if not G.any():
                continue
            defect = block_norm(k, F)
            if defect <= schedule(n):
                chosen = (F, G, defect)
                break
        if chosen is None:
            partial = _assemble(k, factorization)
            raise FactorizationDepthError(
                f"defect schedule unattainable at level {n}; achieved depth {n - 1}",
                achieved_depth=n - 1,
                partial=partial,
            )
        F, G, defect = chosen
        factorization.outer_sets.append(F)
        factorization.inner_sets.append(G)
        factorization.cutoffs.append(cutoff(space, F, G, 1.0))
        factorization.defects.append(defect)
        previous = G

    _assemble(k, factorization)
    if factorization.residual > residual_tol:
        raise InvariantViolationError(f"factorization residual {factorization.residual}")
    for m, bound in enumerate(factorization.phi_bounds(), start=1):
        if bound > 1.0 / m + 1e-12:
            raise InvariantViolationError(f"φ = {bound} exceeds 1/{m} on F_{m}")
    logger.info(f"factorization along {xi.label}: depth {factorization.depth}")
    return factorization
