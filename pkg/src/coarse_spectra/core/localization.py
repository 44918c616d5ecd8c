"""
Translations on ℤ^d, directional limits and limit operators.

An AsymptoticOperatorSpec describes a band operator through closed-form
coefficients k(x, x+j) = c_j(x), so translates τ_a(T) can be sampled at any
distance. Limit operators are detected numerically along direction
proxies with a Cauchy test over consecutive tail samples.

Modified: 2026-10-19
"""

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from coarse_spectra.config.settings import (
    DEFAULT_CAUCHY_WINDOW,
    DEFAULT_LIMIT_HORIZON,
    DEFAULT_LIMIT_TOL,
    DEFAULT_MAX_PERIOD,
)
from coarse_spectra.core.coefficients import (
    Coefficient,
    Constant,
    Periodic,
    Product,
    Sum,
    coefficient_from_dict,
)
from coarse_spectra.core.exceptions import (
    AperiodicError,
    InvalidInputError,
    InvariantViolationError,
    MarginExhaustedError,
    NoLimitError,
    NonSelfAdjointError,
    SpecFormatError,
)
from coarse_spectra.core.filters import DirectionProxy
from coarse_spectra.core.kernels import BandKernel, block_norm, operator_norm
from coarse_spectra.core.models import ConvergenceCurve, LimitResult
from coarse_spectra.core.space import Space, build_lattice_window
from coarse_spectra.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

Offset = Tuple[int, ...]


@dataclass(frozen=True)
class ProxyDeclaration:
    """A direction proxy with optional declared limit coefficients per band."""

    proxy: DirectionProxy
    declared_limits: Mapping[Offset, Coefficient] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v": list(self.proxy.direction),
            "period": self.proxy.period,
            "declared_limits": [
                {"offset": list(offset), "coeff": coefficient.to_dict()}
                for offset, coefficient in self.declared_limits.items()
            ],
        }


@dataclass(frozen=True)
class AsymptoticOperatorSpec:
    """
    Band operator on ℤ^d given by offsets and coefficient functions.

    Attributes:
        dimension: Lattice dimension d
        bands: Offset j ↦ c_j with k(x, x+j) = c_j(x)
        proxies: Declared direction proxies
        self_adjoint: When set, c_{−j}(x+j) = conj(c_j(x)) is enforced
        name: Label used in reports
    """

    dimension: int
    bands: Mapping[Offset, Coefficient]
    proxies: Tuple[ProxyDeclaration, ...] = ()
    self_adjoint: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise InvalidInputError(f"dimension must be >= 1, got {self.dimension}")
        for offset in self.bands:
            if len(offset) != self.dimension:
                raise InvalidInputError(
                    f"offset {offset} does not match dimension {self.dimension}"
                )

    @property
    def propagation(self) -> float:
        return float(max((sum(abs(c) for c in j) for j in self.bands), default=0))

    def kernel_on(self, space: Space) -> BandKernel:
        """Realize the operator on a lattice window."""
        if space.ambient is None or space.ambient.dimension != self.dimension:
            raise InvalidInputError(f"spec needs a {self.dimension}-dimensional lattice window")
        return BandKernel.from_offsets(space, dict(self.bands), propagation=self.propagation)

    def translated(self, a: Sequence[int]) -> "AsymptoticOperatorSpec":
        """Spec of τ_a(T), with kernel k(x+a, y+a)."""
        shift = tuple(int(c) for c in a)
        proxies = tuple(
            ProxyDeclaration(
                d.proxy, {j: c.shifted(shift) for j, c in d.declared_limits.items()}
            )
            for d in self.proxies
        )
        return replace(
            self,
            bands={j: c.shifted(shift) for j, c in self.bands.items()},
            proxies=proxies,
        )

    def adjoint(self) -> "AsymptoticOperatorSpec":
        """Spec of T*: c*_j(x) = conj(c_{−j}(x+j))."""
        bands = {
            tuple(-c for c in j): coefficient.shifted(tuple(-c for c in j)).conjugate()
            for j, coefficient in self.bands.items()
        }
        return replace(self, bands=bands, proxies=())

    def declaration(self, proxy: DirectionProxy) -> Optional[ProxyDeclaration]:
        for declared in self.proxies:
            if declared.proxy == proxy:
                return declared
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dimension": self.dimension,
            "name": self.name,
            "self_adjoint": self.self_adjoint,
            "bands": [
                {"offset": list(j), "coeff": c.to_dict()} for j, c in self.bands.items()
            ],
            "proxies": [d.to_dict() for d in self.proxies],
        }


def _offset(value: Any, dimension: int) -> Offset:
    if isinstance(value, (int, float)):
        value = [value]
    offset = tuple(int(c) for c in value)
    if len(offset) != dimension:
        raise SpecFormatError(f"offset {value!r} does not match dimension {dimension}")
    return offset


def spec_from_dict(data: Dict[str, Any]) -> AsymptoticOperatorSpec:
    """
    Build an AsymptoticOperatorSpec from
    {dimension?, bands: [{offset, coeff}], proxies: [{v, period, declared_limits}], self_adjoint?}.
    """
    try:
        bands_data = data["bands"]
        dimension = int(data.get("dimension", 0)) or len(
            np.atleast_1d(bands_data[0]["offset"]) if bands_data else [0]
        )
        bands: Dict[Offset, Coefficient] = {}
        for band in bands_data:
            offset = _offset(band["offset"], dimension)
            coefficient = coefficient_from_dict(band.get("coeff", 1.0))
            bands[offset] = Sum((bands[offset], coefficient)) if offset in bands else coefficient

        proxies = []
        for item in data.get("proxies", []):
            v = item["v"]
            proxy = DirectionProxy(
                direction=tuple(int(c) for c in (v if isinstance(v, list) else [v])),
                period=int(item.get("period", 1)),
            )
            limits_data = item.get("declared_limits", [])
            if isinstance(limits_data, dict):
                limits_data = [{"offset": k, "coeff": v} for k, v in limits_data.items()]
            limits = {
                _offset(_parse_key(entry["offset"]), dimension): coefficient_from_dict(
                    entry["coeff"]
                )
                for entry in limits_data
            }
            proxies.append(ProxyDeclaration(proxy, limits))
    except (KeyError, TypeError, IndexError, ValueError) as e:
        raise SpecFormatError(f"malformed operator spec: {e}") from e

    return AsymptoticOperatorSpec(
        dimension=dimension,
        bands=bands,
        proxies=tuple(proxies),
        self_adjoint=bool(data.get("self_adjoint", False)),
        name=str(data.get("name", "")),
    )


def _parse_key(key: Any) -> Any:
    if isinstance(key, str):
        return [int(c) for c in key.replace("(", "").replace(")", "").split(",") if c.strip()]
    return key


def check_self_adjoint(
    spec: AsymptoticOperatorSpec,
    radius: int = 6,
    far: int = DEFAULT_LIMIT_HORIZON,
    tol: float = 1e-12,
) -> bool:
    """
    Sample c_{−j}(x+j) = conj(c_j(x)) on a box around 0 and at distance `far` along each axis.

    Raises:
        NonSelfAdjointError: If the spec claims self-adjointness and the check fails
    """
    d = spec.dimension
    box = np.array(list(itertools.product(range(-radius, radius + 1), repeat=d)), dtype=np.int64)
    axes = np.vstack([np.eye(d, dtype=np.int64) * far, -np.eye(d, dtype=np.int64) * far])
    sample = np.vstack([box, axes])

    ok = True
    for j, coefficient in spec.bands.items():
        mirror = tuple(-c for c in j)
        partner = spec.bands.get(mirror)
        here = coefficient(sample)
        there = (
            partner(sample + np.asarray(j, dtype=np.int64))
            if partner is not None
            else np.zeros(len(sample))
        )
        if np.max(np.abs(there - np.conj(here))) > tol * max(1.0, float(np.abs(here).max())):
            ok = False
            logger.debug(f"self-adjointness fails on band {j}")
            break
    if spec.self_adjoint and not ok:
        raise NonSelfAdjointError(f"spec '{spec.name}' is flagged self-adjoint but is not")
    return ok


# ----------------------------------------------------------------------
# Translations
# ----------------------------------------------------------------------


def translate(k: BandKernel, a: Sequence[int]) -> BandKernel:
    """
    Kernel of τ_a(T) = ρ_a T ρ_a^*: k_a(x, y) = k(x+a, y+a).

    Exact on the overlap of the window with its translate (everywhere on
    periodic windows).

    Raises:
        InvalidInputError: If the space is not a lattice window
        MarginExhaustedError: If the shifted window misses the window entirely
    """
    space = k.space
    if space.coords is None or space.ambient is None:
        raise InvalidInputError("translations need a lattice window")
    shift = np.asarray(a, dtype=np.int64).reshape(space.ambient.dimension)
    if not shift.any():
        return k

    # destination of each window index p: the point whose translate is p
    destination = space.index_of_coords(space.coords - shift)
    if not np.any(destination >= 0):
        raise MarginExhaustedError(f"shift {list(shift)} leaves no overlap with the window")
    coo = k.matrix.tocoo()
    rows, cols = destination[coo.row], destination[coo.col]
    keep = (rows >= 0) & (cols >= 0)
    n = space.size
    matrix = sp.csr_matrix((coo.data[keep], (rows[keep], cols[keep])), shape=(n, n))
    return BandKernel(space, k.propagation, matrix)


def local_seminorm(k: BandKernel, theta: np.ndarray) -> float:
    """‖T θ(Q)‖ + ‖θ(Q) T‖."""
    theta = np.asarray(theta)
    return operator_norm(k.column_scaled(theta)) + operator_norm(k.row_scaled(theta))


def translated_set_norm(
    k: BandKernel, V: np.ndarray, a: Sequence[int], tol: float = 1e-9
) -> Tuple[float, float]:
    """
    (‖T 1_{V+a}‖, ‖τ_a(T) 1_V‖), which coincide.

    Raises:
        MarginExhaustedError: If V+a or the rows feeding V leave the window
        InvariantViolationError: If the two norms differ
    """
    space = k.space
    if space.coords is None:
        raise InvalidInputError("translations need a lattice window")
    V = np.asarray(V, dtype=bool)
    shift = np.asarray(a, dtype=np.int64)
    targets = space.index_of_coords(space.coords[V] + shift)
    if np.any(targets < 0):
        raise MarginExhaustedError(f"V + {list(shift)} leaves the window")
    moved = np.zeros(space.size, dtype=bool)
    moved[targets] = True

    if not space.is_periodic:
        depth = space.edge_depth
        if depth[V].min() < k.propagation or depth[moved].min() < k.propagation:
            raise MarginExhaustedError("rows feeding V or V + a fall outside the window")

    everything = np.ones(space.size, dtype=bool)
    lhs = block_norm(k, everything, moved)
    rhs = block_norm(translate(k, shift), everything, V)
    if abs(lhs - rhs) > tol * max(1.0, lhs):
        raise InvariantViolationError(f"‖T 1_(V+a)‖ = {lhs} but ‖τ_a(T) 1_V‖ = {rhs}")
    return lhs, rhs


# ----------------------------------------------------------------------
# Directional limits
# ----------------------------------------------------------------------


def directional_limit(
    coefficient: Coefficient,
    proxy: DirectionProxy,
    x: Sequence[int],
    horizon: int = DEFAULT_LIMIT_HORIZON,
    tol: float = DEFAULT_LIMIT_TOL,
    window: int = DEFAULT_CAUCHY_WINDOW,
) -> LimitResult:
    """
    Cauchy test on c(x + a_n) for n = horizon .. horizon + window − 1.

    Returns:
        LimitResult with the stabilized value (snapped to 0 below tol), or
        value None and the oscillation amplitude when the samples spread
        more than tol
    """
    ns = np.arange(horizon, horizon + window, dtype=np.int64)
    sample_coords = np.asarray(x, dtype=np.int64)[None, :] + proxy.points(ns)
    samples = np.asarray(coefficient(sample_coords), dtype=complex)
    amplitude = float(np.abs(samples[:, None] - samples[None, :]).max())
    if amplitude > tol:
        return LimitResult(value=None, amplitude=amplitude, samples=list(samples))
    value = samples[-1]
    value = complex(
        0.0 if abs(value.real) <= tol else value.real,
        0.0 if abs(value.imag) <= tol else value.imag,
    )
    return LimitResult(value=value, amplitude=amplitude, samples=list(samples))


@dataclass(frozen=True)
class LimitOperator:
    """Constant or periodic band operator τ_κ(T) found along a proxy."""

    spec: AsymptoticOperatorSpec
    period: int
    proxy: DirectionProxy

    def kernel_on(self, space: Space) -> BandKernel:
        return self.spec.kernel_on(space)

    @property
    def is_constant(self) -> bool:
        return self.period == 1

    def coefficient_table(self) -> Dict[Offset, np.ndarray]:
        """Offset j ↦ (c_j(0), …, c_j(p−1)) along the first axis."""
        xs = np.zeros((self.period, self.spec.dimension), dtype=np.int64)
        xs[:, 0] = np.arange(self.period)
        return {j: np.asarray(c(xs), dtype=complex) for j, c in self.spec.bands.items()}

    def to_dict(self) -> Dict[str, Any]:
        return {
            "proxy": self.proxy.to_dict(),
            "period": self.period,
            "bands": {
                str(list(j)): [
                    complex(v).real if complex(v).imag == 0 else [v.real, v.imag] for v in values
                ]
                for j, values in self.coefficient_table().items()
            },
        }


def _sample_points(dimension: int, max_period: int) -> np.ndarray:
    if dimension == 1:
        return np.arange(2 * max_period, dtype=np.int64)[:, None]
    return np.array(list(itertools.product(range(-2, 3), repeat=dimension)), dtype=np.int64)


def _limits_at(
    coefficient: Coefficient,
    proxy: DirectionProxy,
    points: np.ndarray,
    horizon: int,
    tol: float,
    window: int,
) -> Tuple[Optional[np.ndarray], float]:
    values = np.zeros(len(points), dtype=complex)
    for i, x in enumerate(points):
        result = directional_limit(coefficient, proxy, x, horizon, tol, window)
        if not result.converged:
            return None, result.amplitude
        values[i] = result.value
    return values, 0.0


def _minimal_period(table: np.ndarray, max_period: int, tol: float) -> Optional[int]:
    length = table.shape[1]
    for q in range(1, max_period + 1):
        if np.all(np.abs(table[:, q:] - table[:, : length - q]) <= tol):
            return q
    return None


def limit_operator(
    spec: AsymptoticOperatorSpec,
    proxy: DirectionProxy,
    horizon: int = DEFAULT_LIMIT_HORIZON,
    tol: float = DEFAULT_LIMIT_TOL,
    max_period: int = DEFAULT_MAX_PERIOD,
    window: int = DEFAULT_CAUCHY_WINDOW,
) -> LimitOperator:
    """
    τ_κ(T) along a direction proxy.

    On ℤ the limit coefficients are fitted with the smallest period ≤ max_period;
    on ℤ^d with d ≥ 2 they must be constant. Declared limits are checked
    against the detected ones.

    Raises:
        NoLimitError: If some band coefficient has no limit along the proxy
        AperiodicError: If the limit coefficients are not periodic (constant for d ≥ 2)
        InvariantViolationError: If a declared limit disagrees with the detected one
    """
    if len(proxy.direction) != spec.dimension:
        raise InvalidInputError(f"proxy {proxy.label} does not match dimension {spec.dimension}")
    points = _sample_points(spec.dimension, max_period)
    offsets = list(spec.bands)
    table = np.zeros((len(offsets), len(points)), dtype=complex)
    for row, j in enumerate(offsets):
        values, amplitude = _limits_at(spec.bands[j], proxy, points, horizon, tol, window)
        if values is None:
            raise NoLimitError(
                f"band {list(j)} has no limit along proxy {proxy.label} "
                f"(oscillation amplitude {amplitude:.3g})",
                band=j,
                proxy=proxy.label,
                amplitude=amplitude,
            )
        table[row] = values

    declared = spec.declaration(proxy)
    if declared is not None:
        for row, j in enumerate(offsets):
            if j in declared.declared_limits:
                expected = np.asarray(declared.declared_limits[j](points), dtype=complex)
                gap = float(np.abs(expected - table[row]).max())
                if gap > max(tol, 1e-12) * 10:
                    raise InvariantViolationError(
                        f"declared limit of band {list(j)} along {proxy.label} is off by {gap}"
                    )

    if spec.dimension == 1:
        period = _minimal_period(table, max_period, tol)
        if period is None:
            raise AperiodicError(
                f"limit coefficients along {proxy.label} have no period <= {max_period}"
            )
        bands: Dict[Offset, Coefficient] = {}
        for row, j in enumerate(offsets):
            values = table[row, :period]
            if np.all(values == 0):
                continue
            bands[j] = (
                Constant(_plain(values[0]))
                if np.all(values == values[0])
                else Periodic(tuple(_plain(v) for v in values))
            )
    else:
        if np.any(np.abs(table - table[:, :1]) > tol):
            raise AperiodicError(
                f"limit along {proxy.label} is not constant; only constant limits are "
                f"supported on ℤ^{spec.dimension}"
            )
        period = 1
        bands = {
            j: Constant(_plain(table[row, 0]))
            for row, j in enumerate(offsets)
            if table[row, 0] != 0
        }

    limit_spec = AsymptoticOperatorSpec(
        dimension=spec.dimension,
        bands=bands,
        self_adjoint=spec.self_adjoint,
        name=f"{spec.name or 'T'}@{proxy.label}",
    )
    if spec.self_adjoint:
        check_self_adjoint(limit_spec)
    logger.info(f"limit operator along {proxy.label}: period {period}, {len(bands)} bands")
    return LimitOperator(spec=limit_spec, period=period, proxy=proxy)


def _plain(value: complex) -> complex:
    value = complex(value)
    return value.real if value.imag == 0 else value  # type: ignore[return-value]


def compose_specs(A: AsymptoticOperatorSpec, B: AsymptoticOperatorSpec) -> AsymptoticOperatorSpec:
    """
    Spec of the product A·B on counting measure:
    (AB)(x, x+i+j) = Σ a_i(x)·b_j(x+i).
    """
    if A.dimension != B.dimension:
        raise InvalidInputError("specs of different dimensions cannot be composed")
    terms: Dict[Offset, List[Coefficient]] = {}
    for i, a in A.bands.items():
        for j, b in B.bands.items():
            target = tuple(p + q for p, q in zip(i, j))
            terms.setdefault(target, []).append(Product((a, b.shifted(i))))
    bands = {
        offset: parts[0] if len(parts) == 1 else Sum(tuple(parts))
        for offset, parts in terms.items()
    }

    proxies = []
    for declared_a in A.proxies:
        declared_b = B.declaration(declared_a.proxy)
        if declared_b is None:
            continue
        limits: Dict[Offset, List[Coefficient]] = {}
        complete = set(declared_a.declared_limits) == set(A.bands) and set(
            declared_b.declared_limits
        ) == set(B.bands)
        if complete:
            for i, a in declared_a.declared_limits.items():
                for j, b in declared_b.declared_limits.items():
                    target = tuple(p + q for p, q in zip(i, j))
                    limits.setdefault(target, []).append(Product((a, b.shifted(i))))
        proxies.append(
            ProxyDeclaration(
                declared_a.proxy,
                {o: p[0] if len(p) == 1 else Sum(tuple(p)) for o, p in limits.items()},
            )
        )
    return AsymptoticOperatorSpec(
        dimension=A.dimension,
        bands=bands,
        proxies=tuple(proxies),
        name=f"{A.name or 'A'}*{B.name or 'B'}",
    )


def local_convergence_check(
    spec: AsymptoticOperatorSpec,
    proxy: DirectionProxy,
    block_radius: int,
    ns: Sequence[int],
    limit: Optional[LimitOperator] = None,
    tol: float = DEFAULT_LIMIT_TOL,
    space: Optional[Space] = None,
    threads: Optional[int] = None,
) -> ConvergenceCurve:
    """
    n ↦ ‖(τ_{a_n}(T) − T_κ) 1_Λ‖ + ‖1_Λ (τ_{a_n}(T) − T_κ)‖ with Λ = B_0(block_radius).

    Translates are evaluated from the closed-form coefficients on a local
    window wide enough to hold Λ and every row or column it touches.

    Raises:
        MarginExhaustedError: If a supplied space is too small around Λ
    """
    d = spec.dimension
    reach = int(np.ceil(spec.propagation))
    margin = block_radius + reach
    if space is None:
        space = build_lattice_window(d, margin + 1)
    elif space.ambient is None or space.edge_depth[space.origin] < margin:
        raise MarginExhaustedError(
            f"window cannot hold B_0({block_radius}) with its {reach}-neighbourhood"
        )
    if limit is None:
        limit = limit_operator(spec, proxy, tol=tol)
    block = space.norms <= block_radius
    limit_kernel = limit.kernel_on(space)

    def distance(n: int) -> float:
        shifted = spec.translated(tuple(int(c) for c in proxy.point(int(n))))
        difference = shifted.kernel_on(space) - limit_kernel
        return local_seminorm(difference, block.astype(float))

    values = [float(v) for v in parallel_map(distance, list(ns), threads)]
    logger.debug(f"local convergence along {proxy.label}: {values}")
    return ConvergenceCurve(ns=[int(n) for n in ns], values=values, tol=tol)
