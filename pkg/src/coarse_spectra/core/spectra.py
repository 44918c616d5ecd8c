"""
Eigenvalue engines and the essential-spectrum pipeline.

The essential spectrum of a band operator is assembled as the union of the
spectra of its limit operators: Floquet bands on ℤ, symbol ranges of
constant-coefficient limits on ℤ^d. Finite sections and periodic rings
serve as independent oracles.

Modified: 2026-10-19
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.optimize import minimize, minimize_scalar

from coarse_spectra.config.settings import (
    DEFAULT_FLOQUET_GRID,
    DEFAULT_HAUSDORFF_STEP,
    DEFAULT_MAX_POINTS,
    DEFAULT_MERGE_TOL,
    DEFAULT_RESIDUAL_TOL,
    DEFAULT_SELF_ADJOINT_TOL,
    DEFAULT_TORUS_GRID,
)
from coarse_spectra.core.exceptions import (
    AperiodicError,
    InvalidInputError,
    InvariantViolationError,
    NonSelfAdjointError,
)
from coarse_spectra.core.filters import DirectionProxy
from coarse_spectra.core.kernels import BandKernel
from coarse_spectra.core.localization import (
    AsymptoticOperatorSpec,
    LimitOperator,
    check_self_adjoint,
    limit_operator,
)
from coarse_spectra.core.models import Provenance, SpectrumSet
from coarse_spectra.core.space import BoundaryPolicy, build_lattice_window
from coarse_spectra.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

MatrixLike = Union[np.ndarray, sp.spmatrix, BandKernel]


def _hermitian_matrix(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, BandKernel):
        matrix = matrix.hilbert_matrix
    if sp.issparse(matrix):
        matrix = matrix.toarray()
    array = np.asarray(matrix)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {array.shape}")
    return array


def _check_hermitian(array: np.ndarray, tol: float) -> None:
    if array.size == 0:
        return
    scale = max(1.0, float(np.abs(array).max()))
    asymmetry = float(np.abs(array - array.conj().T).max())
    if asymmetry > tol * scale:
        raise NonSelfAdjointError(f"matrix is not self-adjoint (asymmetry {asymmetry:.3g})")


def eig_sym(
    matrix: MatrixLike,
    tol: float = DEFAULT_SELF_ADJOINT_TOL,
    residual_tol: float = DEFAULT_RESIDUAL_TOL,
    check_residuals: bool = True,
) -> np.ndarray:
    """
    Full spectrum of a self-adjoint window matrix, sorted ascending.

    Uses LAPACK syev/heev (Householder tridiagonalization and implicit QL/QR).

    Args:
        matrix: Dense or sparse matrix, or a BandKernel (its Hilbert matrix is used)
        tol: Self-adjointness tolerance, relative to max |a_ij|
        residual_tol: Bound on ‖Av − λv‖ / ‖A‖ for every eigenpair
        check_residuals: Compute eigenvectors and verify residuals

    Raises:
        NonSelfAdjointError: If the matrix is not self-adjoint
        InvariantViolationError: If an eigenpair residual is too large
    """
    array = _hermitian_matrix(matrix)
    _check_hermitian(array, tol)
    if array.shape[0] == 0:
        return np.zeros(0)
    if not check_residuals:
        return la.eigh(array, eigvals_only=True, driver="ev")

    values, vectors = la.eigh(array, driver="ev")
    scale = max(1.0, float(np.abs(values).max()))
    residual = float(np.linalg.norm(array @ vectors - vectors * values, axis=0).max())
    if residual > residual_tol * scale:
        raise InvariantViolationError(f"eigenpair residual {residual:.3g} exceeds tolerance")
    return values


def eig_sym_banded(matrix: MatrixLike, tol: float = DEFAULT_SELF_ADJOINT_TOL) -> np.ndarray:
    """Eigenvalues of a self-adjoint banded matrix through LAPACK band storage."""
    if isinstance(matrix, BandKernel):
        matrix = matrix.hilbert_matrix
    csr = sp.csr_matrix(matrix)
    n = csr.shape[0]
    if n == 0:
        return np.zeros(0)
    difference = csr - csr.conj().T
    difference.eliminate_zeros()
    scale = max(1.0, float(np.abs(csr.data).max()) if csr.nnz else 1.0)
    if difference.nnz and float(np.abs(difference.data).max()) > tol * scale:
        raise NonSelfAdjointError("banded matrix is not self-adjoint")

    upper = sp.triu(csr).tocoo()
    bandwidth = int((upper.col - upper.row).max()) if upper.nnz else 0
    band = np.zeros((bandwidth + 1, n), dtype=csr.dtype)
    band[bandwidth + upper.row - upper.col, upper.col] = upper.data
    return la.eig_banded(band, lower=False, eigvals_only=True)


# ----------------------------------------------------------------------
# Floquet bands and symbols
# ----------------------------------------------------------------------


def _as_spec(operator: Union[AsymptoticOperatorSpec, LimitOperator]) -> AsymptoticOperatorSpec:
    return operator.spec if isinstance(operator, LimitOperator) else operator


def _check_periodic(spec: AsymptoticOperatorSpec, period: int) -> None:
    xs = np.arange(-3 * period, 3 * period, dtype=np.int64)[:, None]
    for j, coefficient in spec.bands.items():
        if np.any(np.abs(coefficient(xs + period) - coefficient(xs)) > 1e-12):
            raise AperiodicError(f"band {list(j)} is not {period}-periodic")


@dataclass(frozen=True)
class FloquetSymbol:
    """θ ↦ h(θ), the p×p symbol of a p-periodic band operator on ℤ."""

    period: int
    terms: Tuple[Tuple[int, int, int, complex], ...]  # (row, col, winding, value)

    @classmethod
    def from_spec(cls, spec: AsymptoticOperatorSpec, period: int) -> "FloquetSymbol":
        terms = []
        rows = np.arange(period, dtype=np.int64)[:, None]
        for (j,), coefficient in spec.bands.items():
            values = np.asarray(coefficient(rows), dtype=complex)
            for row in range(period):
                target = row + j
                terms.append((row, target % period, target // period, complex(values[row])))
        return cls(period=period, terms=tuple(terms))

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        """Stack of symbols, shape (len(thetas), p, p)."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        out = np.zeros((len(thetas), self.period, self.period), dtype=complex)
        for row, col, winding, value in self.terms:
            out[:, row, col] += value * np.exp(1j * winding * thetas)
        return out

    def branches(self, thetas: np.ndarray) -> np.ndarray:
        """Sorted eigenvalue branches, shape (len(thetas), p)."""
        return np.linalg.eigvalsh(self(thetas))


def floquet_bands(
    operator: Union[AsymptoticOperatorSpec, LimitOperator],
    period: Optional[int] = None,
    grid: int = DEFAULT_FLOQUET_GRID,
    merge_tol: float = DEFAULT_MERGE_TOL,
    threads: Optional[int] = None,
    **limit_options: Any,
) -> SpectrumSet:
    """
    Spectrum of a periodic self-adjoint band operator on ℤ as a union of bands.

    Each eigenvalue branch of h(θ) is scanned on a uniform grid of [0, 2π) and
    its extrema refined by bounded scalar minimization around the best grid
    point.

    Raises:
        InvalidInputError: If the operator does not live on ℤ
        AperiodicError: If the coefficients are not period-periodic
        NonSelfAdjointError: If the operator is not self-adjoint
    """
    spec = _as_spec(operator)
    if spec.dimension != 1:
        raise InvalidInputError("Floquet bands are computed on ℤ only")
    if period is None:
        period = operator.period if isinstance(operator, LimitOperator) else 1
    _check_periodic(spec, period)
    if not check_self_adjoint(spec):
        raise NonSelfAdjointError(f"operator '{spec.name}' is not self-adjoint")

    symbol = FloquetSymbol.from_spec(spec, period)
    thetas = 2 * np.pi * np.arange(grid) / grid
    branches = symbol.branches(thetas)
    step = thetas[1] - thetas[0]

    def refine(b: int) -> Tuple[float, float]:
        lo, hi = float(branches[:, b].min()), float(branches[:, b].max())
        for sign, i in ((1.0, int(branches[:, b].argmin())), (-1.0, int(branches[:, b].argmax()))):

            def value(t: float, sign: float = sign) -> float:
                return sign * float(symbol.branches(np.array([t]))[0, b])

            found = minimize_scalar(
                value,
                bounds=(thetas[i] - step, thetas[i] + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            if sign > 0:
                lo = min(lo, float(found.fun))
            else:
                hi = max(hi, -float(found.fun))
        return lo, hi

    intervals = parallel_map(refine, range(period), threads)
    bands = SpectrumSet(intervals=list(intervals), provenance=Provenance.FLOQUET)
    logger.debug(f"Floquet bands of '{spec.name}': {bands.merged(merge_tol).intervals}")
    return bands.merged(merge_tol)


def symbol_range(
    operator: Union[AsymptoticOperatorSpec, LimitOperator],
    grid: int = DEFAULT_TORUS_GRID,
) -> SpectrumSet:
    """
    Range of the symbol σ(θ) = Σ_j c_j e^{i⟨j,θ⟩} of a constant-coefficient operator on ℤ^d.

    The torus is scanned on a grid^d lattice and both extrema are polished with
    a bounded quasi-Newton search.

    Raises:
        AperiodicError: If some coefficient is not constant
        NonSelfAdjointError: If the symbol is not real
    """
    spec = _as_spec(operator)
    d = spec.dimension
    sample_points = np.array(list(itertools.product(range(-2, 3), repeat=d)), dtype=np.int64)
    offsets, values = [], []
    for j, coefficient in spec.bands.items():
        sampled = np.asarray(coefficient(sample_points), dtype=complex)
        if np.any(np.abs(sampled - sampled[0]) > 1e-12):
            raise AperiodicError(f"band {list(j)} is not constant; symbol_range needs constants")
        offsets.append(j)
        values.append(sampled[0])
    if not offsets:
        return SpectrumSet(intervals=[(0.0, 0.0)], provenance=Provenance.FLOQUET)
    J = np.asarray(offsets, dtype=float)
    c = np.asarray(values)

    def sigma(theta: np.ndarray) -> np.ndarray:
        return np.exp(1j * np.atleast_2d(theta) @ J.T) @ c

    axis = 2 * np.pi * np.arange(grid) / grid
    torus = np.array(np.meshgrid(*([axis] * d), indexing="ij")).reshape(d, -1).T
    samples = sigma(torus)
    if np.abs(samples.imag).max() > 1e-10 * max(1.0, np.abs(samples).max()):
        raise NonSelfAdjointError("symbol is not real: operator is not self-adjoint")
    real = samples.real
    lo, hi = float(real.min()), float(real.max())
    step = axis[1] - axis[0]
    for sign, i in ((1.0, int(real.argmin())), (-1.0, int(real.argmax()))):
        start = torus[i]
        found = minimize(
            lambda t, sign=sign: sign * float(sigma(t).real[0]),
            start,
            method="L-BFGS-B",
            bounds=[(s - step, s + step) for s in start],
        )
        if sign > 0:
            lo = min(lo, float(found.fun))
        else:
            hi = max(hi, -float(found.fun))
    return SpectrumSet(intervals=[(lo, hi)], provenance=Provenance.FLOQUET)


# ----------------------------------------------------------------------
# Window oracles
# ----------------------------------------------------------------------


def finite_section_spectrum(
    spec: AsymptoticOperatorSpec,
    N: int,
    max_points: int = DEFAULT_MAX_POINTS,
    tol: float = DEFAULT_SELF_ADJOINT_TOL,
) -> SpectrumSet:
    """
    Eigenvalues of the operator compressed to the window [−N, N]^d (truncate boundary).

    Raises:
        WindowCapError: If the window exceeds max_points
        NonSelfAdjointError: If the compression is not self-adjoint to tol
    """
    space = build_lattice_window(spec.dimension, N, BoundaryPolicy.TRUNCATE, max_points=max_points)
    kernel = spec.kernel_on(space)
    if spec.dimension == 1:
        values = eig_sym_banded(kernel, tol)
    else:
        values = eig_sym(kernel, tol, check_residuals=False)
    logger.info(f"finite section N={N}: {len(values)} eigenvalues")
    return SpectrumSet.from_points(values, provenance=Provenance.FINITE_SECTION)


def periodic_window_spectrum(
    spec: AsymptoticOperatorSpec, cells: int, period: int = 1
) -> SpectrumSet:
    """
    Eigenvalues on the ring ℤ/(cells·period)ℤ, the periodized operator on ℤ.

    For a period-periodic operator these are the Floquet eigenvalues at
    θ = 2πk/cells and lie in its bands.
    """
    if spec.dimension != 1:
        raise InvalidInputError("periodic rings are built on ℤ only")
    _check_periodic(spec, period)
    length = cells * period
    if length <= 2 * spec.propagation:
        raise InvalidInputError(f"ring of length {length} is shorter than the band width")
    xs = np.arange(length, dtype=np.int64)
    matrix = np.zeros((length, length), dtype=complex)
    for (j,), coefficient in spec.bands.items():
        values = np.asarray(coefficient(xs[:, None]), dtype=complex)
        np.add.at(matrix, (xs, np.mod(xs + j, length)), values)
    if np.all(matrix.imag == 0):
        matrix = matrix.real
    return SpectrumSet.from_points(
        eig_sym(matrix, check_residuals=False), provenance=Provenance.FINITE_SECTION
    )


def hausdorff_gap(
    A: SpectrumSet,
    B: SpectrumSet,
    tol: float = 0.05,
    step: float = DEFAULT_HAUSDORFF_STEP,
) -> Tuple[float, int]:
    """
    One-sided distance from A to the point cloud B, and the number of B values far from A.

    Args:
        A: Reference set (intervals are sampled at the given step)
        B: Point cloud; multiplicities count towards outliers
        tol: Outlier threshold
        step: Sampling step on A's intervals

    Returns:
        (sup_{a∈A} d(a, B), #{b ∈ B : d(b, A) > tol})
    """
    samples = [np.asarray(A.points, dtype=float)]
    for lo, hi in A.intervals:
        samples.append(np.append(np.arange(lo, hi, step), hi))
    sample = np.concatenate(samples)

    cloud = np.sort(np.asarray(B.points, dtype=float))
    if len(sample) == 0:
        one_sided = 0.0
    elif len(cloud) == 0:
        one_sided = float("inf")
    else:
        position = np.clip(np.searchsorted(cloud, sample), 1, len(cloud) - 1)
        left, right = cloud[position - 1], cloud[position]
        nearest = np.minimum(np.abs(sample - left), np.abs(sample - right))
        if len(cloud) == 1:
            nearest = np.abs(sample - cloud[0])
        one_sided = float(nearest.max())

    outliers = int(sum(m for p, m in zip(B.points, B.multiplicities) if A.distance(p) > tol))
    return one_sided, outliers


def finite_section_sweep(
    spec: AsymptoticOperatorSpec,
    Ns: Sequence[int],
    reference: SpectrumSet,
    tol: float = 0.05,
    max_points: int = DEFAULT_MAX_POINTS,
    threads: Optional[int] = None,
) -> List[Dict[str, Any]]:
    """Gap and outlier count of finite sections against a reference set, per N."""

    def one(N: int) -> Dict[str, Any]:
        points = finite_section_spectrum(spec, N, max_points)
        one_sided, outliers = hausdorff_gap(reference, points, tol)
        return {"N": int(N), "one_sided": one_sided, "outliers": outliers}

    return list(parallel_map(one, list(Ns), threads))


# ----------------------------------------------------------------------
# Essential spectrum
# ----------------------------------------------------------------------


def default_proxies(spec: AsymptoticOperatorSpec) -> List[DirectionProxy]:
    """Declared proxies, or ±e_k along every lattice axis."""
    if spec.proxies:
        return [declared.proxy for declared in spec.proxies]
    proxies = []
    for k in range(spec.dimension):
        for sign in (1, -1):
            direction = [0] * spec.dimension
            direction[k] = sign
            proxies.append(DirectionProxy(tuple(direction)))
    return proxies


def localization_spectra(
    spec: AsymptoticOperatorSpec,
    proxies: Optional[Sequence[DirectionProxy]] = None,
    grid: Optional[int] = None,
    threads: Optional[int] = None,
    **limit_options: Any,
) -> List[Tuple[LimitOperator, SpectrumSet]]:
    """
    Limit operator and its spectrum for every proxy.

    limit_options (horizon, tol, max_period, window) go to limit_operator.
    """
    results = []
    for proxy in proxies if proxies is not None else default_proxies(spec):
        limit = limit_operator(spec, proxy, **limit_options)
        if spec.dimension == 1:
            spectrum = floquet_bands(limit, grid=grid or DEFAULT_FLOQUET_GRID, threads=threads)
        else:
            spectrum = symbol_range(limit, grid=grid or DEFAULT_TORUS_GRID)
        logger.info(f"localization along {proxy.label}: {spectrum.intervals}")
        results.append((limit, spectrum))
    return results


def ess_spectrum_via_localizations(
    spec: AsymptoticOperatorSpec,
    proxies: Optional[Sequence[DirectionProxy]] = None,
    grid: Optional[int] = None,
    merge_tol: float = DEFAULT_MERGE_TOL,
    threads: Optional[int] = None,
    **limit_options: Any,
) -> SpectrumSet:
    """
    Union of the spectra of the limit operators along the proxies, merged into
    disjoint intervals.

    Raises:
        NoLimitError: If some proxy yields no limit operator
    """
    localizations = localization_spectra(spec, proxies, grid, threads, **limit_options)
    spectra = [spectrum for _, spectrum in localizations]
    return union_of_spectra(spectra, merge_tol)


def union_of_spectra(
    spectra: Sequence[SpectrumSet], merge_tol: float = DEFAULT_MERGE_TOL
) -> SpectrumSet:
    """Merged union of localization spectra."""
    union = SpectrumSet(provenance=Provenance.UNION_OF_LOCALIZATIONS)
    for spectrum in spectra:
        union = union.union(spectrum, merge_tol)
    union.provenance = Provenance.UNION_OF_LOCALIZATIONS
    return union
