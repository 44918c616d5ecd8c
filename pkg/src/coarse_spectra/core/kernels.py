"""
Controlled kernels and their operators on L²(X, μ).

A BandKernel stores the kernel k(x, y) of Op(k)f(x) = Σ_y w(y) k(x,y) f(y)
as a sparse matrix over the window. Construction rejects entries beyond the
declared propagation, so every stored entry satisfies d(x,y) ≤ d(k).

Modified: 2026-10-19
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterator, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from coarse_spectra.config.settings import (
    DEFAULT_BAND_CAP,
    DEFAULT_DENSE_CAP,
    DEFAULT_MAX_ITERATIONS,
    DEFAULT_NORM_TOL,
    Settings,
)
from coarse_spectra.core.exceptions import (
    InvalidInputError,
    InvariantViolationError,
    NormConvergenceError,
    SpaceMismatchError,
)
from coarse_spectra.core.space import RADIUS_EPS, Space, greedy_net
from coarse_spectra.utils.parallel import parallel_map

logger = logging.getLogger(__name__)

Coefficient = Union[complex, float, np.ndarray, Callable[[np.ndarray], np.ndarray]]

# Largest dense block (entries) handed to LAPACK in one piece
DENSE_ENTRY_CAP = 4_000_000


@dataclass(frozen=True, eq=False)
class Vector:
    """Per-point amplitudes with the μ-weighted inner product."""

    space: Space
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.space.size,):
            raise InvalidInputError("vector length must match the space")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("vector entries must be finite")

    def inner(self, other: "Vector") -> complex:
        """⟨f, g⟩ = Σ_x w(x) conj(f(x)) g(x)."""
        _check_same_space(self.space, other.space)
        return complex(np.sum(self.space.weights * np.conj(self.values) * other.values))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.space.weights * np.abs(self.values) ** 2)))

    @classmethod
    def delta(cls, space: Space, point) -> "Vector":
        values = np.zeros(space.size, dtype=complex)
        values[space.index(point)] = 1.0
        return cls(space, values)


@dataclass(frozen=True, eq=False)
class BandKernel:
    """Controlled kernel with propagation d(k) realized on a window."""

    space: Space
    propagation: float
    matrix: sp.csr_matrix

    def __post_init__(self) -> None:
        n = self.space.size
        if not sp.isspmatrix_csr(self.matrix):
            object.__setattr__(self, "matrix", sp.csr_matrix(self.matrix))
        if self.matrix.shape != (n, n):
            raise InvalidInputError(f"kernel matrix must be {n}x{n}, got {self.matrix.shape}")
        if self.propagation < 0:
            raise InvalidInputError("propagation must be >= 0")
        self.matrix.eliminate_zeros()
        if self.matrix.nnz:
            coo = self.matrix.tocoo()
            reach = self.space.pair_distances(coo.row, coo.col).max()
            if reach > self.propagation + RADIUS_EPS:
                raise InvalidInputError(
                    f"kernel has entries at distance {reach} beyond propagation {self.propagation}"
                )

    @classmethod
    def from_matrix(
        cls, space: Space, matrix, propagation: Optional[float] = None
    ) -> "BandKernel":
        """
        Wrap a window matrix of kernel entries.

        Args:
            space: Window the matrix lives on
            matrix: Dense or sparse n×n array of k(x, y)
            propagation: Declared d(k); measured from the entries when omitted
        """
        csr = sp.csr_matrix(matrix)
        csr.eliminate_zeros()
        if propagation is None:
            if csr.nnz == 0:
                propagation = 0.0
            else:
                coo = csr.tocoo()
                propagation = float(space.pair_distances(coo.row, coo.col).max())
        return cls(space=space, propagation=float(propagation), matrix=csr)

    @classmethod
    def from_offsets(
        cls,
        space: Space,
        bands: Mapping[Tuple[int, ...], Coefficient],
        propagation: Optional[float] = None,
    ) -> "BandKernel":
        """
        Build k(x, x+j) = c_j(x) on a lattice window.

        Args:
            space: Lattice window
            bands: Offset j ↦ coefficient (scalar, per-point array or callable on coordinates)
            propagation: Declared d(k); max ‖j‖₁ when omitted

        Returns:
            BandKernel; entries whose target leaves a truncated window are dropped
        """
        if space.coords is None or space.ambient is None:
            raise InvalidInputError("offset bands need a lattice window")
        d = space.ambient.dimension
        rows, cols, data = [], [], []
        reach = 0.0
        for offset, coefficient in bands.items():
            j = np.asarray(offset, dtype=np.int64).reshape(d)
            reach = max(reach, float(np.abs(j).sum()))
            values = _evaluate(coefficient, space.coords)
            targets = space.index_of_coords(space.coords + j)
            keep = (targets >= 0) & (values != 0)
            rows.append(np.flatnonzero(keep))
            cols.append(targets[keep])
            data.append(values[keep])
        n = space.size
        if rows:
            matrix = sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(n, n),
            )
        else:
            matrix = sp.csr_matrix((n, n))
        return cls(
            space=space,
            propagation=float(reach if propagation is None else propagation),
            matrix=matrix,
        )

    # ------------------------------------------------------------------
    # Views
    # ------------------------------------------------------------------

    @cached_property
    def sup_norm(self) -> float:
        """sup |k| over stored entries."""
        return float(np.abs(self.matrix.data).max()) if self.matrix.nnz else 0.0

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data) or bool(
            np.all(self.matrix.data.imag == 0)
        )

    def entry(self, x, y) -> complex:
        return complex(self.matrix[self.space.index(x), self.space.index(y)])

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @cached_property
    def hilbert_matrix(self) -> sp.csr_matrix:
        """W^{1/2} K W^{1/2}: the matrix of Op(k) in an orthonormal basis of L²(μ)."""
        if self.space.is_counting:
            return self.matrix
        root = sp.diags(np.sqrt(self.space.weights))
        return (root @ self.matrix @ root).tocsr()

    @cached_property
    def operator_matrix(self) -> sp.csr_matrix:
        """K W: the matrix of Op(k) acting on point-value vectors."""
        if self.space.is_counting:
            return self.matrix
        return (self.matrix @ sp.diags(self.space.weights)).tocsr()

    def is_self_adjoint(self, tol: float = 1e-10) -> bool:
        difference = self.hilbert_matrix - self.hilbert_matrix.conj().T
        return _max_abs(difference) <= tol * max(1.0, self.sup_norm)

    # ------------------------------------------------------------------
    # Linear structure and multiplication operators
    # ------------------------------------------------------------------

    def _combine(self, other: "BandKernel", matrix: sp.csr_matrix) -> "BandKernel":
        _check_same_space(self.space, other.space)
        return BandKernel(
            self.space, max(self.propagation, other.propagation), sp.csr_matrix(matrix)
        )

    def __add__(self, other: "BandKernel") -> "BandKernel":
        _check_same_space(self.space, other.space)
        return self._combine(other, self.matrix + other.matrix)

    def __sub__(self, other: "BandKernel") -> "BandKernel":
        _check_same_space(self.space, other.space)
        return self._combine(other, self.matrix - other.matrix)

    def __neg__(self) -> "BandKernel":
        return BandKernel(self.space, self.propagation, -self.matrix)

    def scaled(self, factor: complex) -> "BandKernel":
        return BandKernel(self.space, self.propagation, sp.csr_matrix(self.matrix * factor))

    def row_scaled(self, values: np.ndarray) -> "BandKernel":
        """Kernel of φ(Q)·Op(k)."""
        return BandKernel(
            self.space, self.propagation, (sp.diags(values) @ self.matrix).tocsr()
        )

    def column_scaled(self, values: np.ndarray) -> "BandKernel":
        """Kernel of Op(k)·φ(Q)."""
        return BandKernel(
            self.space, self.propagation, (self.matrix @ sp.diags(values)).tocsr()
        )

    def restrict_rows(self, mask: np.ndarray) -> "BandKernel":
        """Kernel of 1_F·Op(k)."""
        return self.row_scaled(np.asarray(mask, dtype=float))

    def restrict_columns(self, mask: np.ndarray) -> "BandKernel":
        """Kernel of Op(k)·1_F."""
        return self.column_scaled(np.asarray(mask, dtype=float))


def _check_same_space(a: Space, b: Space) -> None:
    if a is not b:
        raise SpaceMismatchError("operands live on different spaces")


def _evaluate(coefficient: Coefficient, coords: np.ndarray) -> np.ndarray:
    if callable(coefficient):
        values = np.asarray(coefficient(coords))
    else:
        values = np.asarray(coefficient)
    if values.ndim == 0:
        values = np.full(len(coords), values.item())
    if values.shape != (len(coords),):
        raise InvalidInputError("coefficient must give one value per point")
    return values


def _max_abs(matrix: sp.spmatrix) -> float:
    matrix = sp.csr_matrix(matrix)
    matrix.eliminate_zeros()
    return float(np.abs(matrix.data).max()) if matrix.nnz else 0.0


# ----------------------------------------------------------------------
# Standard kernels
# ----------------------------------------------------------------------


def identity_kernel(space: Space) -> BandKernel:
    """δ_xy / w(x), the kernel of the identity operator."""
    return BandKernel(space, 0.0, sp.diags(1.0 / space.weights).tocsr())


def diagonal_kernel(space: Space, values: Sequence[complex]) -> BandKernel:
    """Kernel of multiplication by a function of position."""
    values = np.asarray(values)
    return BandKernel(space, 0.0, sp.diags(values / space.weights).tocsr())


def adjacency_kernel(space: Space) -> BandKernel:
    """1 on pairs at distance exactly 1 (nearest neighbours on lattices)."""
    rows, cols = space.pairs_within(1.0)
    distances = space.pair_distances(rows, cols)
    keep = distances > 0
    n = space.size
    matrix = sp.csr_matrix((np.ones(keep.sum()), (rows[keep], cols[keep])), shape=(n, n))
    return BandKernel(space, 1.0, matrix)


def constant_kernel(space: Space, value: complex, propagation: float) -> BandKernel:
    """value on every pair with d(x,y) ≤ propagation."""
    rows, cols = space.pairs_within(propagation)
    n = space.size
    matrix = sp.csr_matrix((np.full(len(rows), value), (rows, cols)), shape=(n, n))
    return BandKernel(space, float(propagation), matrix)


def random_band_kernel(
    space: Space,
    propagation: float,
    rng: np.random.Generator,
    complex_entries: bool = True,
    density: float = 1.0,
) -> BandKernel:
    """Kernel with independent uniform entries on the band d(x,y) ≤ propagation."""
    rows, cols = space.pairs_within(propagation)
    keep = rng.random(len(rows)) < density
    rows, cols = rows[keep], cols[keep]
    values = rng.uniform(-1.0, 1.0, len(rows))
    if complex_entries:
        values = values + 1j * rng.uniform(-1.0, 1.0, len(rows))
    n = space.size
    return BandKernel(space, float(propagation), sp.csr_matrix((values, (rows, cols)), (n, n)))


# ----------------------------------------------------------------------
# Algebra
# ----------------------------------------------------------------------


def op_apply(k: BandKernel, f: Vector) -> Vector:
    """(Op(k)f)(x) = Σ_y w(y) k(x,y) f(y)."""
    _check_same_space(k.space, f.space)
    return Vector(k.space, np.asarray(k.operator_matrix @ f.values))


def op_adjoint(k: BandKernel) -> BandKernel:
    """k*(x,y) = conj(k(y,x)), same propagation."""
    return BandKernel(k.space, k.propagation, k.matrix.conj().T.tocsr())


def composition_bound(k: BandKernel, l: BandKernel) -> float:
    """sup|k|·sup|l|·min{V(d(k)), V(d(l))} with V the largest ball measure on the window."""
    space = k.space
    volume = min(space.max_ball_measure(k.propagation), space.max_ball_measure(l.propagation))
    return k.sup_norm * l.sup_norm * volume


def op_compose(k: BandKernel, l: BandKernel) -> BandKernel:
    """
    (k⋆l)(x,y) = Σ_z w(z) k(x,z) l(z,y), with d(k⋆l) = d(k) + d(l).

    The sup of the product is checked against sup|k|·sup|l| times the measure of
    the row support of k (or column support of l), which never exceeds the
    composition_bound.
    """
    _check_same_space(k.space, l.space)
    product = (k.operator_matrix @ l.matrix).tocsr()
    result = BandKernel(k.space, k.propagation + l.propagation, product)

    weights = k.space.weights
    row_measure = (abs(k.matrix).sign() @ weights).max() if k.matrix.nnz else 0.0
    col_measure = (abs(l.matrix).sign().T @ weights).max() if l.matrix.nnz else 0.0
    bound = k.sup_norm * l.sup_norm * min(row_measure, col_measure)
    if result.sup_norm > bound * (1 + 1e-12) + 1e-300:
        raise InvariantViolationError(
            f"composition sup {result.sup_norm} exceeds bound {bound}"
        )
    return result


# ----------------------------------------------------------------------
# Norms
# ----------------------------------------------------------------------


def schur_bound(k: BandKernel) -> float:
    """
    min of the Schur row/column estimate and V(d(k))·sup|k|.

    Both dominate the operator norm on L²(μ).
    """
    if k.matrix.nnz == 0:
        return 0.0
    weights = k.space.weights
    magnitude = abs(k.matrix)
    row = float((magnitude @ weights).max())
    col = float((magnitude.T @ weights).max())
    schur = float(np.sqrt(row * col))
    volume = k.space.max_ball_measure(k.propagation) * k.sup_norm
    return min(schur, volume)


def _dense_norm(block: np.ndarray) -> float:
    if block.size == 0:
        return 0.0
    m, n = block.shape
    if min(m, n) <= 8:
        gram = block @ block.conj().T if m <= n else block.conj().T @ block
        return float(np.sqrt(max(la.eigvalsh(gram)[-1], 0.0)))
    return float(la.svdvals(block)[0])


def _gram_bandwidth(gram: sp.csr_matrix) -> int:
    coo = gram.tocoo()
    return int(np.abs(coo.row - coo.col).max()) if coo.nnz else 0


@dataclass(frozen=True)
class NormOptions:
    """Solver knobs for the operator norm engine."""

    tol: float = DEFAULT_NORM_TOL
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    dense_cap: int = DEFAULT_DENSE_CAP  # largest block side sent to dense SVD
    band_cap: int = DEFAULT_BAND_CAP  # widest Gram band sent to LAPACK band routines

    @classmethod
    def from_settings(cls, settings: Settings) -> "NormOptions":
        """Collect the norm knobs spread over the settings sections."""
        return cls(
            tol=settings.tolerances.norm,
            max_iterations=settings.norm.max_iterations,
            dense_cap=settings.window.dense_cap,
            band_cap=settings.norm.band_cap,
        )


_active_options = NormOptions()


def active_norm_options() -> NormOptions:
    """Options used by norms computed right now."""
    return _active_options


@contextmanager
def norm_options(options: NormOptions) -> Iterator[NormOptions]:
    """Compute every norm inside the block with these options."""
    global _active_options
    previous, _active_options = _active_options, options
    try:
        yield options
    finally:
        _active_options = previous


def matrix_norm(
    matrix: sp.spmatrix,
    tol: Optional[float] = None,
    max_iterations: Optional[int] = None,
    dense_cap: Optional[int] = None,
    band_cap: Optional[int] = None,
) -> float:
    """
    Largest singular value of a (sub)matrix.

    Small blocks go to dense LAPACK. Large blocks use the Gram matrix A^H A:
    banded Gram matrices go to the LAPACK band eigen-solver, others to ARPACK
    with a deterministic start vector. Arguments left as None come from the
    active NormOptions.

    Raises:
        NormConvergenceError: If ARPACK does not converge
    """
    options = _active_options
    tol = options.tol if tol is None else tol
    max_iterations = options.max_iterations if max_iterations is None else max_iterations
    dense_cap = options.dense_cap if dense_cap is None else dense_cap
    band_cap = options.band_cap if band_cap is None else band_cap

    csr = sp.csr_matrix(matrix)
    csr.eliminate_zeros()
    if csr.nnz == 0:
        return 0.0
    # Only rows and columns touching a nonzero entry matter
    used_rows = np.unique(csr.tocoo().row)
    used_cols = np.unique(csr.indices)
    csr = csr[used_rows][:, used_cols]
    m, n = csr.shape
    if min(m, n) <= dense_cap and m * n <= DENSE_ENTRY_CAP:
        return _dense_norm(csr.toarray())

    gram = (csr.conj().T @ csr).tocsr() if n <= m else (csr @ csr.conj().T).tocsr()
    size = gram.shape[0]
    bandwidth = _gram_bandwidth(gram)
    if bandwidth <= band_cap:
        band = np.zeros((bandwidth + 1, size), dtype=gram.dtype)
        coo = sp.triu(gram).tocoo()
        band[bandwidth + coo.row - coo.col, coo.col] = coo.data
        top = la.eig_banded(
            band,
            lower=False,
            eigvals_only=True,
            select="i",
            select_range=(size - 1, size - 1),
        )
        return float(np.sqrt(max(top[-1], 0.0)))

    logger.warning(
        f"operator_norm: falling back to ARPACK on a {size}x{size} Gram matrix "
        f"(bandwidth {bandwidth})"
    )
    start = np.ones(size) / np.sqrt(size)
    try:
        values = eigsh(
            gram,
            k=1,
            which="LA",
            v0=start,
            tol=tol,
            maxiter=max_iterations,
            return_eigenvectors=False,
        )
    except ArpackNoConvergence as e:
        residual = float("nan")
        if len(e.eigenvalues):
            vector = e.eigenvectors[:, 0]
            residual = float(np.linalg.norm(gram @ vector - e.eigenvalues[0] * vector))
        raise NormConvergenceError(
            f"norm iteration did not converge after {max_iterations} iterations",
            residual=residual,
        ) from e
    return float(np.sqrt(max(values[-1], 0.0)))


def operator_norm(k: BandKernel, **options) -> float:
    """‖Op(k)‖ on L²(μ) over the window."""
    return matrix_norm(k.hilbert_matrix, **options)


def block_norm(k: BandKernel, rows: np.ndarray, cols: Optional[np.ndarray] = None) -> float:
    """‖1_R Op(k) 1_C‖ for boolean masks R and C (all columns when C is omitted)."""
    h = k.hilbert_matrix
    rows = np.flatnonzero(rows)
    if len(rows) == 0:
        return 0.0
    sub = h[rows]
    if cols is not None:
        cols = np.flatnonzero(cols)
        if len(cols) == 0:
            return 0.0
        sub = sub[:, cols]
    return matrix_norm(sub)


def local_norm_profile(
    k: BandKernel, r: float, threads: Optional[int] = None
) -> np.ndarray:
    """
    x ↦ ‖1_{B_x(r)} Op(k)‖ for every point.

    Rows are B_x(r); only the columns within B_x(r + d(k)) can be nonzero.
    """
    h = k.hilbert_matrix
    balls = k.space.balls(r)

    def one(i: int) -> float:
        sub = h[balls[i]]
        if sub.nnz == 0:
            return 0.0
        cols = np.unique(sub.indices)
        return _dense_norm(sub[:, cols].toarray())

    return np.asarray(parallel_map(one, range(k.space.size), threads), dtype=float)


def right_norm_profile(
    k: BandKernel, r: float, threads: Optional[int] = None
) -> np.ndarray:
    """x ↦ ‖Op(k) 1_{B_x(r)}‖, computed as the left profile of the adjoint."""
    return local_norm_profile(op_adjoint(k), r, threads)


def _capacity(space: Space, r: float) -> float:
    return greedy_net(space).capacity_bound(r)


def norm_localization_check(k: BandKernel) -> Tuple[float, float]:
    """
    (‖Op(k)‖, N(d(k)+1)^{1/2}·max_x ‖1_{B_x(1)} Op(k)‖) with lhs ≤ rhs.

    Raises:
        InsufficientWindowError: If the window cannot host V(2d(k)+4)
        InvariantViolationError: If lhs exceeds rhs
    """
    lhs = operator_norm(k)
    if k.matrix.nnz == 0:
        return lhs, 0.0
    capacity = _capacity(k.space, k.propagation + 1)
    rhs = float(np.sqrt(capacity) * local_norm_profile(k, 1.0).max())
    if lhs > rhs + 1e-9:
        raise InvariantViolationError(f"localization estimate fails: {lhs} > {rhs}")
    return lhs, rhs


def set_norm_check(k: BandKernel, mask: np.ndarray) -> Tuple[float, float]:
    """
    (‖1_F Op(k)‖, N(d(k)+1)^{1/2}·sup_{x∈F_(1)} ‖1_{B_x(1)} Op(k)‖) with lhs ≤ rhs.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any() or k.matrix.nnz == 0:
        return 0.0, 0.0
    lhs = block_norm(k, mask)
    near = k.space.distance_to_set(mask) <= 1.0 + RADIUS_EPS
    capacity = _capacity(k.space, k.propagation + 1)
    rhs = float(np.sqrt(capacity) * local_norm_profile(k, 1.0)[near].max())
    if lhs > rhs + 1e-9:
        raise InvariantViolationError(f"set localization estimate fails: {lhs} > {rhs}")
    return lhs, rhs


def compactness_tail(k: BandKernel, radii: Sequence[float]) -> np.ndarray:
    """R ↦ ‖Op(k) − 1_{B_o(R)} Op(k)‖ for each R."""
    norms = k.space.norms
    return np.array([block_norm(k, norms > R + RADIUS_EPS) for R in radii])
