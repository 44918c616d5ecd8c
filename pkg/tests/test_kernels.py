"""
Tests for the controlled-kernel calculus and the norm engine.

Created: 2026-10-19
"""

import logging

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence

from coarse_spectra.config.settings import NormSettings, Settings, ToleranceSettings, WindowSettings
from coarse_spectra.core import kernels
from coarse_spectra.core.coefficients import Decay, Table
from coarse_spectra.core.exceptions import (
    InvalidInputError,
    NormConvergenceError,
    SpaceMismatchError,
)
from coarse_spectra.core.kernels import (
    BandKernel,
    NormOptions,
    Vector,
    adjacency_kernel,
    block_norm,
    compactness_tail,
    composition_bound,
    constant_kernel,
    diagonal_kernel,
    identity_kernel,
    local_norm_profile,
    active_norm_options,
    matrix_norm,
    norm_localization_check,
    norm_options,
    op_adjoint,
    op_apply,
    op_compose,
    operator_norm,
    random_band_kernel,
    right_norm_profile,
    schur_bound,
    set_norm_check,
)
from coarse_spectra.core.space import build_lattice_window
from tests.utils import create_band_kernel, create_kernel_pair, random_weights


class TestBandKernel:
    """Test BandKernel construction and views."""

    def test_rejects_entries_beyond_propagation(self, line_window):
        """Test the propagation constraint is structural."""
        matrix = sp.lil_matrix((line_window.size, line_window.size))
        matrix[0, 2] = 1.0

        with pytest.raises(InvalidInputError, match="beyond propagation"):
            BandKernel(line_window, 1.0, sp.csr_matrix(matrix))

    def test_from_matrix_measures_propagation(self, line_window):
        """Test the propagation is read off the entries when omitted."""
        matrix = sp.lil_matrix((line_window.size, line_window.size))
        matrix[3, 6] = 2.0

        kernel = BandKernel.from_matrix(line_window, matrix)

        assert kernel.propagation == 3.0
        assert kernel.sup_norm == 2.0

    def test_from_offsets_drops_targets_outside(self):
        """Test offsets leaving a truncated window are dropped."""
        space = build_lattice_window(1, 2)
        kernel = BandKernel.from_offsets(space, {(1,): 1.0, (-1,): 1.0})

        assert kernel.propagation == 1.0
        assert kernel.matrix.nnz == 8
        assert kernel.entry(2, 1) == 1.0
        assert kernel.entry(2, -2) == 0.0

    def test_from_offsets_needs_lattice(self, path_graph):
        """Test offset bands need coordinates."""
        with pytest.raises(InvalidInputError, match="lattice window"):
            BandKernel.from_offsets(path_graph, {(1,): 1.0})

    def test_negative_propagation(self, line_window):
        """Test negative propagation is refused."""
        empty = sp.csr_matrix((line_window.size, line_window.size))

        with pytest.raises(InvalidInputError):
            BandKernel(line_window, -1.0, empty)

    def test_identity_kernel_with_weights(self, rng):
        """Test the identity kernel is delta / w and acts as the identity."""
        weights = random_weights(build_lattice_window(1, 5), rng)
        space = build_lattice_window(1, 5, weights=weights)
        f = Vector(space, rng.normal(size=space.size) + 1j * rng.normal(size=space.size))

        result = op_apply(identity_kernel(space), f)

        np.testing.assert_allclose(result.values, f.values, atol=1e-14)

    def test_self_adjoint_flag(self, line_window):
        """Test self-adjointness of symmetric and one-sided kernels."""
        one_sided = create_band_kernel(line_window, {1: Table(values=(1.0,), start=0)})

        assert adjacency_kernel(line_window).is_self_adjoint()
        assert not one_sided.is_self_adjoint()

    def test_algebra(self, line_window):
        """Test sums, scaling and multiplication by functions of position."""
        adjacency = adjacency_kernel(line_window)
        identity = identity_kernel(line_window)
        theta = np.linspace(0.0, 1.0, line_window.size)

        total = adjacency + identity
        assert total.propagation == 1.0
        assert total.entry(0, 0) == 1.0
        assert (total - identity).matrix.nnz == adjacency.matrix.nnz
        assert (-adjacency).entry(0, 1) == -1.0
        assert adjacency.scaled(2.0).sup_norm == 2.0
        assert adjacency.row_scaled(theta).entry(20, 19) == theta[line_window.index(20)]
        assert adjacency.column_scaled(theta).entry(20, 19) == theta[line_window.index(19)]

    def test_restrictions(self, line_window):
        """Test 1_F k and k 1_F."""
        adjacency = adjacency_kernel(line_window)
        F = line_window.norms <= 2

        assert adjacency.restrict_rows(F).entry(3, 4) == 0.0
        assert adjacency.restrict_rows(F).entry(2, 3) == 1.0
        assert adjacency.restrict_columns(F).entry(3, 2) == 1.0
        assert adjacency.restrict_columns(F).entry(2, 3) == 0.0

    def test_space_mismatch(self):
        """Test kernels on different spaces cannot be combined."""
        first = adjacency_kernel(build_lattice_window(1, 3))
        second = adjacency_kernel(build_lattice_window(1, 3))

        with pytest.raises(SpaceMismatchError):
            first + second
        with pytest.raises(SpaceMismatchError):
            op_compose(first, second)


class TestVector:
    """Test vectors on L^2(mu)."""

    def test_length_and_finiteness(self, line_window):
        """Test malformed vectors are refused."""
        with pytest.raises(InvalidInputError):
            Vector(line_window, np.zeros(3))
        values = np.zeros(line_window.size)
        values[0] = np.nan
        with pytest.raises(InvalidInputError):
            Vector(line_window, values)

    def test_weighted_norm(self):
        """Test the norm uses the point masses."""
        space = build_lattice_window(1, 1, weights=[1.0, 4.0, 1.0])
        f = Vector.delta(space, 0)

        assert f.norm() == 2.0


class TestAlgebraIdentities:
    """Test the adjoint and composition identities."""

    def test_adjoint_inner_product(self, rng):
        """Test <Op(k)f, g> = <f, Op(k*)g> on random vectors with random weights."""
        base = build_lattice_window(1, 8)
        space = build_lattice_window(1, 8, weights=random_weights(base, rng))
        k = random_band_kernel(space, 2.0, rng)
        adjoint = op_adjoint(k)

        for _ in range(20):
            f = Vector(space, rng.normal(size=space.size) + 1j * rng.normal(size=space.size))
            g = Vector(space, rng.normal(size=space.size) + 1j * rng.normal(size=space.size))
            lhs = op_apply(k, f).inner(g)
            rhs = f.inner(op_apply(adjoint, g))
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_adjoint_involution(self, square_window, rng):
        """Test (k*)* = k entrywise."""
        k = random_band_kernel(square_window, 2.0, rng)

        twice = op_adjoint(op_adjoint(k))

        assert abs(twice.matrix - k.matrix).max() == 0.0
        assert twice.propagation == k.propagation

    def test_composition_matches_operator_product(self, rng):
        """Test Op(k * l) = Op(k) Op(l) on the window, weights included."""
        base = build_lattice_window(2, 4)
        space = build_lattice_window(2, 4, weights=random_weights(base, rng))
        k, l = create_kernel_pair(space, rng)

        product = op_compose(k, l)
        f = Vector(space, rng.normal(size=space.size) + 1j * rng.normal(size=space.size))

        assert product.propagation == k.propagation + l.propagation
        np.testing.assert_allclose(
            op_apply(product, f).values, op_apply(k, op_apply(l, f)).values, atol=1e-12
        )

    def test_composition_sup_bound(self, line_window, rng):
        """Test sup |k * l| <= sup|k| sup|l| min(V(d(k)), V(d(l)))."""
        k, l = create_kernel_pair(line_window, rng)

        assert op_compose(k, l).sup_norm <= composition_bound(k, l) + 1e-12


class TestNorms:
    """Test Schur bounds and the operator norm engine."""

    def test_all_ones_tridiagonal(self):
        """Test the Schur bound 3 and the true norm 1 + 2cos(pi/(n+1))."""
        space = build_lattice_window(1, 50)
        k = constant_kernel(space, 1.0, 1.0)

        assert schur_bound(k) == 3.0
        assert operator_norm(k) == pytest.approx(1 + 2 * np.cos(np.pi / 102), abs=1e-10)

    def test_adjacency(self):
        """Test the Schur bound 2 and the true norm 2cos(pi/(n+1)) < 2."""
        space = build_lattice_window(1, 50)
        k = adjacency_kernel(space)

        assert schur_bound(k) == 2.0
        assert operator_norm(k) == pytest.approx(2 * np.cos(np.pi / 102), abs=1e-10)
        assert operator_norm(k) < 2.0

    def test_zero_kernel(self, line_window):
        """Test the zero kernel has norm and Schur bound 0."""
        zero = BandKernel(line_window, 0.0, sp.csr_matrix((line_window.size, line_window.size)))

        assert operator_norm(zero) == 0.0
        assert schur_bound(zero) == 0.0

    def test_weighted_diagonal(self):
        """Test the norm of multiplication by a function is its sup with any weights."""
        space = build_lattice_window(1, 2, weights=[1.0, 2.0, 3.0, 4.0, 5.0])
        k = diagonal_kernel(space, [0.5, -3.0, 1.0, 2.0, 0.0])

        assert operator_norm(k) == pytest.approx(3.0, abs=1e-12)

    def test_random_kernels_below_schur(self, square_window, rng):
        """Test ||Op(k)|| <= schur_bound(k) on random kernels."""
        for _ in range(10):
            k = random_band_kernel(square_window, float(rng.integers(1, 4)), rng)
            assert operator_norm(k) <= schur_bound(k) + 1e-9

    def test_banded_gram_path(self):
        """Test windows above the dense cap go through the band solver."""
        space = build_lattice_window(1, 1000)
        k = adjacency_kernel(space)

        assert operator_norm(k) == pytest.approx(2 * np.cos(np.pi / 2002), abs=1e-9)

    def test_arpack_path(self, caplog):
        """Test wide Gram bands fall back to ARPACK with a warning.

        A point potential 5 on top of the adjacency has the isolated bound state sqrt(29).
        """
        space = build_lattice_window(1, 1000)
        potential = np.zeros(space.size)
        potential[space.origin] = 5.0
        k = adjacency_kernel(space) + diagonal_kernel(space, potential)

        with caplog.at_level(logging.WARNING, logger="coarse_spectra.core.kernels"):
            value = matrix_norm(k.hilbert_matrix, band_cap=0)

        assert value == pytest.approx(np.sqrt(29.0), abs=1e-8)
        assert "ARPACK" in caplog.text

    def test_arpack_no_convergence(self, mocker):
        """Test non-convergence surfaces as NormConvergenceError."""
        mocker.patch(
            "coarse_spectra.core.kernels.eigsh",
            side_effect=ArpackNoConvergence("no luck", np.zeros(0), np.zeros((0, 0))),
        )
        k = adjacency_kernel(build_lattice_window(1, 1000))

        with pytest.raises(NormConvergenceError) as info:
            matrix_norm(k.hilbert_matrix, band_cap=0)

        assert info.value.exit_code == 3
        assert np.isnan(info.value.residual)

    def test_block_norm(self, line_window):
        """Test ||1_R Op(k) 1_C|| on masks."""
        k = adjacency_kernel(line_window)
        left = line_window.norms == 0
        right = line_window.mask([1])
        empty = np.zeros(line_window.size, dtype=bool)

        assert block_norm(k, left, right) == pytest.approx(1.0)
        assert block_norm(k, empty) == 0.0
        assert block_norm(k, left, empty) == 0.0


class TestNormOptions:
    """Test solver options applied through the context manager."""

    def test_from_settings(self):
        """Test the knobs are collected from their settings sections."""
        settings = Settings(
            window=WindowSettings(dense_cap=7),
            tolerances=ToleranceSettings(norm=1e-6),
            norm=NormSettings(max_iterations=9, band_cap=3),
        )

        assert NormOptions.from_settings(settings) == NormOptions(
            tol=1e-6, max_iterations=9, dense_cap=7, band_cap=3
        )

    def test_options_steer_solver(self, mocker):
        """Test a scoped band_cap of 0 sends large blocks to ARPACK with the scoped knobs."""
        spy = mocker.spy(kernels, "eigsh")
        k = adjacency_kernel(build_lattice_window(1, 40))

        with norm_options(NormOptions(tol=1e-12, max_iterations=4321, dense_cap=1, band_cap=0)):
            value = operator_norm(k)

        assert value == pytest.approx(2 * np.cos(np.pi / 82), abs=1e-8)
        assert spy.call_args.kwargs["maxiter"] == 4321
        assert spy.call_args.kwargs["tol"] == 1e-12
        assert active_norm_options() == NormOptions()

    def test_arguments_override_options(self, mocker):
        """Test explicit arguments win over the active options."""
        spy = mocker.spy(kernels, "eigsh")
        k = adjacency_kernel(build_lattice_window(1, 40))

        with norm_options(NormOptions(dense_cap=1, band_cap=0)):
            matrix_norm(k.hilbert_matrix, band_cap=64)

        assert spy.call_count == 0

    def test_restored_after_error(self):
        """Test the previous options come back when the block raises."""
        with pytest.raises(RuntimeError):
            with norm_options(NormOptions(band_cap=1)):
                raise RuntimeError("stop")

        assert active_norm_options() == NormOptions()


class TestProfiles:
    """Test localized norm profiles and the localization estimate."""

    def test_identity_profile(self, line_window):
        """Test ||1_{B_x(1)} I|| = 1 everywhere."""
        profile = local_norm_profile(identity_kernel(line_window), 1.0)

        np.testing.assert_allclose(profile, 1.0)

    def test_left_and_right_profiles(self):
        """Test a single entry k(0, 1) = 2 shows up on the rows side and the columns side."""
        space = build_lattice_window(1, 5)
        matrix = sp.lil_matrix((space.size, space.size))
        matrix[space.index(0), space.index(1)] = 2.0
        k = BandKernel.from_matrix(space, matrix)

        left = local_norm_profile(k, 1.0)
        right = right_norm_profile(k, 1.0)

        assert left[space.index(-1)] == pytest.approx(2.0)
        assert left[space.index(2)] == 0.0
        assert right[space.index(2)] == pytest.approx(2.0)
        assert right[space.index(-1)] == 0.0

    def test_localization_estimate(self, line_window):
        """Test ||Op(k)|| <= N(d+1)^{1/2} max ||1_{B_x(1)} Op(k)||."""
        lhs, rhs = norm_localization_check(adjacency_kernel(line_window))

        assert lhs == pytest.approx(2 * np.cos(np.pi / 42))
        assert lhs <= rhs

    def test_set_estimate(self, line_window):
        """Test the set version of the localization estimate."""
        F = line_window.norms >= 10

        lhs, rhs = set_norm_check(adjacency_kernel(line_window), F)

        assert 0 < lhs <= rhs

    def test_compactness_tail(self, line_window):
        """Test the tail norm vanishes beyond the support and decays for decaying potentials."""
        compact = create_band_kernel(line_window, {0: Table(values=(1.0,) * 7, start=-3)})
        decaying = create_band_kernel(line_window, {0: Decay(amplitude=1.0, power=2.0)})

        assert compactness_tail(compact, [3])[0] == 0.0
        tail = compactness_tail(decaying, [0, 4, 9])
        assert tail.tolist() == pytest.approx([1 / 4, 1 / 36, 1 / 121])
