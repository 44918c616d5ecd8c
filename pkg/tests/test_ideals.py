"""
Tests for ghost and filter ideal diagnostics.

Created: 2026-10-19
"""

import numpy as np
import pytest

from coarse_spectra.core.coefficients import Constant, Decay, Step, Table
from coarse_spectra.core.exceptions import (
    FactorizationDepthError,
    HorizonExhaustedError,
    InvalidInputError,
    WindowCapError,
)
from coarse_spectra.core.filters import DirectionProxy, Frechet, HalfSpace
from coarse_spectra.core.ideals import (
    GapRule,
    ball_entry_criterion,
    build_hls,
    discrete_entry_criterion,
    factor_through_ideal,
    ghost_report,
    jxi_defect,
    localization_ball_criterion,
)
from coarse_spectra.core.kernels import adjacency_kernel, identity_kernel, op_apply
from coarse_spectra.core.space import build_lattice_window
from tests.utils import (
    LIBRARY_SCALES,
    coarse_filter_library,
    create_band_kernel,
    operator_library,
)


class TestGhostReport:
    """Test decay curves and the ghost verdict."""

    def test_finite_rank_operator_is_ghost(self, line_window):
        """Test a point mass at the origin vanishes at infinity."""
        delta = create_band_kernel(line_window, {0: Table(values=(1.0,), start=0)})

        report = ghost_report(delta, [1, 2])

        assert report.verdict and report.r1_verdict
        assert report.curve(2.0).values[0] == pytest.approx(1.0)
        assert report.curve(2.0).final == 0.0
        assert report.capacity_consistent is True

    def test_identity_is_not_ghost(self, line_window):
        """Test the identity keeps profile 1 on every interior point."""
        report = ghost_report(identity_kernel(line_window), [1])

        assert not report.verdict
        assert report.curve(1.0).values == pytest.approx([1.0] * len(report.curve(1.0).values))
        assert report.parameters == {"points": 41, "max_norm": 20.0}

    def test_right_profile_of_one_sided_shift(self, line_window):
        """Test left and right curves are both reported."""
        shift = create_band_kernel(line_window, {1: Constant(1.0)})

        curve = ghost_report(shift, [1]).curve(1.0)

        assert len(curve.right_values) == len(curve.values)
        assert curve.right_values[0] == pytest.approx(1.0)

    def test_hls_projection_curve(self, small_hls):
        """Test the r = 1 profile of the HLS projection on sizes 1, 2, 3."""
        _, projection = small_hls

        curve = ghost_report(projection.kernel, [1]).curve(1.0)

        assert curve.values[0] == pytest.approx(1.0)
        assert curve.final == pytest.approx(np.sqrt(2) / 3)

    def test_hls_curve_decays(self):
        """Test the HLS tail value falls like sqrt(2)/v_n."""
        _, projection = build_hls(range(1, 9))

        curve = ghost_report(projection.kernel, [1]).curve(1.0)

        assert curve.final == pytest.approx(np.sqrt(2) / 8)
        assert all(a >= b for a, b in zip(curve.values, curve.values[1:]))

    def test_only_requested_curves(self, line_window):
        """Test the r = 1 curve is used for the verdict but not listed unless asked."""
        report = ghost_report(identity_kernel(line_window), [2])

        assert report.radii == [2.0]
        assert report.curve(2.0).radius == 2.0
        with pytest.raises(KeyError):
            report.curve(1.0)

    def test_invalid_radii(self, line_window):
        """Test radii must be positive."""
        with pytest.raises(InvalidInputError, match="positive"):
            ghost_report(identity_kernel(line_window), [0])
        with pytest.raises(InvalidInputError):
            ghost_report(identity_kernel(line_window), [])


class TestHLSProjection:
    """Test the block projection on separated components."""

    def test_layout(self, small_hls):
        """Test components of 1, 4 and 9 points separated by gaps 2 and 3."""
        space, projection = small_hls

        assert space.size == 14
        assert [int(c) for c in space.coords[:, 0]] == [0, 2, 3, 4, 5] + list(range(8, 17))
        assert projection.component_of().tolist() == [1] + [2] * 4 + [3] * 9
        assert projection.kernel.propagation == 8.0

    def test_trace_and_rank(self, small_hls):
        """Test trace = rank = number of components."""
        _, projection = small_hls

        assert projection.trace == pytest.approx(3.0)
        assert projection.rank == 3
        assert projection.to_dict()["points"] == 14

    def test_flat_vectors_are_fixed(self, small_hls):
        """Test pi e_n = e_n and ||e_n|| = 1."""
        _, projection = small_hls

        for n in (1, 2, 3):
            e = projection.flat_vector(n)
            assert e.norm() == pytest.approx(1.0)
            np.testing.assert_allclose(op_apply(projection.kernel, e).values, e.values)

    def test_gap_rule(self):
        """Test g_n = ceil(n * scale) + 1."""
        assert GapRule().gap(1) == 2
        assert GapRule(scale=0.5).gap(3) == 3
        assert GapRule(scale=2.0).to_dict() == {"scale": 2.0}

    def test_gap_rule_spreads_components(self):
        """Test a wider rule moves the second component."""
        space, _ = build_hls([1, 1], gap_rule=GapRule(scale=4.0))

        assert [int(c) for c in space.coords[:, 0]] == [0, 5]

    def test_invalid_sizes(self):
        """Test empty, non-positive, decreasing and oversized inputs."""
        with pytest.raises(InvalidInputError, match="positive"):
            build_hls([])
        with pytest.raises(InvalidInputError, match="positive"):
            build_hls([0, 1])
        with pytest.raises(InvalidInputError, match="non-decreasing"):
            build_hls([2, 1])
        with pytest.raises(WindowCapError) as excinfo:
            build_hls([1, 2, 3], max_points=10)
        assert excinfo.value.size == 14


class TestFilterDefects:
    """Test left and right defects along coarse filters."""

    def test_rejects_proxies(self, line_window):
        """Test direction proxies are not coarse filters."""
        with pytest.raises(InvalidInputError, match="coarse filter"):
            jxi_defect(identity_kernel(line_window), DirectionProxy((1,)))

    def test_identity_along_frechet(self, line_window):
        """Test the identity has defect 1 on both sides."""
        result = jxi_defect(identity_kernel(line_window), Frechet())

        assert result.left == pytest.approx(1.0)
        assert result.right == pytest.approx(1.0)
        assert result.window_bias == 0.0

    def test_one_sided_potential(self, line_window):
        """Test a potential supported on x >= 5 vanishes along the left half-line only."""
        k = create_band_kernel(line_window, {0: Step(left=0.0, right=1.0, at=5)})

        assert jxi_defect(k, HalfSpace((-1,))).left == 0.0
        assert jxi_defect(k, HalfSpace((1,))).left == pytest.approx(1.0)
        assert jxi_defect(k, Frechet()).left == pytest.approx(1.0)

    def test_window_bias(self, line_window):
        """Test the bias of the adjacency on the edge band {-20, 20}."""
        result = jxi_defect(adjacency_kernel(line_window), Frechet())

        assert result.window_bias == pytest.approx(2.0)
        assert result.asymmetry == pytest.approx(0.0, abs=1e-9)

    def test_generators_outside_window(self, line_window):
        """Test scales beyond the window raise."""
        with pytest.raises(HorizonExhaustedError):
            jxi_defect(identity_kernel(line_window), Frechet(), scales=[100.0])


class TestBallCriteria:
    """Test ball profiles and entry criteria."""

    def test_proxy_values(self, line_window):
        """Test the sup of the profile along the far half of a proxy tail."""
        k = create_band_kernel(line_window, {0: Step(left=0.0, right=1.0, at=5)})

        right = localization_ball_criterion(k, DirectionProxy((1,)), [1])
        left = localization_ball_criterion(k, DirectionProxy((-1,)), [1])

        assert right.values[1.0] == pytest.approx(1.0)
        assert not right.verdict
        assert left.values[1.0] == 0.0 and left.verdict

    def test_proxy_sup_covers_the_tail(self, line_window):
        """Test a bump in the middle of the tail fails the criterion past the default horizon."""
        bump = create_band_kernel(line_window, {0: Table(values=(1.0,), start=12)})
        proxy = DirectionProxy((1,))

        default = localization_ball_criterion(bump, proxy, [1])
        late = localization_ball_criterion(bump, proxy, [1], horizon=15)

        assert default.values[1.0] == pytest.approx(1.0)
        assert not default.verdict
        assert default.horizons[1.0] <= 12
        assert late.values[1.0] == 0.0 and late.verdict
        assert late.horizons == {1.0: 15}

    def test_compact_operator_along_proxy(self, line_window):
        """Test a point mass at the origin vanishes along both proxies."""
        delta = create_band_kernel(line_window, {0: Table(values=(1.0,), start=0)})

        for direction in ((1,), (-1,)):
            assert localization_ball_criterion(delta, DirectionProxy(direction), [1, 2]).verdict

    def test_proxy_beyond_window(self, line_window):
        """Test a horizon past the window raises."""
        with pytest.raises(HorizonExhaustedError):
            localization_ball_criterion(
                identity_kernel(line_window), DirectionProxy((1,)), [1], horizon=50
            )

    def test_coarse_filter_values(self, line_window):
        """Test a point mass vanishes along the Frechet filter."""
        delta = create_band_kernel(line_window, {0: Table(values=(1.0,), start=0)})

        result = localization_ball_criterion(delta, Frechet(), [1, 2])

        assert result.verdict
        assert result.values == {1.0: 0.0, 2.0: 0.0}

    def test_entry_criterion_needs_counting_measure(self):
        """Test weighted windows are refused."""
        space = build_lattice_window(1, 1, weights=[1.0, 2.0, 1.0])

        with pytest.raises(InvalidInputError, match="counting measure"):
            discrete_entry_criterion(identity_kernel(space), Frechet())

    def test_entry_criteria(self, line_window):
        """Test entries of the shift and of a point mass."""
        shift = create_band_kernel(line_window, {1: Constant(1.0)})
        delta = create_band_kernel(line_window, {0: Table(values=(1.0,), start=0)})

        assert discrete_entry_criterion(shift, Frechet()) == pytest.approx(1.0)
        assert discrete_entry_criterion(delta, Frechet()) == 0.0
        assert ball_entry_criterion(shift, Frechet(), 1.0) == pytest.approx(1.0)
        assert ball_entry_criterion(delta, Frechet(), 1.0) == 0.0

    def test_library_verdicts_agree(self):
        """Test defect, ball and entry verdicts agree on the operator library."""
        verdicts = {}
        for name, k in operator_library():
            for label, xi in coarse_filter_library().items():
                defect = jxi_defect(k, xi, scales=LIBRARY_SCALES).left < 1e-3
                ball = localization_ball_criterion(k, xi, [1], scales=LIBRARY_SCALES).verdict
                entry = discrete_entry_criterion(k, xi, LIBRARY_SCALES) < 1e-3
                assert defect == ball == entry, (name, label)
                verdicts[name, label] = defect

        assert verdicts["far potential", "left"]
        assert not verdicts["far potential", "right"]
        assert verdicts["two deltas", "frechet"]
        assert not verdicts["alternating potential", "obstacle"]
        assert verdicts["tiny adjacency", "frechet"]


class TestFactorization:
    """Test T = phi(Q) S through nested generators."""

    def test_decaying_potential(self, line_window):
        """Test a cubic decay reaches depth 3 along the Frechet filter."""
        k = create_band_kernel(line_window, {0: Decay(amplitude=1.0, power=3.0)})

        factorization = factor_through_ideal(k, Frechet(), depth=3)

        assert factorization.depth == 3
        assert factorization.residual <= 1e-10
        assert all(b <= 1.0 / m + 1e-12 for m, b in enumerate(factorization.phi_bounds(), 1))
        assert all(d <= 1.0 / (n * n) for n, d in enumerate(factorization.defects, 1))
        for outer, inner in zip(factorization.outer_sets, factorization.inner_sets):
            assert np.all(outer[inner])
        assert factorization.to_dict()["outer_sizes"] == [38, 36, 34]

    def test_depth_zero(self, line_window):
        """Test depth 0 gives phi = 1 and S = T."""
        factorization = factor_through_ideal(identity_kernel(line_window), Frechet(), depth=0)

        assert factorization.depth == 0
        assert np.all(factorization.phi == 1.0)
        assert factorization.residual == 0.0

    def test_unattainable_schedule(self, line_window):
        """Test a constant potential stops after the first level."""
        k = create_band_kernel(line_window, {0: Constant(0.5)})

        with pytest.raises(FactorizationDepthError) as excinfo:
            factor_through_ideal(k, Frechet(), depth=2)

        assert excinfo.value.achieved_depth == 1
        assert excinfo.value.partial.depth == 1
        assert excinfo.value.exit_code == 3

    def test_custom_schedule(self, line_window):
        """Test a schedule below the operator norm fails at once."""
        k = create_band_kernel(line_window, {0: Constant(0.5)})

        with pytest.raises(FactorizationDepthError) as excinfo:
            factor_through_ideal(k, Frechet(), depth=1, schedule=lambda n: 0.25)

        assert excinfo.value.achieved_depth == 0

    def test_negative_depth(self, line_window):
        """Test depth must be nonnegative."""
        with pytest.raises(InvalidInputError):
            factor_through_ideal(identity_kernel(line_window), Frechet(), depth=-1)
