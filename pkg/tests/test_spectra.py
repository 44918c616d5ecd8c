"""
Tests for eigenvalue engines, Floquet bands and essential spectra.

Created: 2026-10-19
"""

import numpy as np
import pytest

from coarse_spectra.core.coefficients import Constant, Periodic, Step
from coarse_spectra.core.exceptions import (
    AperiodicError,
    InvalidInputError,
    NonSelfAdjointError,
)
from coarse_spectra.core.filters import DirectionProxy
from coarse_spectra.core.kernels import adjacency_kernel, random_band_kernel
from coarse_spectra.core.localization import AsymptoticOperatorSpec
from coarse_spectra.core.models import Provenance, SpectrumSet
from coarse_spectra.core.space import build_lattice_window
from coarse_spectra.core.spectra import (
    FloquetSymbol,
    default_proxies,
    eig_sym,
    eig_sym_banded,
    ess_spectrum_via_localizations,
    finite_section_spectrum,
    finite_section_sweep,
    floquet_bands,
    hausdorff_gap,
    localization_spectra,
    periodic_window_spectrum,
    symbol_range,
    union_of_spectra,
)

ROOT13 = np.sqrt(13.0)


def _dimer_spec():
    """2-periodic potential (0, 6) with hopping -1."""
    return AsymptoticOperatorSpec(
        dimension=1,
        bands={
            (0,): Periodic(values=(0.0, 6.0)),
            (1,): Constant(-1.0),
            (-1,): Constant(-1.0),
        },
        self_adjoint=True,
        name="dimer",
    )


def _free_plane_spec():
    """4 - discrete Laplacian on Z^2."""
    bands = {(0, 0): Constant(4.0)}
    for offset in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        bands[offset] = Constant(-1.0)
    return AsymptoticOperatorSpec(dimension=2, bands=bands, self_adjoint=True, name="plane")


class TestEigenSolvers:
    """Test the dense and banded self-adjoint solvers."""

    def test_path_graph(self):
        """Test the adjacency of a 5-point path has eigenvalues 2cos(k pi / 6)."""
        values = eig_sym(adjacency_kernel(build_lattice_window(1, 2)))

        expected = np.sort(2 * np.cos(np.arange(1, 6) * np.pi / 6))
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_banded_agrees_with_dense(self, line_window, rng):
        """Test band storage gives the dense spectrum."""
        k = random_band_kernel(line_window, 2.0, rng)
        hermitian = (k.matrix + k.matrix.conj().T) / 2

        np.testing.assert_allclose(eig_sym_banded(hermitian), eig_sym(hermitian), atol=1e-10)

    def test_rejects_non_hermitian(self, line_window, rng):
        """Test non-self-adjoint matrices are refused by both solvers."""
        k = random_band_kernel(line_window, 1.0, rng)

        with pytest.raises(NonSelfAdjointError):
            eig_sym(k)
        with pytest.raises(NonSelfAdjointError):
            eig_sym_banded(k)

    def test_shapes(self):
        """Test empty and non-square input."""
        assert len(eig_sym(np.zeros((0, 0)))) == 0
        with pytest.raises(InvalidInputError, match="square"):
            eig_sym(np.zeros((2, 3)))


class TestFloquet:
    """Test Floquet symbols and bands on Z."""

    def test_free_symbol(self, free_spec):
        """Test h(theta) = 2 - 2cos(theta)."""
        symbol = FloquetSymbol.from_spec(free_spec, 1)

        np.testing.assert_allclose(symbol(np.array([0.0, np.pi])).ravel(), [0.0, 4.0], atol=1e-14)

    def test_free_band(self, free_spec):
        """Test the free operator has spectrum [0, 4]."""
        bands = floquet_bands(free_spec)

        assert len(bands.intervals) == 1
        assert bands.intervals[0] == pytest.approx((0.0, 4.0), abs=1e-9)
        assert bands.provenance == Provenance.FLOQUET

    def test_dimer_bands(self):
        """Test two bands [3 - sqrt13, 0] and [6, 3 + sqrt13]."""
        bands = floquet_bands(_dimer_spec(), period=2)

        assert len(bands.intervals) == 2
        assert bands.intervals[0] == pytest.approx((3 - ROOT13, 0.0), abs=1e-9)
        assert bands.intervals[1] == pytest.approx((6.0, 3 + ROOT13), abs=1e-9)

    def test_ring_eigenvalues_fill_bands(self):
        """Test ring eigenvalues lie in the bands and reach every band edge."""
        bands = floquet_bands(_dimer_spec(), period=2)
        ring = periodic_window_spectrum(_dimer_spec(), cells=50, period=2)

        assert all(bands.contains(value, tol=1e-9) for value in ring.points)
        for edge in (3 - ROOT13, 0.0, 6.0, 3 + ROOT13):
            assert ring.distance(edge) < 1e-9

    def test_errors(self, step_spec):
        """Test wrong dimension, aperiodic and non-self-adjoint operators."""
        one_sided = AsymptoticOperatorSpec(dimension=1, bands={(1,): Constant(1.0)})

        with pytest.raises(InvalidInputError):
            floquet_bands(_free_plane_spec())
        with pytest.raises(AperiodicError):
            floquet_bands(step_spec)
        with pytest.raises(NonSelfAdjointError):
            floquet_bands(one_sided)

    def test_short_ring(self, free_spec):
        """Test rings must be longer than the band width."""
        with pytest.raises(InvalidInputError, match="shorter"):
            periodic_window_spectrum(free_spec, cells=2)


class TestSymbolRange:
    """Test constant-coefficient symbols on Z^d."""

    def test_plane(self):
        """Test 4 - 2cos(t1) - 2cos(t2) ranges over [0, 8]."""
        spectrum = symbol_range(_free_plane_spec())

        assert spectrum.intervals[0] == pytest.approx((0.0, 8.0), abs=1e-9)

    def test_zero_operator(self):
        """Test the zero operator has spectrum {0}."""
        assert symbol_range(AsymptoticOperatorSpec(dimension=2, bands={})).intervals == [(0.0, 0.0)]

    def test_errors(self):
        """Test non-constant and non-real symbols."""
        varying = AsymptoticOperatorSpec(dimension=2, bands={(0, 0): Step(right=1.0)})
        one_sided = AsymptoticOperatorSpec(dimension=2, bands={(1, 0): Constant(1.0)})

        with pytest.raises(AperiodicError):
            symbol_range(varying)
        with pytest.raises(NonSelfAdjointError):
            symbol_range(one_sided)


class TestWindowOracles:
    """Test finite sections and the Hausdorff gap."""

    def test_finite_section(self, free_spec):
        """Test the free finite section has 2N+1 eigenvalues 2 - 2cos(k pi/(2N+2))."""
        section = finite_section_spectrum(free_spec, 50)

        assert int(section.multiplicities.sum()) == 101
        assert section.points.min() == pytest.approx(2 - 2 * np.cos(np.pi / 102))
        assert section.points.max() < 4.0

    def test_finite_section_self_adjoint_tolerance(self):
        """Test a slightly skewed hopping passes only a loose tolerance."""
        spec = AsymptoticOperatorSpec(
            dimension=1, bands={(1,): Constant(-1.0), (-1,): Constant(-1.0 + 1e-6)}
        )

        with pytest.raises(NonSelfAdjointError):
            finite_section_spectrum(spec, 5)
        assert int(finite_section_spectrum(spec, 5, tol=1e-3).multiplicities.sum()) == 11

    def test_finite_section_on_plane(self):
        """Test finite sections on Z^2 stay inside [0, 8]."""
        section = finite_section_spectrum(_free_plane_spec(), 3)

        assert int(section.multiplicities.sum()) == 49
        assert section.points.min() > 0.0 and section.points.max() < 8.0

    def test_hausdorff_gap(self):
        """Test the one-sided gap and the outlier count."""
        reference = SpectrumSet(intervals=[(0.0, 4.0)])
        cloud = SpectrumSet.from_points([0.0, 2.0, 4.5])

        one_sided, outliers = hausdorff_gap(reference, cloud)

        assert one_sided == pytest.approx(1.25, abs=1e-3)
        assert outliers == 1
        assert hausdorff_gap(reference, SpectrumSet())[0] == float("inf")

    def test_sweep_converges(self, free_spec):
        """Test the gap shrinks as the section grows."""
        rows = finite_section_sweep(free_spec, [10, 50], SpectrumSet(intervals=[(0.0, 4.0)]))

        assert [row["N"] for row in rows] == [10, 50]
        assert rows[1]["one_sided"] < rows[0]["one_sided"]
        assert all(row["outliers"] == 0 for row in rows)


class TestEssentialSpectrum:
    """Test the union of localization spectra."""

    def test_default_proxies(self, step_spec, free_spec):
        """Test declared proxies win over the axis directions."""
        assert default_proxies(step_spec) == [DirectionProxy((1,)), DirectionProxy((-1,))]
        assert default_proxies(free_spec) == [DirectionProxy((1,)), DirectionProxy((-1,))]
        assert len(default_proxies(_free_plane_spec())) == 4

    def test_step_operator(self, step_spec):
        """Test the step operator has essential spectrum [0, 4] and [5, 9]."""
        ess = ess_spectrum_via_localizations(step_spec)

        assert len(ess.intervals) == 2
        assert ess.intervals[0] == pytest.approx((0.0, 4.0), abs=1e-9)
        assert ess.intervals[1] == pytest.approx((5.0, 9.0), abs=1e-9)
        assert ess.provenance == Provenance.UNION_OF_LOCALIZATIONS

    def test_localizations(self, step_spec):
        """Test one limit operator and spectrum per proxy."""
        results = localization_spectra(step_spec)

        proxies = [limit.proxy for limit, _ in results]

        assert proxies == [DirectionProxy((1,)), DirectionProxy((-1,))]
        assert results[0][1].intervals[0] == pytest.approx((5.0, 9.0), abs=1e-9)

    def test_limit_options_are_forwarded(self):
        """Test the period cap and horizon reach the limit operators."""
        proxy = DirectionProxy((1,), period=2)

        [(limit, _)] = localization_spectra(_dimer_spec(), [proxy], horizon=40, window=4)
        assert limit.period == 2

        with pytest.raises(AperiodicError, match="no period <= 1"):
            localization_spectra(_dimer_spec(), [proxy], max_period=1)
        with pytest.raises(AperiodicError):
            ess_spectrum_via_localizations(_dimer_spec(), [proxy], max_period=1)

    def test_plane(self):
        """Test constant operators on Z^2 go through the symbol range."""
        ess = ess_spectrum_via_localizations(_free_plane_spec())

        assert len(ess.intervals) == 1
        assert ess.intervals[0] == pytest.approx((0.0, 8.0), abs=1e-9)

    def test_union_grows(self):
        """Test the union includes each of its parts."""
        parts = [
            SpectrumSet(intervals=[(0.0, 1.0)]),
            SpectrumSet(intervals=[(0.5, 2.0)]),
            SpectrumSet(intervals=[(3.0, 4.0)], points=[5.0]),
        ]

        union = union_of_spectra(parts)

        assert union.intervals == [(0.0, 2.0), (3.0, 4.0)]
        assert union.points.tolist() == [5.0]
        assert all(union.includes(part) for part in parts)
