"""
Report data models for coarse-spectra.

Every report converts to a plain dict for JSON output; SpectrumSet also
reads itself back.

Modified: 2026-10-19
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from coarse_spectra.config.settings import DEFAULT_MERGE_TOL
from coarse_spectra.core.exceptions import InvalidInputError


class Provenance(str, Enum):
    """Where a SpectrumSet came from."""

    FLOQUET = "floquet"
    FINITE_SECTION = "finite_section"
    UNION_OF_LOCALIZATIONS = "union_of_localizations"


@dataclass
class SpectrumSet:
    """
    Finite union of closed intervals and isolated points on the real line.

    Intervals are sorted and disjoint; points lie outside every interval.
    """

    intervals: List[Tuple[float, float]] = field(default_factory=list)
    points: np.ndarray = field(default_factory=lambda: np.zeros(0))
    multiplicities: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    provenance: Provenance = Provenance.FINITE_SECTION

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.multiplicities = np.asarray(self.multiplicities, dtype=np.int64)
        if len(self.multiplicities) != len(self.points):
            self.multiplicities = np.ones(len(self.points), dtype=np.int64)
        for lo, hi in self.intervals:
            if lo > hi:
                raise InvalidInputError(f"interval [{lo}, {hi}] is reversed")

    @classmethod
    def from_points(
        cls,
        values: Sequence[float],
        provenance: Provenance = Provenance.FINITE_SECTION,
        tol: float = 1e-12,
    ) -> "SpectrumSet":
        """Group sorted values closer than tol·max(1,|λ|) into points with multiplicities."""
        ordered = np.sort(np.asarray(values, dtype=float))
        points: List[float] = []
        counts: List[int] = []
        for value in ordered:
            if points and abs(value - points[-1]) <= tol * max(1.0, abs(value)):
                counts[-1] += 1
            else:
                points.append(float(value))
                counts.append(1)
        return cls(points=np.array(points), multiplicities=np.array(counts), provenance=provenance)

    @property
    def all_values(self) -> np.ndarray:
        """Point values repeated by multiplicity."""
        return np.repeat(self.points, self.multiplicities)

    def merged(self, tol: float = DEFAULT_MERGE_TOL) -> "SpectrumSet":
        """Merge overlapping intervals and absorb points lying inside them."""
        merged: List[Tuple[float, float]] = []
        for lo, hi in sorted(self.intervals):
            if merged and lo <= merged[-1][1] + tol:
                merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
            else:
                merged.append((float(lo), float(hi)))
        keep = np.array(
            [not any(lo - tol <= p <= hi + tol for lo, hi in merged) for p in self.points],
            dtype=bool,
        )
        return SpectrumSet(
            intervals=merged,
            points=self.points[keep] if len(self.points) else self.points,
            multiplicities=self.multiplicities[keep] if len(self.points) else self.multiplicities,
            provenance=self.provenance,
        )

    def union(
        self, other: "SpectrumSet", tol: float = DEFAULT_MERGE_TOL
    ) -> "SpectrumSet":
        return SpectrumSet(
            intervals=list(self.intervals) + list(other.intervals),
            points=np.concatenate([self.points, other.points]),
            multiplicities=np.concatenate([self.multiplicities, other.multiplicities]),
            provenance=self.provenance,
        ).merged(tol)

    def distance(self, value: float) -> float:
        """Distance from a real number to the set (+inf for the empty set)."""
        best = np.inf
        for lo, hi in self.intervals:
            best = min(best, max(lo - value, 0.0, value - hi))
        if len(self.points):
            best = min(best, float(np.abs(self.points - value).min()))
        return float(best)

    def contains(self, value: float, tol: float = DEFAULT_MERGE_TOL) -> bool:
        return self.distance(value) <= tol

    def includes(self, other: "SpectrumSet", tol: float = DEFAULT_MERGE_TOL) -> bool:
        """True when every interval and point of other lies in this set."""
        for lo, hi in other.intervals:
            if not any(a - tol <= lo and hi <= b + tol for a, b in self.intervals):
                return False
        return all(self.contains(p, tol) for p in other.points)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "intervals": [[lo, hi] for lo, hi in self.intervals],
            "points": self.points.tolist(),
            "multiplicities": self.multiplicities.tolist(),
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectrumSet":
        points = data.get("points", [])
        return cls(
            intervals=[(float(lo), float(hi)) for lo, hi in data.get("intervals", [])],
            points=np.asarray(points, dtype=float),
            multiplicities=np.asarray(data.get("multiplicities", [1] * len(points))),
            provenance=Provenance(data.get("provenance", Provenance.FINITE_SECTION.value)),
        )


@dataclass
class TruncationRow:
    """Measured truncation error against its bound for one witness radius."""

    radius: int
    measured: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.measured / self.bound if self.bound > 0 else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "R": self.radius,
            "measured": self.measured,
            "bound": self.bound,
            "ratio": self.ratio,
        }


@dataclass
class CertificateEntry:
    """One (scale, r) check of a coarseness certificate."""

    scale: float
    r: int
    passed: bool
    witness_scale: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "r": self.r,
            "passed": self.passed,
            "witness_scale": self.witness_scale,
        }


@dataclass
class CertificateReport:
    """Finite-window coarseness certificate of a filter family."""

    filter_kind: str
    r_max: int
    entries: List[CertificateEntry] = field(default_factory=list)
    edge_as_complement: bool = False

    @property
    def passed(self) -> bool:
        return bool(self.entries) and all(entry.passed for entry in self.entries)

    @property
    def first_failure(self) -> Optional[CertificateEntry]:
        return next((entry for entry in self.entries if not entry.passed), None)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "filter": self.filter_kind,
            "r_max": self.r_max,
            "edge_as_complement": self.edge_as_complement,
            "passed": self.passed,
            "entries": [entry.to_dict() for entry in self.entries],
        }


@dataclass
class GhostCurve:
    """Decay curve horizon ↦ sup_{|x| ≥ horizon} ‖1_{B_x(r)}T‖ for one radius."""

    radius: float
    horizons: List[float]
    values: List[float]
    right_values: List[float] = field(default_factory=list)

    @property
    def final(self) -> float:
        return self.values[-1] if self.values else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "r": self.radius,
            "horizons": self.horizons,
            "values": self.values,
            "right_values": self.right_values,
        }


@dataclass
class GhostReport:
    """Ghost-ideal diagnostics for an operator."""

    radii: List[float]
    tol: float
    curves: List[GhostCurve]
    verdict: bool
    r1_verdict: bool
    capacity_consistent: Optional[bool] = None
    parameters: Dict[str, Any] = field(default_factory=dict)

    def curve(self, r: float) -> GhostCurve:
        for curve in self.curves:
            if curve.radius == r:
                return curve
        raise KeyError(r)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radii": self.radii,
            "tol": self.tol,
            "verdict": self.verdict,
            "r1_verdict": self.r1_verdict,
            "capacity_consistent": self.capacity_consistent,
            "curves": [curve.to_dict() for curve in self.curves],
            "parameters": self.parameters,
        }


@dataclass
class DefectResult:
    """Left and right filter defects min_F ‖1_F T‖ and min_F ‖T 1_F‖."""

    left: float
    right: float
    scales: List[float]
    left_by_scale: List[float]
    right_by_scale: List[float]
    window_bias: float = 0.0

    @property
    def asymmetry(self) -> float:
        return abs(self.left - self.right)

    @property
    def value(self) -> float:
        return self.left

    def to_dict(self) -> Dict[str, Any]:
        return {
            "left": self.left,
            "right": self.right,
            "asymmetry": self.asymmetry,
            "window_bias": self.window_bias,
            "scales": self.scales,
            "left_by_scale": self.left_by_scale,
            "right_by_scale": self.right_by_scale,
        }


@dataclass
class BallCriterionResult:
    """Localized ball profile along a filter or proxy tail."""

    verdict: bool
    tol: float
    values: Dict[float, float] = field(default_factory=dict)
    horizons: Dict[float, int] = field(default_factory=dict)  # proxy index where each sup starts

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "values": {str(r): v for r, v in self.values.items()},
            "horizons": {str(r): n for r, n in self.horizons.items()},
        }


@dataclass
class LimitResult:
    """Outcome of a Cauchy test along a direction proxy."""

    value: Optional[complex]
    amplitude: float
    samples: List[complex] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.value is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "converged": self.converged,
            "value": self.value,
            "amplitude": self.amplitude,
        }


@dataclass
class ConvergenceCurve:
    """Local-topology distance between translates and a limit operator."""

    ns: List[int]
    values: List[float]
    tol: float

    @property
    def monotone(self) -> bool:
        return all(b <= a + self.tol for a, b in zip(self.values, self.values[1:]))

    @property
    def converged(self) -> bool:
        return bool(self.values) and self.values[-1] < self.tol

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.ns,
            "values": self.values,
            "monotone": self.monotone,
            "converged": self.converged,
        }
