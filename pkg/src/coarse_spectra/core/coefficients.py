"""
Closed-form coefficient functions c: ℤ^d → ℂ for band operators.

Every coefficient is a callable on an integer coordinate array of shape
(m, d) returning m values, so it can be sampled on a window or far out
along a direction proxy.

Modified: 2026-10-19
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from coarse_spectra.core.exceptions import SpecFormatError

Scalar = Union[int, float, complex]


class Coefficient(ABC):
    """Coefficient function evaluated on coordinate rows."""

    @abstractmethod
    def __call__(self, coords: np.ndarray) -> np.ndarray:
        """Values at each row of coords."""

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """JSON form."""

    def at(self, x: Sequence[int]) -> complex:
        return complex(self(np.asarray([x], dtype=np.int64))[0])

    def shifted(self, a: Sequence[int]) -> "Coefficient":
        """x ↦ c(x + a)."""
        if not any(a):
            return self
        return Shifted(self, tuple(int(c) for c in a))

    def conjugate(self) -> "Coefficient":
        return Conjugate(self)


def _rows(coords: np.ndarray) -> np.ndarray:
    array = np.asarray(coords, dtype=np.int64)
    return array[:, None] if array.ndim == 1 else array


def _encode(value: complex) -> Any:
    value = complex(value)
    return value.real if value.imag == 0 else [value.real, value.imag]


def _decode(value: Any) -> Scalar:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise SpecFormatError(f"complex values are [re, im], got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return value
    raise SpecFormatError(f"expected a number, got {value!r}")


def _typed(values: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(values) and np.all(values.imag == 0):
        return values.real
    return values


@dataclass(frozen=True)
class Constant(Coefficient):
    value: Scalar = 0.0

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        return _typed(np.full(len(_rows(coords)), self.value))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "constant", "value": _encode(self.value)}


@dataclass(frozen=True)
class Step(Coefficient):
    """left for x[axis] < at, right for x[axis] ≥ at."""

    left: Scalar = 0.0
    right: Scalar = 0.0
    axis: int = 0
    at: int = 0

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        x = _rows(coords)[:, self.axis]
        return _typed(np.where(x >= self.at, complex(self.right), complex(self.left)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "step",
            "left": _encode(self.left),
            "right": _encode(self.right),
            "axis": self.axis,
            "at": self.at,
        }


@dataclass(frozen=True)
class Periodic(Coefficient):
    """values[(x[axis] − offset) mod p] with p = len(values)."""

    values: Tuple[Scalar, ...]
    axis: int = 0
    offset: int = 0

    def __post_init__(self) -> None:
        if not self.values:
            raise SpecFormatError("periodic coefficient needs at least one value")

    @property
    def period(self) -> int:
        return len(self.values)

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        x = _rows(coords)[:, self.axis]
        table = np.asarray(self.values)
        return _typed(table[np.mod(x - self.offset, self.period)].astype(complex))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "periodic",
            "values": [_encode(v) for v in self.values],
            "axis": self.axis,
            "offset": self.offset,
        }


@dataclass(frozen=True)
class Decay(Coefficient):
    """background + amplitude / (1 + |x − center|₁)^power."""

    amplitude: Scalar = 1.0
    power: float = 1.0
    background: Scalar = 0.0
    center: Tuple[int, ...] = ()

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        x = _rows(coords)
        if self.center:
            x = x - np.asarray(self.center, dtype=np.int64)
        radius = np.abs(x).sum(axis=1).astype(float)
        return _typed(
            complex(self.background) + complex(self.amplitude) / (1.0 + radius) ** self.power
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "decay",
            "amplitude": _encode(self.amplitude),
            "power": self.power,
            "background": _encode(self.background),
            "center": list(self.center),
        }


@dataclass(frozen=True)
class Table(Coefficient):
    """values[x[axis] − start] on the listed range, fill elsewhere."""

    values: Tuple[Scalar, ...]
    start: int = 0
    fill: Scalar = 0.0
    axis: int = 0

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        position = _rows(coords)[:, self.axis] - self.start
        inside = (position >= 0) & (position < len(self.values))
        out = np.full(len(position), complex(self.fill))
        if self.values:
            out[inside] = np.asarray(self.values, dtype=complex)[position[inside]]
        return _typed(out)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": "table",
            "values": [_encode(v) for v in self.values],
            "start": self.start,
            "fill": _encode(self.fill),
            "axis": self.axis,
        }


@dataclass(frozen=True)
class Sum(Coefficient):
    terms: Tuple[Coefficient, ...]

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        total = np.zeros(len(_rows(coords)), dtype=complex)
        for term in self.terms:
            total = total + term(coords)
        return _typed(total)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "sum", "terms": [t.to_dict() for t in self.terms]}


@dataclass(frozen=True)
class Product(Coefficient):
    factors: Tuple[Coefficient, ...]

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        total = np.ones(len(_rows(coords)), dtype=complex)
        for factor in self.factors:
            total = total * factor(coords)
        return _typed(total)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "product", "factors": [f.to_dict() for f in self.factors]}


@dataclass(frozen=True)
class Shifted(Coefficient):
    """x ↦ base(x + shift)."""

    base: Coefficient
    shift: Tuple[int, ...]

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        return self.base(_rows(coords) + np.asarray(self.shift, dtype=np.int64))

    def shifted(self, a: Sequence[int]) -> Coefficient:
        total = tuple(s + int(c) for s, c in zip(self.shift, a))
        return self.base if not any(total) else Shifted(self.base, total)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "shifted", "base": self.base.to_dict(), "shift": list(self.shift)}


@dataclass(frozen=True)
class Conjugate(Coefficient):
    base: Coefficient

    def __call__(self, coords: np.ndarray) -> np.ndarray:
        return np.conj(self.base(coords))

    def conjugate(self) -> Coefficient:
        return self.base

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "conjugate", "base": self.base.to_dict()}


def coefficient_from_dict(data: Union[Dict[str, Any], int, float, list]) -> Coefficient:
    """
    Build a coefficient from its JSON form.

    A bare number (or [re, im]) is a constant. Otherwise {kind, ...} with the
    parameters either inline or under "params".

    Raises:
        SpecFormatError: On unknown kinds or malformed parameters
    """
    if not isinstance(data, dict):
        return Constant(_decode(data))
    params = dict(data.get("params", {}))
    params.update({k: v for k, v in data.items() if k not in ("kind", "params")})
    kind = str(data.get("kind", "constant")).lower()
    try:
        if kind == "constant":
            return Constant(_decode(params.get("value", 0.0)))
        if kind == "step":
            return Step(
                left=_decode(params.get("left", 0.0)),
                right=_decode(params.get("right", 0.0)),
                axis=int(params.get("axis", 0)),
                at=int(params.get("at", 0)),
            )
        if kind == "periodic":
            return Periodic(
                values=tuple(_decode(v) for v in params["values"]),
                axis=int(params.get("axis", 0)),
                offset=int(params.get("offset", 0)),
            )
        if kind == "decay":
            center = params.get("center", [])
            return Decay(
                amplitude=_decode(params.get("amplitude", 1.0)),
                power=float(params.get("power", 1.0)),
                background=_decode(params.get("background", 0.0)),
                center=tuple(int(c) for c in (center if isinstance(center, list) else [center])),
            )
        if kind == "table":
            return Table(
                values=tuple(_decode(v) for v in params["values"]),
                start=int(params.get("start", 0)),
                fill=_decode(params.get("fill", 0.0)),
                axis=int(params.get("axis", 0)),
            )
        if kind == "sum":
            return Sum(tuple(coefficient_from_dict(t) for t in params["terms"]))
        if kind == "product":
            return Product(tuple(coefficient_from_dict(f) for f in params["factors"]))
        if kind == "shifted":
            shift = params["shift"]
            return Shifted(
                coefficient_from_dict(params["base"]),
                tuple(int(c) for c in (shift if isinstance(shift, list) else [shift])),
            )
        if kind == "conjugate":
            return Conjugate(coefficient_from_dict(params["base"]))
    except (KeyError, TypeError, ValueError) as e:
        raise SpecFormatError(f"malformed {kind} coefficient: {e}") from e
    raise SpecFormatError(f"unknown coefficient kind '{kind}'")
