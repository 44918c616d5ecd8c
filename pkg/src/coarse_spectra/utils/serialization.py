"""
JSON and CSV output helpers.

Reports are written with sorted keys so repeated runs produce identical
bytes. Floats are written with 17 significant digits; non-finite values become
the strings "inf", "-inf" and "nan"; complex numbers become [re, im].

Modified: 2026-10-19
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np


def to_jsonable(value: Any) -> Any:
    """Recursively convert reports, numpy values and complex numbers to JSON types."""
    if hasattr(value, "to_dict") and callable(value.to_dict):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        value = complex(value)
        if value.imag == 0:
            return to_jsonable(value.real)
        return [to_jsonable(value.real), to_jsonable(value.imag)]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def format_float(value: float) -> str:
    """17 significant digits, always readable back as a float."""
    text = format(value, ".17g")
    if not any(c in text for c in ".e"):
        text += ".0"
    return text


def _encode(value: Any, indent: int, depth: int) -> str:
    pad = "\n" + " " * (indent * (depth + 1))
    end = "\n" + " " * (indent * depth)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{json.dumps(k)}: {_encode(value[k], indent, depth + 1)}" for k in sorted(value)
        ]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        items = [_encode(v, indent, depth + 1) for v in value]
        return "[" + pad + ("," + pad).join(items) + end + "]"
    if isinstance(value, float):
        return format_float(value)
    return json.dumps(value)


def dumps(value: Any, indent: int = 2) -> str:
    """Deterministic JSON text of a report."""
    return _encode(to_jsonable(value), indent, 0)


def write_json(value: Any, path: Path, indent: int = 2) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(value, indent) + "\n", encoding="utf-8")


def write_csv(
    path: Path,
    header: Sequence[str],
    rows: Iterable[Sequence[Any]],
    precision: int = 17,
    comment: Optional[str] = None,
) -> int:
    """
    Write numeric rows; floats use `precision` significant digits.

    Returns:
        Number of data rows written
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="", encoding="utf-8") as handle:
        if comment:
            handle.write(f"# {comment}\n")
        writer = csv.writer(handle)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [f"{v:.{precision}g}" if isinstance(v, (float, np.floating)) else v for v in row]
            )
            count += 1
    return count
