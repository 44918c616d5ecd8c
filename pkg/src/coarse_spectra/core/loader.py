"""Document loading for coarse-spectra.

Turns JSON input documents into spaces, kernels, operator specs, witnesses
and filters. A document looks like

    {"space": {...}, "operator": {...}, "witness": {...}, "filters": [...]}

where every key except "space" or "operator" is optional.

Modified: 2026-10-19
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.sparse as sp

from coarse_spectra.config.settings import Settings
from coarse_spectra.core.exceptions import InvalidInputError, SpecFormatError
from coarse_spectra.core.filters import FilterSpec, filter_from_dict
from coarse_spectra.core.ideals import GapRule, HLSProjection, build_hls
from coarse_spectra.core.kernels import (
    BandKernel,
    adjacency_kernel,
    constant_kernel,
    identity_kernel,
)
from coarse_spectra.core.localization import AsymptoticOperatorSpec, spec_from_dict
from coarse_spectra.core.property_a import WitnessA, witness_from_dict
from coarse_spectra.core.space import (
    Space,
    build_graph_space,
    build_lattice_window,
    build_subset_space,
)

logger = logging.getLogger(__name__)


@dataclass
class Document:
    """Everything a command may need from one input document."""

    source: Optional[Path] = None
    space: Optional[Space] = None
    spec: Optional[AsymptoticOperatorSpec] = None
    kernel: Optional[BandKernel] = None
    hls: Optional[HLSProjection] = None
    witness: Optional[WitnessA] = None
    filters: List[FilterSpec] = field(default_factory=list)
    raw: Dict[str, Any] = field(default_factory=dict)

    def require_kernel(self) -> BandKernel:
        if self.kernel is None:
            raise InvalidInputError("document does not define an operator on a space")
        return self.kernel

    def require_spec(self) -> AsymptoticOperatorSpec:
        if self.spec is None:
            raise InvalidInputError("document does not define an operator spec with bands")
        return self.spec


class DocumentLoader:
    """Builds spaces and operators from JSON documents under the configured caps."""

    def __init__(self, settings: Settings):
        """Initialize loader.

        Args:
            settings: Application settings (window caps)
        """
        self.settings = settings

    def read(self, path: Path) -> Dict[str, Any]:
        """Parse a JSON file.

        Raises:
            SpecFormatError: If the file is missing or not valid JSON
        """
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError as e:
            raise SpecFormatError(f"spec file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise SpecFormatError(f"{path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise SpecFormatError(f"{path} must hold a JSON object")
        return data

    def load(
        self, path: Path, window: Optional[int] = None, gap_scale: Optional[float] = None
    ) -> Document:
        """Read and build a document.

        Args:
            path: JSON document
            window: Override for the lattice window radius W
            gap_scale: HLS gap scale used when the document sets no gap_rule

        Returns:
            Document
        """
        document = self.build(self.read(path), window, gap_scale)
        document.source = Path(path)
        logger.info(f"Loaded {path}")
        return document

    def build(
        self,
        data: Dict[str, Any],
        window: Optional[int] = None,
        gap_scale: Optional[float] = None,
    ) -> Document:
        document = Document(raw=data)
        operator = data.get("operator")
        if data.get("bands") is not None and operator is None:
            operator = data

        if isinstance(operator, dict) and str(operator.get("kind", "")).lower() == "hls":
            document.space, document.hls = self.build_hls(operator, gap_scale)
            document.kernel = document.hls.kernel
        else:
            if isinstance(operator, dict) and "bands" in operator:
                document.spec = spec_from_dict(operator)
            space_data = data.get("space")
            if space_data is None and document.spec is not None and window is not None:
                space_data = {"kind": "lattice", "d": document.spec.dimension, "W": window}
            if space_data is not None:
                document.space = self.build_space(space_data, window)
            if operator is not None and document.space is not None:
                document.kernel = self.build_kernel(operator, document.space, document.spec)

        if "witness" in data:
            if document.space is None:
                raise SpecFormatError("a witness needs a space")
            document.witness = witness_from_dict(document.space, data["witness"])
        document.filters = [filter_from_dict(item) for item in data.get("filters", [])]
        return document

    def build_space(self, data: Dict[str, Any], window: Optional[int] = None) -> Space:
        """Build a space from {kind: lattice|graph|subset, ...}."""
        kind = str(data.get("kind", "lattice")).lower()
        weights = data.get("weights")
        try:
            if kind == "lattice":
                return build_lattice_window(
                    int(data.get("d", 1)),
                    int(window if window is not None else data["W"]),
                    data.get("boundary", "truncate"),
                    weights=weights,
                    max_points=self.settings.window.max_points,
                )
            if kind == "graph":
                return build_graph_space(
                    [tuple(_hashable(v) for v in edge) for edge in data["edges"]],
                    nodes=[_hashable(v) for v in data["nodes"]] if "nodes" in data else None,
                    weights=weights,
                    max_points=self.settings.window.max_graph_points,
                )
            if kind == "subset":
                return build_subset_space(
                    data["coords"], weights=weights, max_points=self.settings.window.max_points
                )
        except (KeyError, TypeError) as e:
            raise SpecFormatError(f"malformed {kind} space: {e}") from e
        except ValueError as e:
            raise SpecFormatError(f"bad value in {kind} space: {e}") from e
        raise SpecFormatError(f"unknown space kind '{kind}'")

    def build_hls(self, data: Dict[str, Any], default_scale: Optional[float] = None):
        sizes = data.get("sizes")
        if not sizes:
            raise SpecFormatError("HLS operator needs 'sizes'")
        fallback = 1.0 if default_scale is None else default_scale
        rule = data.get("gap_rule", {})
        scale = rule.get("scale", fallback) if isinstance(rule, dict) else rule
        return build_hls(sizes, GapRule(scale=float(scale)), self.settings.window.max_points)

    def build_kernel(
        self,
        data: Dict[str, Any],
        space: Space,
        spec: Optional[AsymptoticOperatorSpec] = None,
    ) -> BandKernel:
        """Build a kernel from an operator spec on a space."""
        if spec is not None:
            return spec.kernel_on(space)
        kind = str(data.get("kind", "")).lower()
        try:
            if kind == "identity":
                return identity_kernel(space)
            if kind == "adjacency":
                return adjacency_kernel(space)
            if kind == "constant":
                return constant_kernel(
                    space, complex(data.get("value", 1.0)).real, float(data.get("propagation", 0))
                )
            if kind == "entries":
                rows, cols, values = [], [], []
                for x, y, value in data["entries"]:
                    rows.append(space.index(_hashable(x)))
                    cols.append(space.index(_hashable(y)))
                    values.append(
                        complex(*value) if isinstance(value, list) else float(value)
                    )
                matrix = sp.csr_matrix(
                    (np.asarray(values), (rows, cols)), shape=(space.size, space.size)
                )
                return BandKernel.from_matrix(space, matrix, data.get("propagation"))
        except (KeyError, TypeError, ValueError) as e:
            raise SpecFormatError(f"malformed {kind or 'operator'} spec: {e}") from e
        raise SpecFormatError(f"unknown operator kind '{kind}'")


def _hashable(value: Any) -> Any:
    return tuple(value) if isinstance(value, list) else value
