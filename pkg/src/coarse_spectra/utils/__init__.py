"""Utility modules for coarse-spectra."""

from coarse_spectra.utils.parallel import parallel_map, worker_count
from coarse_spectra.utils.serialization import dumps, to_jsonable, write_csv, write_json

__all__ = ["parallel_map", "worker_count", "dumps", "to_jsonable", "write_csv", "write_json"]
