"""Symmetry-protected subspace discovery and operator-free post-selection."""
from .basis import format_ket, parse_ket
from .editmap import EditMap, EditMapSet, LocalUnitary, build_edit_map
from .estimators import SubspacePartitioner, SymmetryPostSelector
from .models import Circuit, build_model
from .pathfind import SearchCache, chi, failure_rate, max_depth, verdict
from .sps import Subspace, enumerate_sps, partition_hilbert

__version__ = "0.1.0"

__all__ = [
    "Circuit",
    "EditMap",
    "EditMapSet",
    "LocalUnitary",
    "SearchCache",
    "Subspace",
    "SubspacePartitioner",
    "SymmetryPostSelector",
    "build_edit_map",
    "build_model",
    "chi",
    "enumerate_sps",
    "failure_rate",
    "format_ket",
    "max_depth",
    "parse_ket",
    "partition_hilbert",
    "verdict",
]
