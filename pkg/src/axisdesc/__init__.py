"""Symmetry-axis shape descriptors from a diffused distance-like field, with
an order-constrained branch-and-bound matcher."""

from .descriptor import ShapeDescriptor, read_descriptor, write_descriptor
from .errors import AxisDescError, TopologyError
from .field import DiffusionSchedule, Field, anneal_to_center, diffuse, find_critical_points, solve_screened
from .grid import ShapeMask, load_mask, mask_from_foreground
from .matcher import MatchResult, SimilarityThresholds, match_multi, match_shapes
from .pipeline import ExtractParams, extract

__all__ = [
    "AxisDescError",
    "DiffusionSchedule",
    "ExtractParams",
    "Field",
    "MatchResult",
    "ShapeDescriptor",
    "ShapeMask",
    "SimilarityThresholds",
    "TopologyError",
    "anneal_to_center",
    "diffuse",
    "extract",
    "find_critical_points",
    "load_mask",
    "mask_from_foreground",
    "match_multi",
    "match_shapes",
    "read_descriptor",
    "solve_screened",
    "write_descriptor",
]

__version__ = "0.1.0"
