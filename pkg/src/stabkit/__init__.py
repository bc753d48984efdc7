"""stabkit: minimum-cost horizontal stabbing of stacked-rectangle shapes."""

from .geometry import (
    Coord,
    HSegment,
    Instance,
    KShape,
    Rect,
    Solution,
    bounding_rect,
    is_hourglass,
    stabs_kshape,
    stabs_rect,
    validate_kshape,
    verify_solution,
    width_stats,
)

__all__ = [
    "Coord",
    "HSegment",
    "Instance",
    "KShape",
    "Rect",
    "Solution",
    "bounding_rect",
    "is_hourglass",
    "stabs_kshape",
    "stabs_rect",
    "validate_kshape",
    "verify_solution",
    "width_stats",
]

__version__ = "0.1.0"
