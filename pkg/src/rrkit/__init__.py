"""Rotated-box detection kernels.

Geometry and SkewIoU, anchor generation, box target coding, stage-wise
matching, feature-map refinement, detection losses with gradients,
rotated NMS, rotated-mAP evaluation, and DOTA-format tooling. The CLI
entry point is ``rrkit`` (see :mod:`rrkit.cli`).
"""

from . import anchors, coding, dataio, evalkit, frm, geometry, losses, matching, postproc
from .errors import (
    DegenerateQuad,
    DomainError,
    EmptyLocation,
    InvalidArg,
    InvalidConfig,
    NonFinite,
    ParseError,
    RRKitError,
    ShapeMismatch,
    UnknownClass,
    UnknownTile,
    UnknownVariant,
)
from .geometry import AABox, LongSideBox, RBox

__version__ = "0.1.0"

__all__ = [
    "AABox",
    "DegenerateQuad",
    "DomainError",
    "EmptyLocation",
    "InvalidArg",
    "InvalidConfig",
    "LongSideBox",
    "NonFinite",
    "ParseError",
    "RBox",
    "RRKitError",
    "ShapeMismatch",
    "UnknownClass",
    "UnknownTile",
    "UnknownVariant",
    "__version__",
    "anchors",
    "coding",
    "dataio",
    "evalkit",
    "frm",
    "geometry",
    "losses",
    "matching",
    "postproc",
]
