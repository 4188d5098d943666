"""Batched array bindings over the rrkit rotated-box kernels."""

from .arrays import ArrayView, ShapeError, as_float64
from .ops import (
    batch_bilinear_sample,
    batch_decode,
    batch_encode,
    batch_rnms,
    batch_skew_iou,
    frm_reconstruct,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayView",
    "ShapeError",
    "as_float64",
    "batch_bilinear_sample",
    "batch_decode",
    "batch_encode",
    "batch_rnms",
    "batch_skew_iou",
    "frm_reconstruct",
]
