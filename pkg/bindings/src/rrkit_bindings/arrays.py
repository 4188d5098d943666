"""Array descriptors and dtype plumbing for the binding layer.

Host code hands over plain contiguous numeric buffers; everything here is
about checking them cheaply and moving to float64 without copying when the
buffer already is one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)


class ShapeError(ValueError):
    """Buffer shape or dtype does not match the wrapped operation."""


@dataclass(frozen=True)
class ArrayView:
    """Pointer-free descriptor of one host buffer.

    ``buffer`` is the wrapped array itself (the base handle), never a
    copy, so identity checks against the caller's array hold.
    """

    buffer: np.ndarray
    shape: tuple
    dtype: str
    contiguous: bool

    @classmethod
    def wrap(cls, arr, name="array"):
        arr = np.asarray(arr)
        if arr.dtype not in FLOAT_DTYPES:
            raise ShapeError(
                f"{name}: expected float32 or float64 buffer, got {arr.dtype}"
            )
        if not arr.flags["C_CONTIGUOUS"]:
            raise ShapeError(f"{name}: buffer must be row-major contiguous")
        return cls(arr, arr.shape, arr.dtype.str, True)

    @property
    def is_single(self):
        return self.buffer.dtype == np.float32


def check_shape(view, spec, name):
    """spec entries are ints or None (-1 also accepted) for free axes."""
    shape = view.shape
    if len(shape) != len(spec):
        raise ShapeError(f"{name}: expected rank {len(spec)}, got {len(shape)}")
    for axis, (got, want) in enumerate(zip(shape, spec)):
        if want in (None, -1):
            continue
        if got != want:
            raise ShapeError(f"{name}: axis {axis} must be {want}, got {got}")
    return view


def as_float64(view):
    """float64 data for a view; the zero-copy path returns the buffer itself."""
    if view.buffer.dtype == np.float64:
        return view.buffer
    return view.buffer.astype(np.float64)


def restore_dtype(result, single):
    return result.astype(np.float32) if single else result
