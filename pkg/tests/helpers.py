"""Shared comparison utilities and hypothesis strategies."""

import math

import numpy as np
from hypothesis import strategies as st

from rrkit.geometry import RBox

_coord = st.floats(-100.0, 100.0, allow_nan=False, allow_infinity=False,
                   allow_subnormal=False)
_side = st.floats(0.5, 60.0, allow_nan=False, allow_infinity=False,
                  allow_subnormal=False)
_angle = st.floats(-math.pi / 2.0, -1e-9, allow_nan=False, allow_infinity=False,
                   allow_subnormal=False)


@st.composite
def rboxes(draw):
    """Canonical-range boxes with nondegenerate sides."""
    return RBox(draw(_coord), draw(_coord), draw(_side), draw(_side), draw(_angle))


def corner_set_distance(A, B):
    """Symmetric max-min pointwise distance between two corner sets."""
    A = np.asarray(A, dtype=np.float64).reshape(-1, 2)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2)
    d = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def boxes_close(a: RBox, b: RBox, tol=1e-9):
    return (abs(a.cx - b.cx) <= tol and abs(a.cy - b.cy) <= tol
            and abs(a.w - b.w) <= tol and abs(a.h - b.h) <= tol
            and abs(a.theta - b.theta) <= tol)
