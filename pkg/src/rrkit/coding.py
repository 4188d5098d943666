"""Five-parameter box/offset transforms and angle normalization.

The offset convention: tx, ty are center displacements divided by the
anchor's sides, tw, th log size ratios, ttheta the angle difference.
The angle difference is wrapped into (-pi/4, pi/4] with a compensating
w/h swap whenever the raw difference crosses a quarter turn; the raw
difference is pi/2-periodic at the level of point sets, and the wrap
keeps regression targets small and the roundtrip exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import NonFinite, ShapeMismatch

QUARTER_PI = math.pi / 4.0
HALF_PI = math.pi / 2.0

# exp(tw) past this magnitude is treated as overflow rather than a box.
MAX_LOG_RATIO = 20.0


@dataclass(frozen=True)
class Delta5:
    """Regression offsets of a box relative to an anchor."""

    tx: float
    ty: float
    tw: float
    th: float
    ttheta: float

    def as_array(self):
        return np.array([self.tx, self.ty, self.tw, self.th, self.ttheta])

    @staticmethod
    def from_array(a):
        return Delta5(float(a[0]), float(a[1]), float(a[2]), float(a[3]), float(a[4]))


def normalize_angle(theta: float, w: float, h: float):
    """Return (theta', w', h') with theta' in [-pi/2, 0), same corner set."""
    row = geometry.canonicalize_arr(np.array([0.0, 0.0, w, h, theta]))[0]
    return float(row[4]), float(row[2]), float(row[3])


def encode_batch(gts, anchors):
    """Offsets of each gt row relative to the same-index anchor row.

    Both arguments are (n, 5) arrays; rows are canonicalized first.
    Returns the (n, 5) array of (tx, ty, tw, th, ttheta).
    """
    g = geometry.canonicalize_arr(gts)
    a = geometry.canonicalize_arr(anchors)
    if g.shape != a.shape:
        raise ShapeMismatch(f"gt shape {g.shape} vs anchor shape {a.shape}")
    dt = g[:, 4] - a[:, 4]
    swap_hi = dt > QUARTER_PI
    swap_lo = dt <= -QUARTER_PI
    dt = np.where(swap_hi, dt - HALF_PI, dt)
    dt = np.where(swap_lo, dt + HALF_PI, dt)
    swap = swap_hi | swap_lo
    gw = np.where(swap, g[:, 3], g[:, 2])
    gh = np.where(swap, g[:, 2], g[:, 3])
    out = np.empty_like(g)
    out[:, 0] = (g[:, 0] - a[:, 0]) / a[:, 2]
    out[:, 1] = (g[:, 1] - a[:, 1]) / a[:, 3]
    out[:, 2] = np.log(gw / a[:, 2])
    out[:, 3] = np.log(gh / a[:, 3])
    out[:, 4] = dt
    return out


def decode_batch(deltas, anchors):
    """Inverse of encode_batch; result rows are canonical.

    Raises NonFinite when any delta is non-finite or a log size ratio
    exceeds 20 in magnitude (exp overflow guard). Anchor sizes pass
    through multiplicatively, so zero-size anchors stay zero-size.
    """
    d = np.asarray(deltas, dtype=np.float64)
    a = geometry.canonicalize_arr(anchors)
    if d.shape != a.shape:
        raise ShapeMismatch(f"delta shape {d.shape} vs anchor shape {a.shape}")
    if not np.all(np.isfinite(d)):
        raise NonFinite("non-finite delta")
    if np.any(np.abs(d[:, 2:4]) > MAX_LOG_RATIO):
        raise NonFinite("log size ratio magnitude exceeds 20")
    out = np.empty_like(d)
    out[:, 0] = a[:, 0] + d[:, 0] * a[:, 2]
    out[:, 1] = a[:, 1] + d[:, 1] * a[:, 3]
    out[:, 2] = a[:, 2] * np.exp(d[:, 2])
    out[:, 3] = a[:, 3] * np.exp(d[:, 3])
    out[:, 4] = a[:, 4] + d[:, 4]
    return geometry.canonicalize_arr(out)


def encode(gt: geometry.RBox, anchor: geometry.RBox) -> Delta5:
    """Offsets of one box relative to one anchor."""
    row = encode_batch(gt.as_array()[None, :], anchor.as_array()[None, :])[0]
    return Delta5.from_array(row)


def decode(d: Delta5, anchor: geometry.RBox) -> geometry.RBox:
    """Box described by offsets ``d`` applied to ``anchor``; canonical."""
    row = decode_batch(d.as_array()[None, :], anchor.as_array()[None, :])[0]
    return geometry.RBox.from_array(row)
