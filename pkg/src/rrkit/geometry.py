"""Rotated-box representations, conversions, and exact overlap.

Coordinate conventions, used everywhere in the toolkit:

* image origin at the top-left, x to the right, y downward;
* an ``RBox`` stores (cx, cy, w, h, theta) with theta in [-pi/2, 0);
  theta is the angle from the x-axis to the side of length ``w``;
* at theta == -pi/2 exactly, ``w`` lies along the image y-axis, so a box
  whose natural angle is 0 is stored as theta=-pi/2 with w and h swapped;
* quad corners are emitted counter-clockwise on screen, which makes the
  mathematical shoelace signed area negative because y points down.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateQuad

HALF_PI = math.pi / 2.0

# A Quad is a (4, 2) float array of vertices; a Polygon is (k, 2).


@dataclass(frozen=True)
class RBox:
    """Five-parameter rotated rectangle in the 90-degree convention."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float

    def as_array(self):
        return np.array([self.cx, self.cy, self.w, self.h, self.theta])

    @staticmethod
    def from_array(a):
        return RBox(float(a[0]), float(a[1]), float(a[2]), float(a[3]), float(a[4]))

    @property
    def area(self):
        return self.w * self.h


@dataclass(frozen=True)
class LongSideBox:
    """Rotated rectangle keyed by its long side; theta in [-pi/2, pi/2)."""

    cx: float
    cy: float
    long: float
    short: float
    theta: float


@dataclass(frozen=True)
class AABox:
    """Axis-aligned box as (xmin, ymin, xmax, ymax)."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    @property
    def area(self):
        return max(0.0, self.xmax - self.xmin) * max(0.0, self.ymax - self.ymin)


def canonicalize_arr(boxes):
    """Map angles into [-pi/2, 0), swapping w/h when the wrap crosses zero.

    Accepts and returns an (n, 5) float64 array; rows describe the same
    point sets as the input rows.
    """
    out = np.array(boxes, dtype=np.float64, copy=True)
    if out.ndim == 1:
        out = out[None, :]
    t = np.mod(out[:, 4] + HALF_PI, math.pi) - HALF_PI
    swap = t >= 0.0
    t = np.where(swap, t - HALF_PI, t)
    w = np.where(swap, out[:, 3], out[:, 2])
    h = np.where(swap, out[:, 2], out[:, 3])
    out[:, 2] = w
    out[:, 3] = h
    out[:, 4] = t
    return out


def canonicalize(b: RBox) -> RBox:
    """Canonical form of one box: theta in [-pi/2, 0), same point set."""
    return RBox.from_array(canonicalize_arr(b.as_array())[0])


def corners_arr(boxes):
    """Corner quads, shape (n, 4, 2), for an (n, 5) box array."""
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    out = np.empty((boxes.shape[0], 4, 2))
    kernels.corners_batch(boxes, out)
    return out


def corners(b: RBox):
    """The four vertices of ``b`` in canonical winding, shape (4, 2)."""
    return corners_arr(b.as_array()[None, :])[0]


def polygon_area(p) -> float:
    """Nonnegative shoelace area of a simple polygon; 0 for < 3 vertices."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 3:
        return 0.0
    x = p[:, 0]
    y = p[:, 1]
    s = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    return 0.5 * abs(float(s))


def _signed_area(p):
    x = p[:, 0]
    y = p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def convex_intersection(a, b):
    """Clip convex polygon ``a`` against convex polygon ``b``.

    Returns the intersection polygon as a (k, 2) array; k == 0 when the
    polygons are disjoint. Vertices on an edge of ``b`` are classified
    inside with a 1e-9 px tolerance, so touching contacts survive as
    zero-area slivers and count as no overlap downstream.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[0] < 3 or b.shape[0] < 3:
        return np.zeros((0, 2))
    # The clip loop expects screen-counter-clockwise winding (negative
    # signed area); normalize so callers may pass either orientation.
    if _signed_area(b) > 0.0:
        b = b[::-1]
    verts = [(float(x), float(y)) for x, y in a]
    nb = b.shape[0]
    for e in range(nb):
        ax, ay = float(b[e, 0]), float(b[e, 1])
        bx, by = float(b[(e + 1) % nb, 0]), float(b[(e + 1) % nb, 1])
        ex, ey = bx - ax, by - ay
        elen = math.hypot(ex, ey)
        if elen <= 0.0:
            continue
        if not verts:
            break
        nxt = []
        px, py = verts[-1]
        dp = -(ex * (py - ay) - ey * (px - ax)) / elen
        for qx, qy in verts:
            dq = -(ex * (qy - ay) - ey * (qx - ax)) / elen
            p_in = dp >= -kernels.CLIP_EPS
            q_in = dq >= -kernels.CLIP_EPS
            if q_in != p_in:
                t = dp / (dp - dq)
                nxt.append((px + t * (qx - px), py + t * (qy - py)))
            if q_in:
                nxt.append((qx, qy))
            px, py, dp = qx, qy, dq
        verts = nxt
    if len(verts) < 3:
        return np.zeros((0, 2))
    return np.array(verts)


def aabb_arr(boxes):
    """Axis-aligned bounds, rows (xmin, ymin, xmax, ymax), for (n, 5) boxes."""
    boxes = np.ascontiguousarray(boxes, dtype=np.float64)
    out = np.empty((boxes.shape[0], 4))
    kernels.aabb_batch(boxes, out)
    return out


def hbb_of(b: RBox) -> AABox:
    """Smallest axis-aligned box containing ``b``."""
    r = aabb_arr(b.as_array()[None, :])[0]
    return AABox(float(r[0]), float(r[1]), float(r[2]), float(r[3]))


def aabox_iou(a: AABox, b: AABox) -> float:
    """Standard axis-aligned IoU; negative overlaps clamp to zero."""
    iw = min(a.xmax, b.xmax) - max(a.xmin, b.xmin)
    ih = min(a.ymax, b.ymax) - max(a.ymin, b.ymin)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, max(0.0, inter / union))


def aabox_iou_matrix(A, B):
    """IoU matrix between (n, 4) and (m, 4) arrays of aligned boxes."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    iw = np.minimum(A[:, None, 2], B[None, :, 2]) - np.maximum(A[:, None, 0], B[None, :, 0])
    ih = np.minimum(A[:, None, 3], B[None, :, 3]) - np.maximum(A[:, None, 1], B[None, :, 1])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    area_a = np.clip(A[:, 2] - A[:, 0], 0.0, None) * np.clip(A[:, 3] - A[:, 1], 0.0, None)
    area_b = np.clip(B[:, 2] - B[:, 0], 0.0, None) * np.clip(B[:, 3] - B[:, 1], 0.0, None)
    union = area_a[:, None] + area_b[None, :] - inter
    out = np.where(union > 0.0, inter / np.where(union > 0.0, union, 1.0), 0.0)
    return np.clip(out, 0.0, 1.0)


def skew_iou(a: RBox, b: RBox) -> float:
    """Exact rotated-box IoU via convex polygon clipping.

    Symmetric under argument order and invariant under a common rigid
    transform of both boxes. Disjoint boxes give 0; contacts along an
    edge or at a point give zero up to floating-point dust.
    """
    out = np.empty(1)
    kernels.pair_iou(a.as_array()[None, :], b.as_array()[None, :], out)
    return float(out[0])


def skew_iou_pairs(A, B):
    """Elementwise skew IoU of two (n, 5) box arrays."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.shape != B.shape:
        raise ValueError("pair arrays must have identical shapes")
    out = np.empty(A.shape[0])
    kernels.pair_iou(A, B, out)
    return out


def skew_iou_matrix(A, B):
    """Full IoU matrix between (n, 5) and (m, 5) box arrays.

    Rows are chunked across a thread pool when more than one worker is
    allowed (see RRKIT_THREADS); results do not depend on the chunking.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    n, m = A.shape[0], B.shape[0]
    out = np.empty((n, m))
    if n == 0 or m == 0:
        return out
    CA = corners_arr(A)
    CB = corners_arr(B)
    AA = aabb_arr(A)
    AB = aabb_arr(B)
    workers = kernels.thread_count()
    if workers <= 1 or n * m < 65536:
        kernels.iou_matrix_rows(A, CA, AA, B, CB, AB, out, 0, n)
        return out
    workers = min(workers, n)
    bounds = np.linspace(0, n, workers + 1).astype(np.int64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futs = [
            pool.submit(kernels.iou_matrix_rows, A, CA, AA, B, CB, AB, out,
                        int(bounds[k]), int(bounds[k + 1]))
            for k in range(workers)
            if bounds[k] < bounds[k + 1]
        ]
        for f in futs:
            f.result()
    return out


def _convex_hull(pts):
    # Monotone chain; returns hull vertices, counter-clockwise in the
    # mathematical convention, without the repeated endpoint.
    pts = sorted(set((float(x), float(y)) for x, y in pts))
    if len(pts) < 3:
        return pts

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def min_area_rect(points) -> RBox:
    """Minimum-area enclosing rotated rectangle of a point set.

    Accepts any (n, 2) point collection (a Quad being the common case)
    and scans the convex hull with rotating calipers: the optimum rect
    shares a direction with some hull edge. Area ties are broken by the
    smallest |theta| of the canonicalized candidate.

    Raises DegenerateQuad when the points are collinear or coincident.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 3:
        raise DegenerateQuad("need at least 3 distinct points")
    hull = _convex_hull(pts)
    if len(hull) < 3:
        raise DegenerateQuad("points are collinear or coincident")
    hp = np.array(hull)
    best = None
    best_area = math.inf
    best_abs_theta = math.inf
    nh = hp.shape[0]
    for e in range(nh):
        dx = hp[(e + 1) % nh, 0] - hp[e, 0]
        dy = hp[(e + 1) % nh, 1] - hp[e, 1]
        elen = math.hypot(dx, dy)
        if elen <= 0.0:
            continue
        ux, uy = dx / elen, dy / elen
        u = hp[:, 0] * ux + hp[:, 1] * uy
        v = -hp[:, 0] * uy + hp[:, 1] * ux
        du = float(u.max() - u.min())
        dv = float(v.max() - v.min())
        area = du * dv
        mu = 0.5 * float(u.max() + u.min())
        mv = 0.5 * float(v.max() + v.min())
        cand = canonicalize(RBox(
            mu * ux - mv * uy, mu * uy + mv * ux, du, dv, math.atan2(dy, dx)
        ))
        if area < best_area * (1.0 - 1e-12):
            best, best_area, best_abs_theta = cand, area, abs(cand.theta)
        elif area <= best_area * (1.0 + 1e-12) and abs(cand.theta) < best_abs_theta:
            best, best_area, best_abs_theta = cand, area, abs(cand.theta)
    if best is None or best.w <= 0.0 or best.h <= 0.0:
        raise DegenerateQuad("points are collinear or coincident")
    return best


def to_long_side(b: RBox) -> LongSideBox:
    """Re-express a box with theta measured from its long side."""
    b = canonicalize(b)
    if b.w >= b.h:
        return LongSideBox(b.cx, b.cy, b.w, b.h, b.theta)
    return LongSideBox(b.cx, b.cy, b.h, b.w, b.theta + HALF_PI)


def from_long_side(l: LongSideBox) -> RBox:
    """Inverse of to_long_side; result is canonical."""
    t = math.remainder(l.theta, math.pi)
    if t >= HALF_PI:
        t -= math.pi
    elif t < -HALF_PI:
        t += math.pi
    if t < 0.0:
        return RBox(l.cx, l.cy, l.long, l.short, t)
    return RBox(l.cx, l.cy, l.short, l.long, t - HALF_PI)


def transform_box(b: RBox, op: str, image_w: float, image_h: float,
                  angle: float = 0.0) -> RBox:
    """Apply a rigid image transform to a box.

    op is one of "flip-h" (mirror across the vertical centerline),
    "flip-v" (horizontal centerline), or "rotate" (by ``angle`` radians
    about the image center, same angle convention as box thetas). The
    result covers exactly the transformed corner set, re-canonicalized.
    """
    if op == "flip-h":
        return canonicalize(RBox(image_w - b.cx, b.cy, b.w, b.h, -b.theta))
    if op == "flip-v":
        return canonicalize(RBox(b.cx, image_h - b.cy, b.w, b.h, -b.theta))
    if op == "rotate":
        ox, oy = image_w / 2.0, image_h / 2.0
        c, s = math.cos(angle), math.sin(angle)
        dx, dy = b.cx - ox, b.cy - oy
        return canonicalize(RBox(
            ox + c * dx - s * dy, oy + s * dx + c * dy, b.w, b.h, b.theta + angle
        ))
    raise ValueError(f"unknown transform op: {op!r}")
