"""Compiled kernels for box overlap and suppression.

Scalar wrappers live in :mod:`rrkit.geometry` and :mod:`rrkit.postproc`;
everything here works on packed float64 arrays with box rows ordered
(cx, cy, w, h, theta). All kernels are single-threaded; the matrix path
is chunked across a thread pool by its wrapper, capped by the
RRKIT_THREADS environment variable.
"""

import os

import numpy as np
from numba import njit

# On-edge classification tolerance for polygon clipping, in pixels.
CLIP_EPS = 1e-9


def thread_count():
    """Worker count for chunked batch calls: cpu count capped by RRKIT_THREADS."""
    avail = os.cpu_count() or 1
    raw = os.environ.get("RRKIT_THREADS", "")
    if raw.strip():
        try:
            cap = int(raw)
        except ValueError:
            return avail
        return max(1, min(avail, cap))
    return avail


@njit(cache=True, nogil=True)
def _corners_into(b, out):
    # Winding (-w/2,-h/2) -> (-w/2,h/2) -> (w/2,h/2) -> (w/2,-h/2) gives a
    # negative shoelace signed area with y pointing down.
    cx, cy, w, h, t = b[0], b[1], b[2], b[3], b[4]
    c = np.cos(t)
    s = np.sin(t)
    hw = 0.5 * w
    hh = 0.5 * h
    out[0, 0] = cx - hw * c + hh * s
    out[0, 1] = cy - hw * s - hh * c
    out[1, 0] = cx - hw * c - hh * s
    out[1, 1] = cy - hw * s + hh * c
    out[2, 0] = cx + hw * c - hh * s
    out[2, 1] = cy + hw * s + hh * c
    out[3, 0] = cx + hw * c + hh * s
    out[3, 1] = cy + hw * s - hh * c


@njit(cache=True, nogil=True)
def corners_batch(boxes, out):
    for i in range(boxes.shape[0]):
        _corners_into(boxes[i], out[i])


@njit(cache=True, nogil=True)
def aabb_batch(boxes, out):
    # out rows: xmin, ymin, xmax, ymax
    tmp = np.empty((4, 2))
    for i in range(boxes.shape[0]):
        _corners_into(boxes[i], tmp)
        xmin = tmp[0, 0]
        xmax = tmp[0, 0]
        ymin = tmp[0, 1]
        ymax = tmp[0, 1]
        for k in range(1, 4):
            if tmp[k, 0] < xmin:
                xmin = tmp[k, 0]
            if tmp[k, 0] > xmax:
                xmax = tmp[k, 0]
            if tmp[k, 1] < ymin:
                ymin = tmp[k, 1]
            if tmp[k, 1] > ymax:
                ymax = tmp[k, 1]
        out[i, 0] = xmin
        out[i, 1] = ymin
        out[i, 2] = xmax
        out[i, 3] = ymax


@njit(cache=True, nogil=True)
def _clip_area(sub, clip, buf_a, buf_b):
    # Sutherland-Hodgman: clip the subject quad against each edge of the
    # convex clip quad. Both quads share the winding emitted by
    # _corners_into, so the interior lies at negative cross products.
    n = 4
    for k in range(4):
        buf_a[k, 0] = sub[k, 0]
        buf_a[k, 1] = sub[k, 1]
    for e in range(4):
        ax = clip[e, 0]
        ay = clip[e, 1]
        bx = clip[(e + 1) % 4, 0]
        by = clip[(e + 1) % 4, 1]
        ex = bx - ax
        ey = by - ay
        elen = np.sqrt(ex * ex + ey * ey)
        if elen <= 0.0:
            continue
        if n == 0:
            return 0.0
        m = 0
        px = buf_a[n - 1, 0]
        py = buf_a[n - 1, 1]
        dp = -(ex * (py - ay) - ey * (px - ax)) / elen
        for i in range(n):
            qx = buf_a[i, 0]
            qy = buf_a[i, 1]
            dq = -(ex * (qy - ay) - ey * (qx - ax)) / elen
            p_in = dp >= -CLIP_EPS
            q_in = dq >= -CLIP_EPS
            if q_in != p_in:
                tt = dp / (dp - dq)
                buf_b[m, 0] = px + tt * (qx - px)
                buf_b[m, 1] = py + tt * (qy - py)
                m += 1
            if q_in:
                buf_b[m, 0] = qx
                buf_b[m, 1] = qy
                m += 1
            px = qx
            py = qy
            dp = dq
        n = m
        for i in range(n):
            buf_a[i, 0] = buf_b[i, 0]
            buf_a[i, 1] = buf_b[i, 1]
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        j = (i + 1) % n
        acc += buf_a[i, 0] * buf_a[j, 1] - buf_a[j, 0] * buf_a[i, 1]
    return 0.5 * abs(acc)


@njit(cache=True, nogil=True)
def _lex_less(a, b):
    for k in range(5):
        if a[k] < b[k]:
            return True
        if a[k] > b[k]:
            return False
    return False


@njit(cache=True, nogil=True)
def _iou_precomp(a, b, ca, cb, aa, ab, buf_a, buf_b):
    if aa[0] > ab[2] or ab[0] > aa[2] or aa[1] > ab[3] or ab[1] > aa[3]:
        return 0.0
    # Fixed argument order keeps skew_iou(a, b) bitwise equal to
    # skew_iou(b, a) regardless of which box the caller lists first.
    if _lex_less(b, a):
        inter = _clip_area(cb, ca, buf_a, buf_b)
    else:
        inter = _clip_area(ca, cb, buf_a, buf_b)
    union = a[2] * a[3] + b[2] * b[3] - inter
    if union <= 0.0:
        return 0.0
    iou = inter / union
    if iou > 1.0:
        return 1.0
    if iou < 0.0:
        return 0.0
    return iou


@njit(cache=True, nogil=True)
def pair_iou(A, B, out):
    """Elementwise skew IoU of two equal-length box arrays."""
    ca = np.empty((4, 2))
    cb = np.empty((4, 2))
    aa = np.empty(4)
    ab = np.empty(4)
    buf_a = np.empty((16, 2))
    buf_b = np.empty((16, 2))
    for i in range(A.shape[0]):
        _corners_into(A[i], ca)
        _corners_into(B[i], cb)
        aa[0] = min(min(ca[0, 0], ca[1, 0]), min(ca[2, 0], ca[3, 0]))
        aa[1] = min(min(ca[0, 1], ca[1, 1]), min(ca[2, 1], ca[3, 1]))
        aa[2] = max(max(ca[0, 0], ca[1, 0]), max(ca[2, 0], ca[3, 0]))
        aa[3] = max(max(ca[0, 1], ca[1, 1]), max(ca[2, 1], ca[3, 1]))
        ab[0] = min(min(cb[0, 0], cb[1, 0]), min(cb[2, 0], cb[3, 0]))
        ab[1] = min(min(cb[0, 1], cb[1, 1]), min(cb[2, 1], cb[3, 1]))
        ab[2] = max(max(cb[0, 0], cb[1, 0]), max(cb[2, 0], cb[3, 0]))
        ab[3] = max(max(cb[0, 1], cb[1, 1]), max(cb[2, 1], cb[3, 1]))
        out[i] = _iou_precomp(A[i], B[i], ca, cb, aa, ab, buf_a, buf_b)


@njit(cache=True, nogil=True)
def iou_matrix_rows(A, CA, AA, B, CB, AB, out, r0, r1):
    """Fill out[r0:r1, :] with skew IoU of A rows against all B rows.

    CA/CB are precomputed corners, AA/AB precomputed axis-aligned bounds.
    Rows are disjoint between calls so chunks may run concurrently.
    """
    buf_a = np.empty((16, 2))
    buf_b = np.empty((16, 2))
    for i in range(r0, r1):
        for j in range(B.shape[0]):
            out[i, j] = _iou_precomp(
                A[i], B[j], CA[i], CB[j], AA[i], AB[j], buf_a, buf_b
            )


@njit(cache=True, nogil=True)
def nms_suppress(boxes, corners, aabbs, iou_thresh, suppressed):
    """Greedy suppression over boxes already sorted by descending score.

    Marks suppressed[j] = True for every box overlapping a kept earlier
    box with IoU >= iou_thresh (inclusive).

    Candidate pairs come from a uniform grid over the boxes' axis-aligned
    bounds instead of an all-pairs scan; each box is registered in every
    cell its bounds touch, and a pair is examined only in the first cell
    the two share, so the greedy result is identical to the quadratic
    loop. Cell size is the largest single-box extent, doubled as needed
    to cap the cell count near 4n.
    """
    n = boxes.shape[0]
    if n == 0:
        return
    buf_a = np.empty((16, 2))
    buf_b = np.empty((16, 2))

    xmin = aabbs[0, 0]
    ymin = aabbs[0, 1]
    xmax = aabbs[0, 2]
    ymax = aabbs[0, 3]
    cell = 0.0
    for i in range(n):
        if aabbs[i, 0] < xmin:
            xmin = aabbs[i, 0]
        if aabbs[i, 1] < ymin:
            ymin = aabbs[i, 1]
        if aabbs[i, 2] > xmax:
            xmax = aabbs[i, 2]
        if aabbs[i, 3] > ymax:
            ymax = aabbs[i, 3]
        ext_x = aabbs[i, 2] - aabbs[i, 0]
        ext_y = aabbs[i, 3] - aabbs[i, 1]
        if ext_x > cell:
            cell = ext_x
        if ext_y > cell:
            cell = ext_y
    if cell <= 0.0:
        cell = 1.0
    nx = int((xmax - xmin) / cell) + 1
    ny = int((ymax - ymin) / cell) + 1
    while nx * ny > 4 * n + 16:
        cell *= 2.0
        nx = int((xmax - xmin) / cell) + 1
        ny = int((ymax - ymin) / cell) + 1
    ncell = nx * ny

    cx0 = np.empty(n, np.int64)
    cx1 = np.empty(n, np.int64)
    cy0 = np.empty(n, np.int64)
    cy1 = np.empty(n, np.int64)
    starts = np.zeros(ncell + 1, np.int64)
    for i in range(n):
        cx0[i] = int((aabbs[i, 0] - xmin) / cell)
        cx1[i] = min(int((aabbs[i, 2] - xmin) / cell), nx - 1)
        cy0[i] = int((aabbs[i, 1] - ymin) / cell)
        cy1[i] = min(int((aabbs[i, 3] - ymin) / cell), ny - 1)
        for cy in range(cy0[i], cy1[i] + 1):
            for cx in range(cx0[i], cx1[i] + 1):
                starts[cy * nx + cx + 1] += 1
    for c in range(ncell):
        starts[c + 1] += starts[c]
    entries = np.empty(starts[ncell], np.int64)
    fill = starts[:ncell].copy()
    for i in range(n):
        for cy in range(cy0[i], cy1[i] + 1):
            for cx in range(cx0[i], cx1[i] + 1):
                c = cy * nx + cx
                entries[fill[c]] = i
                fill[c] += 1

    for i in range(n):
        if suppressed[i]:
            continue
        ax0 = aabbs[i, 0]
        ay0 = aabbs[i, 1]
        ax1 = aabbs[i, 2]
        ay1 = aabbs[i, 3]
        for cy in range(cy0[i], cy1[i] + 1):
            for cx in range(cx0[i], cx1[i] + 1):
                c = cy * nx + cx
                for e in range(starts[c], starts[c + 1]):
                    j = entries[e]
                    if j <= i or suppressed[j]:
                        continue
                    # visit a pair only in its first shared cell
                    if cx != max(cx0[i], cx0[j]) or cy != max(cy0[i], cy0[j]):
                        continue
                    if (ax0 > aabbs[j, 2] or aabbs[j, 0] > ax1
                            or ay0 > aabbs[j, 3] or aabbs[j, 1] > ay1):
                        continue
                    iou = _iou_precomp(
                        boxes[i], boxes[j], corners[i], corners[j],
                        aabbs[i], aabbs[j], buf_a, buf_b,
                    )
                    if iou >= iou_thresh:
                        suppressed[j] = True
