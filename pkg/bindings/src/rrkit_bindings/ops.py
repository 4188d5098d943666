"""Batched array mirrors of the core rotated-box operations.

Every function takes contiguous float32 or float64 buffers, validates
shapes, runs the core implementation in float64, and hands back an array
in the caller's precision. float64 inputs flow through without copies, so
results are bitwise identical to calling the core directly. No state is
kept between calls.
"""

from __future__ import annotations

import numpy as np

from rrkit.coding import decode_batch, encode_batch
from rrkit.frm import BoxField, ConvKernel, FeatureMap, bilinear_sample, reconstruct
from rrkit.geometry import RBox, skew_iou_matrix
from rrkit.postproc import Detection, rotated_nms

from .arrays import ArrayView, ShapeError, as_float64, check_shape, restore_dtype


def _boxes_view(arr, name):
    return check_shape(ArrayView.wrap(arr, name), (None, 5), name)


def batch_skew_iou(a, b):
    """Pairwise rotated IoU: (N,5) x (M,5) -> (N,M)."""
    va = _boxes_view(a, "a")
    vb = _boxes_view(b, "b")
    single = va.is_single and vb.is_single
    if va.shape[0] == 0 or vb.shape[0] == 0:
        out = np.zeros((va.shape[0], vb.shape[0]))
        return restore_dtype(out, single)
    out = skew_iou_matrix(as_float64(va), as_float64(vb))
    return restore_dtype(out, single)


def batch_bilinear_sample(values, points):
    """Bilinear reads of an (H,W,C) map at (N,2) feature-space points."""
    vv = check_shape(ArrayView.wrap(values, "values"), (None, None, None), "values")
    vp = check_shape(ArrayView.wrap(points, "points"), (None, 2), "points")
    single = vv.is_single and vp.is_single
    # stride only matters when boxes are mapped into feature space, not here
    fmap = FeatureMap(as_float64(vv), 1)
    p64 = as_float64(vp)
    out = np.empty((vp.shape[0], vv.shape[2]))
    for i in range(vp.shape[0]):
        out[i] = bilinear_sample(fmap, p64[i])
    return restore_dtype(out, single)


def batch_rnms(boxes, scores, iou_thresh):
    """Greedy rotated NMS; returns kept row indices, best score first."""
    vb = _boxes_view(boxes, "boxes")
    vs = check_shape(ArrayView.wrap(scores, "scores"), (vb.shape[0],), "scores")
    b64 = as_float64(vb)
    s64 = as_float64(vs)
    # row index rides along as the class id so duplicates stay separable
    dets = [
        Detection(RBox(*b64[i]), i, float(s64[i])) for i in range(vb.shape[0])
    ]
    kept = rotated_nms(dets, iou_thresh, per_class=False)
    return np.array([d.class_id for d in kept], dtype=np.int64)


def batch_encode(gts, anchors):
    """Offset targets: (N,5) gt boxes against (N,5) anchors -> (N,5)."""
    vg = _boxes_view(gts, "gts")
    va = _boxes_view(anchors, "anchors")
    if vg.shape[0] != va.shape[0]:
        raise ShapeError(
            f"gts and anchors must pair up, got {vg.shape[0]} vs {va.shape[0]}"
        )
    out = encode_batch(as_float64(vg), as_float64(va))
    return restore_dtype(out, vg.is_single and va.is_single)


def batch_decode(deltas, anchors):
    """Inverse of batch_encode: offsets applied to anchors -> boxes."""
    vd = _boxes_view(deltas, "deltas")
    va = _boxes_view(anchors, "anchors")
    if vd.shape[0] != va.shape[0]:
        raise ShapeError(
            f"deltas and anchors must pair up, got {vd.shape[0]} vs {va.shape[0]}"
        )
    out = decode_batch(as_float64(vd), as_float64(va))
    return restore_dtype(out, vd.is_single and va.is_single)


def frm_reconstruct(values, stride, boxes, k1_w, k1_b, k51_w, k51_b, k15_w, k15_b):
    """Feature reconstruction over an (H,W,C) map with per-cell boxes.

    Kernel arrays follow the core layout: weights (kh, kw, cin, cout) and
    bias (cout,). Returns the refined (H,W,C) map.
    """
    vv = check_shape(ArrayView.wrap(values, "values"), (None, None, None), "values")
    h, w, _ = vv.shape
    vbox = check_shape(ArrayView.wrap(boxes, "boxes"), (h, w, 5), "boxes")
    parts = [
        ArrayView.wrap(k1_w, "k1_w"), ArrayView.wrap(k1_b, "k1_b"),
        ArrayView.wrap(k51_w, "k51_w"), ArrayView.wrap(k51_b, "k51_b"),
        ArrayView.wrap(k15_w, "k15_w"), ArrayView.wrap(k15_b, "k15_b"),
    ]
    single = vv.is_single and vbox.is_single and all(p.is_single for p in parts)
    fmap = FeatureMap(as_float64(vv), stride)
    field = BoxField(as_float64(vbox), np.ones((h, w)))
    k1, k51, k15 = (
        ConvKernel(as_float64(parts[0]), as_float64(parts[1])),
        ConvKernel(as_float64(parts[2]), as_float64(parts[3])),
        ConvKernel(as_float64(parts[4]), as_float64(parts[5])),
    )
    out = reconstruct(fmap, field, k1, k51, k15)
    return restore_dtype(out.values, single)
