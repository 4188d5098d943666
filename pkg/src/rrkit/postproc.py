"""Detection post-processing: rotated NMS, stage merging, score filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import InvalidArg
from .geometry import RBox


@dataclass(frozen=True)
class Detection:
    box: RBox
    class_id: int
    score: float
    stage: int = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidArg(f"score must lie in [0,1], got {self.score}")


def _suppress_group(dets, order, iou_thresh):
    """Greedy NMS over one suppression group. order holds indices into dets,
    already sorted by descending score (ties by original position)."""
    n = len(order)
    boxes = np.empty((n, 5))
    for k, idx in enumerate(order):
        boxes[k] = dets[idx].box.as_array()
    corners = np.empty((n, 4, 2))
    aabbs = np.empty((n, 4))
    kernels.corners_batch(boxes, corners)
    kernels.aabb_batch(boxes, aabbs)
    suppressed = np.zeros(n, dtype=np.bool_)
    kernels.nms_suppress(boxes, corners, aabbs, iou_thresh, suppressed)
    return [order[k] for k in range(n) if not suppressed[k]]


def rotated_nms(dets, iou_thresh, per_class=True):
    """Greedy non-maximum suppression under rotated-box IoU.

    Walks detections in descending score order and drops any whose IoU with
    an already-kept detection reaches iou_thresh (inclusive). With per_class
    set, suppression only happens between detections of the same class.
    Equal scores keep their input order. Output is sorted by descending
    score.
    """
    if not 0.0 < iou_thresh <= 1.0:
        raise InvalidArg(f"iou_thresh must lie in (0,1], got {iou_thresh}")
    dets = list(dets)
    if not dets:
        return []
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    if per_class:
        groups = {}
        for idx in order:
            groups.setdefault(dets[idx].class_id, []).append(idx)
        kept = []
        for group in groups.values():
            kept.extend(_suppress_group(dets, group, iou_thresh))
    else:
        kept = _suppress_group(dets, order, iou_thresh)
    kept.sort(key=lambda i: (-dets[i].score, i))
    return [dets[i] for i in kept]


def merge_stages(stage_dets, iou_thresh, per_class=True):
    """Pool detections from several refinement stages and de-duplicate.

    Concatenates every stage's output and runs one rotated_nms pass over the
    union, so a box detected by two stages survives only once.
    """
    stage_dets = [list(s) for s in stage_dets]
    if not stage_dets:
        raise InvalidArg("need at least one stage")
    pooled = [d for stage in stage_dets for d in stage]
    return rotated_nms(pooled, iou_thresh, per_class=per_class)


def score_filter(dets, min_score):
    """Keep detections scoring at least min_score, preserving order."""
    if not 0.0 <= min_score <= 1.0:
        raise InvalidArg(f"min_score must lie in [0,1], got {min_score}")
    return [d for d in dets if d.score >= min_score]
