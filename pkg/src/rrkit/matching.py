"""Anchor assignment against ground truths under stage thresholds.

Label coding inside AssignResult: foreground anchors carry their gt's
class id (>= 0), background anchors -1, ignored anchors -2. Each gt's
single best anchor can be forced foreground even below the foreground
threshold so that no gt goes unmatched; the safeguard is togglable and
never fires on gts with zero overlap everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coding, geometry
from .errors import InvalidArg, InvalidConfig, ShapeMismatch

BACKGROUND = -1
IGNORE = -2

METRICS = ("hbb", "skew")


@dataclass(frozen=True)
class StageThresholds:
    """Foreground/background IoU cutoffs of one refinement stage."""

    fg: float
    bg: float

    def __post_init__(self):
        if not (0.0 <= self.bg < self.fg <= 1.0):
            raise InvalidConfig(f"need 0 <= bg < fg <= 1, got bg={self.bg} fg={self.fg}")


def stage_schedule(num_stages: int):
    """Threshold pairs per stage: (0.5, 0.4), (0.6, 0.5), then (0.7, 0.6)."""
    if num_stages < 1:
        raise InvalidArg("num_stages must be at least 1")
    out = [StageThresholds(0.5, 0.4)]
    if num_stages >= 2:
        out.append(StageThresholds(0.6, 0.5))
    out.extend(StageThresholds(0.7, 0.6) for _ in range(num_stages - 2))
    return out


@dataclass(frozen=True, eq=False)
class AssignResult:
    """Per-anchor labels, matched gt indices, and regression targets.

    labels: (n,) int64 of class id / BACKGROUND / IGNORE.
    matched_gt: (n,) int64 gt index for foreground anchors, else -1.
    deltas: (n, 5) float64 encode targets; zero rows off-foreground.
    """

    labels: np.ndarray
    matched_gt: np.ndarray
    deltas: np.ndarray

    @property
    def foreground_mask(self):
        return self.labels >= 0

    @property
    def num_foreground(self):
        return int(np.count_nonzero(self.labels >= 0))


def _iou_matrix(anchors, gt_boxes, metric):
    if metric == "skew":
        return geometry.skew_iou_matrix(anchors, gt_boxes)
    if metric == "hbb":
        return geometry.aabox_iou_matrix(
            geometry.aabb_arr(anchors), geometry.aabb_arr(gt_boxes)
        )
    raise InvalidArg(f"metric must be one of {METRICS}, got {metric!r}")


def assign(anchors, gt_boxes, gt_labels, th: StageThresholds,
           metric: str = "skew", best_anchor_for_gt: bool = True) -> AssignResult:
    """Label every anchor against the gt set under one stage's cutoffs.

    anchors (n, 5) and gt_boxes (m, 5) are packed box arrays; gt_labels
    is (m,) nonnegative class ids. metric "hbb" scores overlap between
    the boxes' circumscribing rectangles (first-stage horizontal
    matching), "skew" uses the exact rotated overlap. Per-anchor max
    IoU >= th.fg marks foreground, < th.bg background, between the two
    ignore; ties on the maximizing gt go to the lowest gt index.
    """
    anchors = np.ascontiguousarray(anchors, dtype=np.float64)
    gt_boxes = np.ascontiguousarray(gt_boxes, dtype=np.float64).reshape(-1, 5)
    gt_labels = np.asarray(gt_labels, dtype=np.int64).reshape(-1)
    if anchors.ndim != 2 or anchors.shape[1] != 5:
        raise ShapeMismatch(f"anchors must be (n, 5), got {anchors.shape}")
    if gt_boxes.shape[0] != gt_labels.shape[0]:
        raise ShapeMismatch("gt_boxes and gt_labels disagree on the gt count")
    if gt_labels.size and gt_labels.min() < 0:
        raise InvalidArg("class ids must be nonnegative")
    if metric not in METRICS:
        raise InvalidArg(f"metric must be one of {METRICS}, got {metric!r}")

    n = anchors.shape[0]
    m = gt_boxes.shape[0]
    labels = np.full(n, BACKGROUND, dtype=np.int64)
    matched = np.full(n, -1, dtype=np.int64)
    deltas = np.zeros((n, 5))
    if m == 0 or n == 0:
        return AssignResult(labels, matched, deltas)

    iou = _iou_matrix(anchors, gt_boxes, metric)
    best_gt = np.argmax(iou, axis=1)
    max_iou = iou[np.arange(n), best_gt]
    labels[max_iou >= th.bg] = IGNORE
    fg = max_iou >= th.fg
    labels[fg] = gt_labels[best_gt[fg]]
    matched[fg] = best_gt[fg]

    if best_anchor_for_gt:
        # One claim per gt; on a contested anchor the higher IoU wins
        # and equal IoUs go to the earlier gt.
        claim_iou = np.full(n, -1.0)
        claim_gt = np.full(n, -1, dtype=np.int64)
        for g in range(m):
            col = iou[:, g]
            a = int(np.argmax(col))
            if col[a] <= 0.0:
                continue
            if col[a] > claim_iou[a]:
                claim_iou[a] = col[a]
                claim_gt[a] = g
        forced = claim_gt >= 0
        labels[forced] = gt_labels[claim_gt[forced]]
        matched[forced] = claim_gt[forced]

    fg_mask = labels >= 0
    if np.any(fg_mask):
        deltas[fg_mask] = coding.encode_batch(
            gt_boxes[matched[fg_mask]], anchors[fg_mask]
        )
    return AssignResult(labels, matched, deltas)
