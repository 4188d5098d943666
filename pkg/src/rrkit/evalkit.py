"""Detection evaluation: per-class precision/recall, AP, mAP, threshold sweeps.

Matching follows the VOC lineage: detections are walked in descending score
order, each one greedily claiming the highest-IoU unmatched ground truth in
its image. Ground truths flagged difficult are invisible to the evaluator:
they can neither be matched nor counted in the recall denominator, so a
detection overlapping only difficult objects scores as a false positive.

Two AP integration modes are provided. "11point" averages the interpolated
precision at recalls 0.0, 0.1, ..., 1.0 and is the default; "all_points"
integrates the full precision envelope.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArg, UnknownClass
from .geometry import RBox, skew_iou_matrix

MODES = ("11point", "all_points")


@dataclass(frozen=True)
class GtObject:
    box: RBox
    class_id: int
    difficult: bool = False


@dataclass(frozen=True)
class DetRecord:
    """One detection tied to its source image, as read from result files."""

    image_id: str
    box: RBox
    score: float
    class_id: int

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidArg(f"score must lie in [0,1], got {self.score}")


class GroundTruthSet:
    """Ground-truth objects grouped by image.

    If a class set is declared up front, additions and queries outside it
    raise UnknownClass; otherwise any integer id is accepted.
    """

    def __init__(self, classes=None):
        self._by_image = {}
        self.classes = frozenset(classes) if classes is not None else None

    def _check_class(self, class_id):
        if self.classes is not None and class_id not in self.classes:
            raise UnknownClass(f"class {class_id} not in declared set")

    def add(self, image_id, box, class_id, difficult=False):
        self._check_class(class_id)
        self._by_image.setdefault(image_id, []).append(
            GtObject(box, int(class_id), bool(difficult))
        )

    def images(self):
        return tuple(self._by_image.keys())

    def objects(self, image_id):
        return tuple(self._by_image.get(image_id, ()))

    def num_visible(self, class_id):
        """Count of non-difficult ground truths of one class."""
        return sum(
            1
            for objs in self._by_image.values()
            for o in objs
            if o.class_id == class_id and not o.difficult
        )

    def present_classes(self):
        """Classes holding at least one non-difficult ground truth."""
        out = set()
        for objs in self._by_image.values():
            for o in objs:
                if not o.difficult:
                    out.add(o.class_id)
        return out


@dataclass(frozen=True)
class PRCurve:
    recall: np.ndarray
    precision: np.ndarray
    ap: float
    mode: str

    def __post_init__(self):
        r = np.asarray(self.recall, dtype=np.float64)
        p = np.asarray(self.precision, dtype=np.float64)
        if r.shape != p.shape:
            raise InvalidArg("recall and precision lengths differ")
        if r.size and np.any(np.diff(r) < 0):
            raise InvalidArg("recall must be nondecreasing")
        if not 0.0 <= self.ap <= 1.0:
            raise InvalidArg(f"AP out of [0,1]: {self.ap}")
        object.__setattr__(self, "recall", r)
        object.__setattr__(self, "precision", p)


def _ap_11point(recall, precision):
    ap = 0.0
    # grid points as k/10, not k*0.1: a recall of exactly 3/10 must clear
    # the 0.3 gate, and k*0.1 sits one ulp above it for some k
    for k in range(11):
        mask = recall >= k / 10.0
        ap += float(precision[mask].max()) if np.any(mask) else 0.0
    return ap / 11.0


def _ap_all_points(recall, precision):
    mrec = np.concatenate(([0.0], recall, [1.0]))
    mpre = np.concatenate(([0.0], precision, [0.0]))
    for i in range(mpre.size - 2, -1, -1):
        mpre[i] = max(mpre[i], mpre[i + 1])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


_AP_FN = {"11point": _ap_11point, "all_points": _ap_all_points}


class _ClassEval:
    """Per-class matching state with IoU rows cached across thresholds."""

    def __init__(self, dets, gts, class_id):
        recs = [d for d in dets if d.class_id == class_id]
        order = sorted(range(len(recs)), key=lambda i: (-recs[i].score, i))
        self.dets = [recs[i] for i in order]
        self.npos = gts.num_visible(class_id)

        gt_local = {}
        for image_id in gts.images():
            boxes = [
                o.box.as_array()
                for o in gts.objects(image_id)
                if o.class_id == class_id and not o.difficult
            ]
            if boxes:
                gt_local[image_id] = np.array(boxes)

        det_by_image = {}
        for k, d in enumerate(self.dets):
            det_by_image.setdefault(d.image_id, []).append(k)
        self.rows = [None] * len(self.dets)
        self.n_gt = [0] * len(self.dets)
        for image_id, det_ids in det_by_image.items():
            if image_id not in gt_local:
                continue
            mat = skew_iou_matrix(
                np.array([self.dets[k].box.as_array() for k in det_ids]),
                gt_local[image_id],
            )
            for row, k in enumerate(det_ids):
                self.rows[k] = mat[row]
                self.n_gt[k] = mat.shape[1]

    def curve(self, iou_thresh, mode):
        matched = {}
        tp = np.zeros(len(self.dets))
        fp = np.zeros(len(self.dets))
        for k, d in enumerate(self.dets):
            row = self.rows[k]
            if row is None:
                fp[k] = 1.0
                continue
            taken = matched.setdefault(d.image_id, np.zeros(self.n_gt[k], dtype=bool))
            ious = np.where(taken, -1.0, row)
            j = int(np.argmax(ious))
            if ious[j] >= iou_thresh:
                tp[k] = 1.0
                taken[j] = True
            else:
                fp[k] = 1.0
        ctp = np.cumsum(tp)
        cfp = np.cumsum(fp)
        denom = np.maximum(ctp + cfp, 1.0)
        precision = ctp / denom
        recall = ctp / self.npos if self.npos else np.zeros_like(ctp)
        ap = _AP_FN[mode](recall, precision) if (self.npos and len(self.dets)) else 0.0
        return PRCurve(recall, precision, min(ap, 1.0), mode)


def _check_mode(mode):
    if mode not in MODES:
        raise InvalidArg(f"mode must be one of {MODES}, got {mode!r}")


def evaluate_class(dets, gts, class_id, iou_thresh=0.5, mode="11point"):
    """PR curve and AP for one class.

    dets is an iterable of DetRecord; entries of other classes are ignored.
    """
    _check_mode(mode)
    gts._check_class(class_id)
    return _ClassEval(list(dets), gts, class_id).curve(iou_thresh, mode)


@dataclass(frozen=True)
class MapResult:
    per_class: dict
    mean_ap: float
    iou_thresh: float
    mode: str


def evaluate_map(dets, gts, iou_thresh=0.5, mode="11point"):
    """Mean AP over every class with at least one visible ground truth."""
    _check_mode(mode)
    dets = list(dets)
    classes = sorted(gts.present_classes())
    per_class = {
        c: evaluate_class(dets, gts, c, iou_thresh, mode).ap for c in classes
    }
    mean_ap = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return MapResult(per_class, mean_ap, iou_thresh, mode)


def map_sweep(dets, gts, thresholds, mode="11point"):
    """Evaluate mAP at each threshold, reusing IoU computations.

    Returns a list of (threshold, mAP) pairs in input order.
    """
    _check_mode(mode)
    thresholds = [float(t) for t in thresholds]
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise InvalidArg("thresholds must be strictly ascending")
    dets = list(dets)
    classes = sorted(gts.present_classes())
    evals = {c: _ClassEval(dets, gts, c) for c in classes}
    out = []
    for t in thresholds:
        if classes:
            aps = [evals[c].curve(t, mode).ap for c in classes]
            out.append((t, sum(aps) / len(aps)))
        else:
            out.append((t, 0.0))
    return out
