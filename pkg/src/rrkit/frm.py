"""Feature-map refinement by five-point box sampling.

Each feature cell owns one box (its best-scoring candidate). The cell's
refined feature is rebuilt by bilinearly sampling the convolved map at
the box's center and four corners, summing the five samples, and adding
the convolved map back as a residual. Image coordinates map to feature
coordinates as p_feat = p_img / stride with no half-cell shift, the
inverse of the anchor-center convention; sample points are clamped to
[0, width-1] x [0, height-1] so nothing reads out of bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import coding, geometry
from .errors import EmptyLocation, InvalidArg, NonFinite, ShapeMismatch, UnknownVariant

VARIANTS = ("bilinear", "perm1", "perm2", "quant_lt", "quant_rb")


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Dense H x W x C feature grid with an image-space stride."""

    values: np.ndarray
    stride: int

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 3:
            raise ShapeMismatch(f"feature values must be (h, w, c), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NonFinite("feature map contains non-finite values")
        if int(self.stride) < 1:
            raise InvalidArg("stride must be at least 1")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "stride", int(self.stride))

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return self.values.shape[2]


@dataclass(frozen=True, eq=False)
class BoxField:
    """One box and one score per feature cell."""

    boxes: np.ndarray   # (h, w, 5)
    scores: np.ndarray  # (h, w)

    def __post_init__(self):
        b = np.ascontiguousarray(self.boxes, dtype=np.float64)
        s = np.ascontiguousarray(self.scores, dtype=np.float64)
        if b.ndim != 3 or b.shape[2] != 5:
            raise ShapeMismatch(f"box field must be (h, w, 5), got {b.shape}")
        if s.shape != b.shape[:2]:
            raise ShapeMismatch(f"scores {s.shape} do not cover grid {b.shape[:2]}")
        object.__setattr__(self, "boxes", b)
        object.__setattr__(self, "scores", s)


@dataclass(frozen=True, eq=False)
class ConvKernel:
    """Dense cross-correlation weights (kh, kw, cin, cout) plus bias."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if w.ndim != 4:
            raise ShapeMismatch(f"weights must be (kh, kw, cin, cout), got {w.shape}")
        if w.shape[0] % 2 == 0 or w.shape[1] % 2 == 0:
            raise InvalidArg("kernel spatial extents must be odd")
        if b.shape != (w.shape[3],):
            raise ShapeMismatch(f"bias {b.shape} does not match cout {w.shape[3]}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def cin(self):
        return self.weights.shape[2]

    @property
    def cout(self):
        return self.weights.shape[3]

    @staticmethod
    def identity(channels: int) -> "ConvKernel":
        w = np.eye(channels)[None, None, :, :]
        return ConvKernel(w, np.zeros(channels))

    @staticmethod
    def zeros(kh: int, kw: int, cin: int, cout: int) -> "ConvKernel":
        return ConvKernel(np.zeros((kh, kw, cin, cout)), np.zeros(cout))


@dataclass(frozen=True)
class ReconstructStats:
    """Instrumentation from one reconstruction pass."""

    sample_count: int


def _gather_weights(values, pts):
    """Corner gathers and sub-rectangle areas for clamped points.

    pts is (k, 2) feature-space (x, y). Returns the four corner value
    arrays (k, c) and the four areas (k,), where area_X is the area of
    the rectangle spanned by the point and corner X of its unit cell.
    """
    h, w = values.shape[0], values.shape[1]
    x = np.clip(pts[:, 0], 0.0, w - 1.0)
    y = np.clip(pts[:, 1], 0.0, h - 1.0)
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    x0 = np.minimum(x0, w - 1)
    y0 = np.minimum(y0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    v_lt = values[y0, x0]
    v_rt = values[y0, x1]
    v_lb = values[y1, x0]
    v_rb = values[y1, x1]
    a_lt = fx * fy
    a_rt = (1.0 - fx) * fy
    a_lb = fx * (1.0 - fy)
    a_rb = (1.0 - fx) * (1.0 - fy)
    return (v_lt, v_rt, v_lb, v_rb), (a_lt, a_rt, a_lb, a_rb)


def _sample_many(values, pts, variant="bilinear"):
    (v_lt, v_rt, v_lb, v_rb), (a_lt, a_rt, a_lb, a_rb) = _gather_weights(values, pts)
    if variant == "bilinear":
        # Opposite-corner pairing: each value weighs by the area between
        # the point and the diagonally opposite corner.
        return (v_lt * a_rb[:, None] + v_rt * a_lb[:, None]
                + v_rb * a_lt[:, None] + v_lb * a_rt[:, None])
    if variant == "perm1":
        return (v_lt * a_lt[:, None] + v_rt * a_rt[:, None]
                + v_rb * a_rb[:, None] + v_lb * a_lb[:, None])
    if variant == "perm2":
        return (v_lt * a_lb[:, None] + v_rt * a_rb[:, None]
                + v_rb * a_rt[:, None] + v_lb * a_lt[:, None])
    if variant == "quant_lt":
        return v_lt.copy()
    if variant == "quant_rb":
        return v_rb.copy()
    raise UnknownVariant(f"variant must be one of {VARIANTS}, got {variant!r}")


def bilinear_sample(f: FeatureMap, p):
    """Bilinear read of the map at feature-space point p = (x, y).

    Points outside the grid clamp to the border, so any finite p is
    valid; a point exactly on the integer lattice returns the stored
    vector unchanged.
    """
    pts = np.asarray(p, dtype=np.float64).reshape(1, 2)
    return _sample_many(f.values, pts)[0]


def interpolation_variant(f: FeatureMap, p, variant: str):
    """Sample under one of the studied weight assignments.

    "bilinear" pairs values with opposite-corner areas (identical to
    bilinear_sample), "perm1" pairs each value with its own corner's
    area, "perm2" swaps top and bottom rows of the pairing, and the
    quantized variants return a single corner ("quant_lt" the floor
    corner, "quant_rb" the ceil corner).
    """
    if variant not in VARIANTS:
        raise UnknownVariant(f"variant must be one of {VARIANTS}, got {variant!r}")
    if variant == "bilinear":
        return bilinear_sample(f, p)
    pts = np.asarray(p, dtype=np.float64).reshape(1, 2)
    return _sample_many(f.values, pts, variant)[0]


def conv2d(f: FeatureMap, k: ConvKernel) -> FeatureMap:
    """Same-size cross-correlation with zero padding."""
    if k.cin != f.channels:
        raise ShapeMismatch(f"kernel expects {k.cin} channels, map has {f.channels}")
    kh, kw = k.weights.shape[0], k.weights.shape[1]
    ph, pw = kh // 2, kw // 2
    padded = np.pad(f.values, ((ph, ph), (pw, pw), (0, 0)))
    win = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(0, 1))
    out = np.einsum("hwcij,ijco->hwo", win, k.weights, optimize=True) + k.bias
    return FeatureMap(out, f.stride)


def select_best(cand_boxes, cand_scores) -> BoxField:
    """Keep each location's highest-scoring candidate.

    cand_boxes is (h, w, k, 5) with cand_scores (h, w, k), or nested
    per-row lists with a per-location candidate list. Ties keep the
    lowest candidate index. Raises EmptyLocation for a location with no
    candidates.
    """
    if isinstance(cand_boxes, np.ndarray) and cand_boxes.ndim == 4:
        scores = np.asarray(cand_scores, dtype=np.float64)
        if scores.shape != cand_boxes.shape[:3]:
            raise ShapeMismatch("candidate scores do not match candidate boxes")
        if cand_boxes.shape[2] == 0:
            raise EmptyLocation("no candidates anywhere on the grid")
        pick = np.argmax(scores, axis=2)
        ii, jj = np.meshgrid(np.arange(cand_boxes.shape[0]),
                             np.arange(cand_boxes.shape[1]), indexing="ij")
        return BoxField(cand_boxes[ii, jj, pick], scores[ii, jj, pick])
    rows = list(cand_boxes)
    h = len(rows)
    w = len(rows[0]) if h else 0
    boxes = np.zeros((h, w, 5))
    scores = np.zeros((h, w))
    for i, row in enumerate(rows):
        for j, cell in enumerate(row):
            score_cell = cand_scores[i][j]
            if len(cell) == 0:
                raise EmptyLocation(f"location ({i}, {j}) has no candidates")
            best = int(np.argmax(np.asarray(score_cell, dtype=np.float64)))
            boxes[i, j] = np.asarray(cell[best], dtype=np.float64)
            scores[i, j] = float(score_cell[best])
    return BoxField(boxes, scores)


def _five_points(bf: BoxField, stride: int):
    # Center plus four corners per cell, in feature coordinates.
    flat = bf.boxes.reshape(-1, 5)
    quads = geometry.corners_arr(flat)
    pts = np.concatenate([flat[:, None, 0:2], quads], axis=1)
    return pts.reshape(-1, 2) / float(stride)


def _check_reconstruct_kernels(channels, k1, k51, k15):
    if k1.cin != channels or k1.cout != channels:
        raise ShapeMismatch("pointwise kernel must map C to C channels")
    if k51.cin != channels:
        raise ShapeMismatch("first branch kernel must consume the map's channels")
    if k15.cin != k51.cout:
        raise ShapeMismatch("branch kernels disagree on the intermediate channels")
    if k15.cout != channels:
        raise ShapeMismatch("branch output must match the map's channels")


def reconstruct(f: FeatureMap, bf: BoxField, k1: ConvKernel, k51: ConvKernel,
                k15: ConvKernel, return_stats: bool = False):
    """Rebuild the feature map from each cell's box.

    The map is first convolved as pointwise(k1) + k15(k51(.)); each
    cell then sums five bilinear samples of the convolved map at its
    box's center and corners, and the convolved map itself is added
    back as a residual. Exactly five points are sampled per cell.
    """
    if bf.boxes.shape[:2] != f.values.shape[:2]:
        raise ShapeMismatch(f"box field grid {bf.boxes.shape[:2]} does not match "
                            f"feature grid {f.values.shape[:2]}")
    _check_reconstruct_kernels(f.channels, k1, k51, k15)
    base = conv2d(f, k1).values + conv2d(conv2d(f, k51), k15).values
    pts = _five_points(bf, f.stride)
    samples = _sample_many(base, pts)
    h, w, c = base.shape
    summed = samples.reshape(h * w, 5, c).sum(axis=1).reshape(h, w, c)
    out = FeatureMap(summed + base, f.stride)
    if return_stats:
        return out, ReconstructStats(sample_count=int(pts.shape[0]))
    return out


def refine_step(f: FeatureMap, prev_boxes: BoxField, deltas, scores,
                k1: ConvKernel, k51: ConvKernel, k15: ConvKernel):
    """One refinement pass: decode per-cell offsets, then reconstruct.

    deltas is (h, w, 5) and scores (h, w), aligned to the grid. Returns
    the refined FeatureMap together with the new BoxField; feeding zero
    deltas leaves canonical boxes in place, so steps compose.
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    h, w = f.values.shape[:2]
    if deltas.shape != (h, w, 5):
        raise ShapeMismatch(f"deltas must be {(h, w, 5)}, got {deltas.shape}")
    if scores.shape != (h, w):
        raise ShapeMismatch(f"scores must be {(h, w)}, got {scores.shape}")
    if prev_boxes.boxes.shape[:2] != (h, w):
        raise ShapeMismatch("previous box field does not cover the feature grid")
    new_boxes = coding.decode_batch(
        deltas.reshape(-1, 5), prev_boxes.boxes.reshape(-1, 5)
    ).reshape(h, w, 5)
    bf = BoxField(new_boxes, scores)
    return reconstruct(f, bf, k1, k51, k15), bf


def write_feature_map(path, f: FeatureMap):
    """Serialize to the flat binary format.

    Header: h, w, c, stride as little-endian int32; then the values
    row-major as little-endian float32.
    """
    header = np.array([f.height, f.width, f.channels, f.stride], dtype="<i4")
    with open(path, "wb") as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(f.values, dtype="<f4").tobytes())


def read_feature_map(path) -> FeatureMap:
    """Read the binary format written by write_feature_map."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 16:
        raise InvalidArg("feature map file too short for its header")
    h, w, c, stride = (int(v) for v in np.frombuffer(raw[:16], dtype="<i4"))
    if h < 0 or w < 0 or c < 0:
        raise InvalidArg("feature map header dimensions are negative")
    body = np.frombuffer(raw[16:], dtype="<f4")
    if body.size != h * w * c:
        raise InvalidArg(f"feature map payload holds {body.size} floats, "
                         f"header promises {h * w * c}")
    return FeatureMap(body.astype(np.float64).reshape(h, w, c), stride)
