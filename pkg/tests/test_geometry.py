import math

import numpy as np
import pytest
from hypothesis import given, settings

import reference
from helpers import boxes_close, corner_set_distance, rboxes

from rrkit.errors import DegenerateQuad
from rrkit.geometry import (
    AABox,
    RBox,
    aabox_iou,
    aabox_iou_matrix,
    canonicalize,
    convex_intersection,
    corners,
    corners_arr,
    from_long_side,
    hbb_of,
    min_area_rect,
    polygon_area,
    skew_iou,
    skew_iou_matrix,
    skew_iou_pairs,
    to_long_side,
    transform_box,
)

SQRT2 = math.sqrt(2.0)


class TestCorners:
    def test_tall_axis_aligned(self):
        got = corners(RBox(0, 0, 4, 2, -math.pi / 2))
        want = [(-1, -2), (1, -2), (1, 2), (-1, 2)]
        assert corner_set_distance(got, want) < 1e-12

    def test_rotated_square(self):
        got = corners(RBox(5, 5, 2, 2, -math.pi / 4))
        want = [(5 + SQRT2, 5), (5 - SQRT2, 5), (5, 5 + SQRT2), (5, 5 - SQRT2)]
        assert corner_set_distance(got, want) < 1e-12

    def test_winding_is_screen_ccw(self):
        # y points down, so screen-ccw quads have negative shoelace sign.
        q = corners(RBox(3, 7, 5, 2, -0.3))
        x, y = q[:, 0], q[:, 1]
        signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
        assert signed < 0

    @given(rboxes())
    @settings(max_examples=200, deadline=None)
    def test_centroid_is_center(self, b):
        q = corners(b)
        assert abs(q[:, 0].mean() - b.cx) < 1e-9
        assert abs(q[:, 1].mean() - b.cy) < 1e-9

    @given(rboxes())
    @settings(max_examples=200, deadline=None)
    def test_matches_reference_corners(self, b):
        got = corners(b)
        want = reference.ref_corners(b.as_array())
        assert corner_set_distance(got, want) < 1e-9


class TestCanonicalize:
    def test_zero_angle_swaps(self):
        b = canonicalize(RBox(1, 2, 2, 4, 0.0))
        assert boxes_close(b, RBox(1, 2, 4, 2, -math.pi / 2), tol=1e-12)

    def test_already_canonical_fixed(self):
        b = RBox(0, 0, 2, 4, -math.pi / 2)
        assert boxes_close(canonicalize(b), b, tol=0.0)

    def test_positive_angle(self):
        b = canonicalize(RBox(0, 0, 3, 5, math.pi / 3))
        assert -math.pi / 2 <= b.theta < 0
        assert abs(b.theta - (-math.pi / 6)) < 1e-12
        assert (b.w, b.h) == (5, 3)

    @given(rboxes())
    @settings(max_examples=200, deadline=None)
    def test_preserves_corner_set(self, b):
        shifted = RBox(b.cx, b.cy, b.w, b.h, b.theta + math.pi)
        c = canonicalize(shifted)
        assert -math.pi / 2 <= c.theta < 0
        assert corner_set_distance(corners(c), corners(b)) < 1e-9


class TestMinAreaRect:
    def test_axis_aligned_quad(self):
        got = min_area_rect([(0, 0), (4, 0), (4, 2), (0, 2)])
        assert boxes_close(got, RBox(2, 1, 2, 4, -math.pi / 2), tol=1e-9)

    @given(rboxes())
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_from_corners(self, b):
        got = min_area_rect(corners(b))
        assert corner_set_distance(corners(got), corners(canonicalize(b))) < 1e-6

    def test_perturbed_rectangle(self):
        base = RBox(10, 5, 8, 3, -0.7)
        rng = np.random.default_rng(7)
        noisy = corners(base) + rng.uniform(-1e-3, 1e-3, (4, 2))
        got = min_area_rect(noisy)
        assert abs(got.cx - base.cx) < 1e-2
        assert abs(got.cy - base.cy) < 1e-2
        assert abs(got.w - base.w) < 1e-2
        assert abs(got.h - base.h) < 1e-2
        assert abs(got.theta - base.theta) < 1e-2

    def test_collinear_raises(self):
        with pytest.raises(DegenerateQuad):
            min_area_rect([(0, 0), (1, 1), (2, 2), (3, 3)])

    def test_coincident_raises(self):
        with pytest.raises(DegenerateQuad):
            min_area_rect([(1, 1)] * 4)

    def test_encloses_general_point_sets(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform(0, 20, (9, 2))
        rect = min_area_rect(pts)
        for nx, ny, d in reference.box_halfplanes(rect.as_array()):
            assert np.all(nx * pts[:, 0] + ny * pts[:, 1] <= d + 1e-9)


class TestLongSide:
    def test_tall_box_maps_to_angle_zero(self):
        l = to_long_side(RBox(0, 0, 2, 4, -math.pi / 2))
        assert (l.long, l.short) == (4, 2)
        assert abs(l.theta) < 1e-12

    def test_square_roundtrip(self):
        b = RBox(3, 3, 2, 2, -0.5)
        rt = from_long_side(to_long_side(b))
        assert corner_set_distance(corners(rt), corners(b)) < 1e-9

    @given(rboxes())
    @settings(max_examples=200, deadline=None)
    def test_roundtrip_corner_sets(self, b):
        l = to_long_side(b)
        assert l.long >= l.short > 0
        assert -math.pi / 2 <= l.theta < math.pi / 2
        rt = from_long_side(l)
        assert -math.pi / 2 <= rt.theta < 0
        assert corner_set_distance(corners(rt), corners(b)) < 1e-9


class TestHbb:
    def test_tall_box(self):
        got = hbb_of(RBox(0, 0, 10, 4, -math.pi / 2))
        for v, want in zip((got.xmin, got.ymin, got.xmax, got.ymax), (-2, -5, 2, 5)):
            assert abs(v - want) < 1e-12

    def test_axis_aligned_extents(self):
        got = hbb_of(RBox(3, 2, 4, 6, -math.pi / 2))
        assert abs(got.xmin - 0) < 1e-12 and abs(got.xmax - 6) < 1e-12
        assert abs(got.ymin - 0) < 1e-12 and abs(got.ymax - 4) < 1e-12

    def test_diamond(self):
        got = hbb_of(RBox(0, 0, 2, 2, -math.pi / 4))
        for v, want in zip((got.xmin, got.ymin, got.xmax, got.ymax),
                           (-SQRT2, -SQRT2, SQRT2, SQRT2)):
            assert abs(v - want) < 1e-12


class TestConvexIntersection:
    def test_self_intersection(self):
        q = corners(RBox(1, 1, 3, 2, -0.4))
        got = convex_intersection(q, q)
        assert abs(polygon_area(got) - 6.0) < 1e-9

    def test_disjoint(self):
        a = corners(RBox(0, 0, 1, 1, -math.pi / 2))
        b = corners(RBox(10, 10, 1, 1, -math.pi / 2))
        assert convex_intersection(a, b).shape == (0, 2)

    def test_offset_unit_squares(self):
        a = corners(RBox(0.5, 0.5, 1, 1, -math.pi / 2))
        b = corners(RBox(1.0, 0.5, 1, 1, -math.pi / 2))
        got = convex_intersection(a, b)
        assert abs(polygon_area(got) - 0.5) < 1e-12
        assert abs(got[:, 0].min() - 0.5) < 1e-12
        assert abs(got[:, 0].max() - 1.0) < 1e-12

    def test_crossed_squares_octagon(self):
        a = corners(RBox(0, 0, 1, 1, -math.pi / 2))
        b = corners(RBox(0, 0, 1, 1, -math.pi / 4))
        got = convex_intersection(a, b)
        assert got.shape[0] == 8
        assert abs(polygon_area(got) - 2 * (SQRT2 - 1)) < 1e-12

    def test_accepts_math_ccw_clip_polygon(self):
        a = corners(RBox(0.5, 0.5, 1, 1, -math.pi / 2))
        b = corners(RBox(1.0, 0.5, 1, 1, -math.pi / 2))[::-1]
        assert abs(polygon_area(convex_intersection(a, b)) - 0.5) < 1e-12

    @given(rboxes(), rboxes())
    @settings(max_examples=150, deadline=None)
    def test_area_bounded_by_inputs(self, a, b):
        inter = polygon_area(convex_intersection(corners(a), corners(b)))
        assert inter <= min(a.area, b.area) + 1e-6


class TestPolygonArea:
    def test_unit_square(self):
        assert polygon_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == 1.0

    def test_empty(self):
        assert polygon_area(np.zeros((0, 2))) == 0.0

    def test_winding_independent(self):
        p = [(0, 0), (2, 0), (2, 3), (0, 3)]
        assert polygon_area(p) == polygon_area(p[::-1]) == 6.0


class TestSkewIoU:
    def test_identical(self):
        b = RBox(4, 4, 10, 10, -math.pi / 2)
        assert skew_iou(b, b) == pytest.approx(1.0, abs=1e-12)

    def test_crossed_squares(self):
        a = RBox(0, 0, 10, 10, -math.pi / 2)
        b = RBox(0, 0, 10, 10, -math.pi / 4)
        assert abs(skew_iou(a, b) - 1 / SQRT2) < 1e-9

    def test_touching_edges_are_zero(self):
        # The shared edge survives on-edge classification as a sliver of
        # floating-point dust, far below any usable overlap threshold.
        a = RBox(0, 0, 2, 2, -math.pi / 2)
        b = RBox(2, 0, 2, 2, -math.pi / 2)
        assert abs(skew_iou(a, b)) < 1e-12

    def test_disjoint(self):
        a = RBox(0, 0, 2, 2, -math.pi / 2)
        b = RBox(50, 50, 2, 2, -0.3)
        assert skew_iou(a, b) == 0.0

    def test_degenerate_box(self):
        a = RBox(0, 0, 0, 0, -math.pi / 2)
        b = RBox(0, 0, 2, 2, -math.pi / 2)
        assert skew_iou(a, b) == 0.0

    def test_symmetry_bitwise(self):
        rng = np.random.default_rng(11)
        boxes = reference.rand_boxes(rng, 400, center_range=60.0)
        for i in range(0, 400, 2):
            a = RBox.from_array(boxes[i])
            b = RBox.from_array(boxes[i + 1])
            assert skew_iou(a, b) == skew_iou(b, a)

    def test_against_halfplane_reference(self):
        rng = np.random.default_rng(5)
        A = reference.rand_boxes(rng, 500, center_range=120.0)
        B = reference.rand_boxes(rng, 500, center_range=120.0)
        got = skew_iou_pairs(A, B)
        for i in range(500):
            assert abs(got[i] - reference.ref_skew_iou(A[i], B[i])) < 1e-9

    def test_against_monte_carlo(self):
        rng = np.random.default_rng(9)
        A = reference.rand_boxes(rng, 3, center_range=50.0)
        B = reference.rand_boxes(rng, 3, center_range=50.0)
        got = skew_iou_pairs(A, B)
        for i in range(3):
            assert abs(got[i] - reference.mc_iou(A[i], B[i], seed=i)) < 1e-3

    def test_axis_aligned_matches_aabox_iou(self):
        a = RBox(2, 3, 4, 6, -math.pi / 2)
        b = RBox(4, 4, 2, 5, -math.pi / 2)
        assert abs(skew_iou(a, b) - aabox_iou(hbb_of(a), hbb_of(b))) < 1e-12

    def test_rigid_invariance(self):
        a = RBox(3, 1, 7, 2, -0.9)
        b = RBox(4, 2, 5, 3, -0.2)
        base = skew_iou(a, b)
        for dx, dy, rot in ((13.0, -4.5, 0.0), (0.0, 0.0, -0.77), (5.0, 8.0, 1.1)):
            ta = transform_box(RBox(a.cx + dx, a.cy + dy, a.w, a.h, a.theta),
                               "rotate", 100, 100, rot)
            tb = transform_box(RBox(b.cx + dx, b.cy + dy, b.w, b.h, b.theta),
                               "rotate", 100, 100, rot)
            assert abs(skew_iou(ta, tb) - base) < 1e-9

    @given(rboxes(), rboxes())
    @settings(max_examples=200, deadline=None)
    def test_bounded_and_symmetric(self, a, b):
        v = skew_iou(a, b)
        assert 0.0 <= v <= 1.0
        assert v == skew_iou(b, a)


class TestBatchConsistency:
    def test_pairs_match_scalar(self):
        rng = np.random.default_rng(21)
        A = reference.rand_boxes(rng, 64)
        B = reference.rand_boxes(rng, 64)
        got = skew_iou_pairs(A, B)
        for i in range(64):
            assert got[i] == skew_iou(RBox.from_array(A[i]), RBox.from_array(B[i]))

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(22)
        A = reference.rand_boxes(rng, 12, center_range=40.0)
        B = reference.rand_boxes(rng, 9, center_range=40.0)
        M = skew_iou_matrix(A, B)
        assert M.shape == (12, 9)
        for i in range(12):
            for j in range(9):
                assert M[i, j] == skew_iou(RBox.from_array(A[i]), RBox.from_array(B[j]))

    def test_matrix_threaded_matches_serial(self, monkeypatch):
        rng = np.random.default_rng(23)
        A = reference.rand_boxes(rng, 300, center_range=150.0)
        B = reference.rand_boxes(rng, 300, center_range=150.0)
        monkeypatch.setenv("RRKIT_THREADS", "1")
        serial = skew_iou_matrix(A, B)
        monkeypatch.setenv("RRKIT_THREADS", "4")
        threaded = skew_iou_matrix(A, B)
        assert np.array_equal(serial, threaded)

    def test_empty_inputs(self):
        assert skew_iou_matrix(np.zeros((0, 5)), np.zeros((3, 5))).shape == (0, 3)
        assert skew_iou_pairs(np.zeros((0, 5)), np.zeros((0, 5))).shape == (0,)


class TestAABoxIoU:
    def test_identical(self):
        a = AABox(0, 0, 2, 2)
        assert aabox_iou(a, a) == 1.0

    def test_disjoint(self):
        assert aabox_iou(AABox(0, 0, 1, 1), AABox(5, 5, 6, 6)) == 0.0

    def test_offset_unit_squares(self):
        got = aabox_iou(AABox(0, 0, 1, 1), AABox(0.5, 0, 1.5, 1))
        assert abs(got - 1 / 3) < 1e-12

    def test_matrix_matches_scalar(self):
        rng = np.random.default_rng(2)
        lo = rng.uniform(0, 50, (6, 2))
        hi = lo + rng.uniform(1, 20, (6, 2))
        A = np.hstack([lo, hi])
        M = aabox_iou_matrix(A, A)
        for i in range(6):
            for j in range(6):
                want = aabox_iou(AABox(*A[i]), AABox(*A[j]))
                assert abs(M[i, j] - want) < 1e-12


class TestTransformBox:
    def test_flip_h_involution(self):
        b = RBox(10, 20, 6, 3, -0.8)
        rt = transform_box(transform_box(b, "flip-h", 100, 80), "flip-h", 100, 80)
        assert boxes_close(rt, canonicalize(b), tol=1e-9)

    def test_flip_v_involution(self):
        b = RBox(10, 20, 6, 3, -0.8)
        rt = transform_box(transform_box(b, "flip-v", 100, 80), "flip-v", 100, 80)
        assert boxes_close(rt, canonicalize(b), tol=1e-9)

    def test_rotate_zero_identity(self):
        b = RBox(10, 20, 6, 3, -0.8)
        assert boxes_close(transform_box(b, "rotate", 100, 80, 0.0), b, tol=1e-12)

    def test_rotate_corner_oracle(self):
        b = RBox(30, 40, 10, 4, -0.9)
        ang = math.pi / 6
        got = transform_box(b, "rotate", 100, 80, ang)
        c, s = math.cos(ang), math.sin(ang)
        src = corners(b) - np.array([50.0, 40.0])
        want = np.stack([c * src[:, 0] - s * src[:, 1],
                         s * src[:, 0] + c * src[:, 1]], axis=1) + np.array([50.0, 40.0])
        assert corner_set_distance(corners(got), want) < 1e-9

    def test_flip_h_corner_oracle(self):
        b = RBox(30, 40, 10, 4, -0.9)
        got = transform_box(b, "flip-h", 100, 80)
        want = corners(b) * np.array([-1.0, 1.0]) + np.array([100.0, 0.0])
        assert corner_set_distance(corners(got), want) < 1e-9

    def test_unknown_op(self):
        with pytest.raises(ValueError):
            transform_box(RBox(0, 0, 1, 1, -1.0), "shear", 10, 10)
