import math

import numpy as np
import pytest

from rrkit.anchors import (
    AnchorConfig,
    generate_level_anchors,
    generate_pyramid_anchors,
    preset,
)
from rrkit.errors import InvalidArg, InvalidConfig


class TestConfig:
    def test_default_counts(self):
        cfg = preset("default", "horizontal")
        assert cfg.num_levels == 5
        assert cfg.anchors_per_location == 21
        assert preset("default", "rotated").anchors_per_location == 126

    def test_extended_counts(self):
        cfg = preset("extended", "horizontal")
        assert cfg.anchors_per_location == 44
        assert preset("extended", "rotated").anchors_per_location == 264

    def test_unknown_preset(self):
        with pytest.raises(InvalidConfig):
            preset("huge")

    def test_length_mismatch(self):
        with pytest.raises(InvalidConfig):
            AnchorConfig((1024.0,), (8, 16), (1.0,), (1.0,), (-1.0,), "horizontal")

    def test_empty_scales(self):
        with pytest.raises(InvalidConfig):
            AnchorConfig((1024.0,), (8,), (), (1.0,), (-1.0,), "horizontal")

    def test_angle_range(self):
        with pytest.raises(InvalidConfig):
            AnchorConfig((1024.0,), (8,), (1.0,), (1.0,), (0.25,), "rotated")

    def test_bad_mode(self):
        with pytest.raises(InvalidConfig):
            AnchorConfig((1024.0,), (8,), (1.0,), (1.0,), (-1.0,), "diagonal")

    def test_from_dict_preset_override(self):
        cfg = AnchorConfig.from_dict({
            "preset": "default", "mode": "rotated",
            "angles_deg": [-90.0, -45.0],
        })
        assert cfg.mode == "rotated"
        assert len(cfg.angles) == 2
        assert cfg.angles[1] == pytest.approx(-math.pi / 4)
        assert cfg.scales == preset("default").scales

    def test_from_dict_rejects_non_mapping(self):
        with pytest.raises(InvalidConfig):
            AnchorConfig.from_dict(["default"])


class TestLevelGeneration:
    def test_level3_horizontal_count(self):
        g = generate_level_anchors(800, 800, 0, preset("default", "horizontal"))
        assert (g.feature_h, g.feature_w, g.stride) == (100, 100, 8)
        assert len(g) == 210000

    def test_level3_rotated_count(self):
        g = generate_level_anchors(800, 800, 0, preset("default", "rotated"))
        assert len(g) == 100 * 100 * 126

    def test_tiny_image_single_cell(self):
        g = generate_level_anchors(1, 1, 0, preset("default", "horizontal"))
        assert (g.feature_h, g.feature_w) == (1, 1)
        assert np.all(g.boxes[:, 0] == 4.0)
        assert np.all(g.boxes[:, 1] == 4.0)

    def test_centers_on_half_stride_lattice(self):
        cfg = AnchorConfig((64.0,), (16,), (1.0,), (1.0, 2.0), (-1.0,), "horizontal")
        g = generate_level_anchors(40, 70, 0, cfg)
        assert (g.feature_h, g.feature_w) == (3, 5)
        xs = np.unique(g.boxes[:, 0])
        ys = np.unique(g.boxes[:, 1])
        assert np.array_equal(xs, (np.arange(5) + 0.5) * 16)
        assert np.array_equal(ys, (np.arange(3) + 0.5) * 16)

    def test_location_major_order(self):
        cfg = AnchorConfig((64.0,), (16,), (1.0,), (1.0, 2.0), (-1.0,), "horizontal")
        g = generate_level_anchors(32, 32, 0, cfg)
        k = cfg.anchors_per_location
        # first k rows share the first center, next k the second column
        assert np.all(g.boxes[:k, 0] == 8.0) and np.all(g.boxes[:k, 1] == 8.0)
        assert np.all(g.boxes[k:2 * k, 0] == 24.0) and np.all(g.boxes[k:2 * k, 1] == 8.0)

    def test_bad_level_index(self):
        with pytest.raises(InvalidArg):
            generate_level_anchors(800, 800, 9, preset("default"))

    def test_bad_image_dims(self):
        with pytest.raises(InvalidArg):
            generate_level_anchors(0, 800, 0, preset("default"))

    def test_horizontal_mode_angle(self):
        g = generate_level_anchors(64, 64, 0, preset("default", "horizontal"))
        assert np.all(g.boxes[:, 4] == -math.pi / 2)

    def test_area_and_ratio_preserved(self):
        cfg = preset("default", "rotated")
        g = generate_level_anchors(8, 8, 0, cfg)
        area = cfg.base_areas[0]
        i = 0
        for s in cfg.scales:
            for r in cfg.ratios:
                for _ in cfg.angles:
                    w, h = g.boxes[i, 2], g.boxes[i, 3]
                    assert abs(w * h - area * s * s) < 1e-6 * area
                    assert min(abs(w / h - r), abs(h / w - r)) < 1e-6 * r
                    i += 1

    def test_canonical_invariants(self):
        for mode in ("horizontal", "rotated"):
            g = generate_level_anchors(64, 64, 1, preset("default", mode))
            assert np.all(g.boxes[:, 2] > 0)
            assert np.all(g.boxes[:, 3] > 0)
            assert np.all(g.boxes[:, 4] >= -math.pi / 2)
            assert np.all(g.boxes[:, 4] < 0)

    def test_deterministic_bitwise(self):
        a = generate_level_anchors(800, 800, 2, preset("default", "rotated"))
        b = generate_level_anchors(800, 800, 2, preset("default", "rotated"))
        assert np.array_equal(a.boxes, b.boxes)


class TestPyramid:
    def test_level_shapes_and_total(self):
        grids = generate_pyramid_anchors(800, 800, preset("default", "horizontal"))
        dims = [(g.feature_h, g.feature_w) for g in grids]
        assert dims == [(100, 100), (50, 50), (25, 25), (13, 13), (7, 7)]
        assert sum(g.feature_h * g.feature_w for g in grids) == 13343
        assert sum(len(g) for g in grids) == 280203

    def test_total_is_sum_of_levels(self):
        cfg = preset("default", "rotated")
        grids = generate_pyramid_anchors(600, 450, cfg)
        assert sum(len(g) for g in grids) == sum(
            len(generate_level_anchors(600, 450, i, cfg)) for i in range(5)
        )
