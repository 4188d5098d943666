"""Anchor grid generation over feature-pyramid levels.

A level's feature map is ceil(image_dim / stride) cells per axis, with
anchor centers at (index + 0.5) * stride; both rules are conventions
fixed here. Sizes come from w = sqrt(area * scale^2 * ratio) and
h = sqrt(area * scale^2 / ratio) before canonicalization, which keeps
w * h == area * scale^2 for every ratio. The stride set 8..128 for the
five default levels is the standard single-stage pyramid assignment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import InvalidArg, InvalidConfig

DEFAULT_AREAS = (32.0 ** 2, 64.0 ** 2, 128.0 ** 2, 256.0 ** 2, 512.0 ** 2)
DEFAULT_STRIDES = (8, 16, 32, 64, 128)
DEFAULT_SCALES = (2.0 ** 0.0, 2.0 ** (1.0 / 3.0), 2.0 ** (2.0 / 3.0))
DEFAULT_RATIOS = (1.0, 1.0 / 2.0, 2.0, 1.0 / 3.0, 3.0, 5.0, 1.0 / 5.0)
# Six angles, one quarter turn covered in 15 degree steps.
DEFAULT_ANGLES = tuple(-math.pi / 2.0 + k * math.pi / 12.0 for k in range(6))

EXTENDED_SCALES = (0.5,) + DEFAULT_SCALES
EXTENDED_RATIOS = DEFAULT_RATIOS + (7.0, 1.0 / 7.0, 9.0, 1.0 / 9.0)

MODES = ("horizontal", "rotated")


@dataclass(frozen=True)
class AnchorConfig:
    """Anchor family description for a whole pyramid."""

    base_areas: tuple
    strides: tuple
    scales: tuple
    ratios: tuple
    angles: tuple
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidConfig(f"mode must be one of {MODES}, got {self.mode!r}")
        if len(self.base_areas) != len(self.strides):
            raise InvalidConfig("base_areas and strides must pair up level by level")
        if not self.base_areas:
            raise InvalidConfig("need at least one pyramid level")
        if not (self.scales and self.ratios and self.angles):
            raise InvalidConfig("scales, ratios, and angles must be non-empty")
        if any(a <= 0 for a in self.base_areas) or any(s <= 0 for s in self.strides):
            raise InvalidConfig("areas and strides must be positive")
        if any(s <= 0 for s in self.scales) or any(r <= 0 for r in self.ratios):
            raise InvalidConfig("scales and ratios must be positive")
        for ang in self.angles:
            if not (-math.pi / 2.0 <= ang < 0.0):
                raise InvalidConfig("angles must lie in [-pi/2, 0)")

    @property
    def num_levels(self):
        return len(self.base_areas)

    @property
    def anchors_per_location(self):
        n = len(self.scales) * len(self.ratios)
        if self.mode == "rotated":
            n *= len(self.angles)
        return n

    @staticmethod
    def from_dict(d) -> "AnchorConfig":
        """Build from a plain mapping, e.g. a parsed config file section.

        Recognized keys: preset (default/extended), mode, base_areas,
        strides, scales, ratios, angles_deg or angles. Explicit keys
        override the preset's values.
        """
        if not isinstance(d, dict):
            raise InvalidConfig("anchor config must be a mapping")
        name = d.get("preset", "default")
        mode = d.get("mode", "horizontal")
        base = preset(name, mode)
        areas = tuple(float(v) for v in d.get("base_areas", base.base_areas))
        strides = tuple(int(v) for v in d.get("strides", base.strides))
        scales = tuple(float(v) for v in d.get("scales", base.scales))
        ratios = tuple(float(v) for v in d.get("ratios", base.ratios))
        if "angles_deg" in d:
            angles = tuple(math.radians(float(v)) for v in d["angles_deg"])
        else:
            angles = tuple(float(v) for v in d.get("angles", base.angles))
        return AnchorConfig(areas, strides, scales, ratios, angles, mode)


def preset(name: str, mode: str = "horizontal") -> AnchorConfig:
    """Named anchor families: "default" or the denser "extended"."""
    if name == "default":
        return AnchorConfig(DEFAULT_AREAS, DEFAULT_STRIDES, DEFAULT_SCALES,
                            DEFAULT_RATIOS, DEFAULT_ANGLES, mode)
    if name == "extended":
        return AnchorConfig(DEFAULT_AREAS, DEFAULT_STRIDES, EXTENDED_SCALES,
                            EXTENDED_RATIOS, DEFAULT_ANGLES, mode)
    raise InvalidConfig(f"unknown anchor preset {name!r}")


@dataclass(frozen=True, eq=False)
class AnchorGrid:
    """All anchors of one pyramid level, flattened location-major."""

    level: int
    feature_h: int
    feature_w: int
    stride: int
    boxes: np.ndarray  # (feature_h * feature_w * per_location, 5), canonical

    def __len__(self):
        return self.boxes.shape[0]


def _base_anchors(cfg: AnchorConfig, level_index: int):
    # Per-location template, enumerated scale-major, then ratio, then angle.
    area = cfg.base_areas[level_index]
    angles = cfg.angles if cfg.mode == "rotated" else (0.0,)
    rows = []
    for s in cfg.scales:
        for r in cfg.ratios:
            w = math.sqrt(area * s * s * r)
            h = math.sqrt(area * s * s / r)
            for ang in angles:
                rows.append((0.0, 0.0, w, h, ang))
    return geometry.canonicalize_arr(np.array(rows))


def generate_level_anchors(image_h: int, image_w: int, level_index: int,
                           cfg: AnchorConfig) -> AnchorGrid:
    """Anchor grid of one level for an image_h x image_w input."""
    if image_h <= 0 or image_w <= 0:
        raise InvalidArg("image dimensions must be positive")
    if not (0 <= level_index < cfg.num_levels):
        raise InvalidArg(f"level_index {level_index} outside 0..{cfg.num_levels - 1}")
    stride = cfg.strides[level_index]
    fh = -(-image_h // stride)
    fw = -(-image_w // stride)
    base = _base_anchors(cfg, level_index)
    k = base.shape[0]
    xs = (np.arange(fw) + 0.5) * stride
    ys = (np.arange(fh) + 0.5) * stride
    boxes = np.tile(base, (fh * fw, 1))
    centers_x = np.repeat(np.tile(xs, fh), k)
    centers_y = np.repeat(np.repeat(ys, fw), k)
    boxes[:, 0] = centers_x
    boxes[:, 1] = centers_y
    return AnchorGrid(level_index, int(fh), int(fw), int(stride), boxes)


def generate_pyramid_anchors(image_h: int, image_w: int,
                             cfg: AnchorConfig) -> list:
    """Per-level grids for the whole pyramid, shallowest level first."""
    return [generate_level_anchors(image_h, image_w, i, cfg)
            for i in range(cfg.num_levels)]
