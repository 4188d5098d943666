"""DOTA annotation parsing, tiling plans, and detection file round-trips.

Annotation text format, one object per line after any headers:

    x1 y1 x2 y2 x3 y3 x4 y4 category difficult

Header lines (imagesource:, gsd:, anything whose first token is not a
number) are carried through untouched. The difficult flag may be omitted
and defaults to 0.

Tiling only plans windows and remaps coordinates. No pixels are read or
written; cropping images is the caller's job.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateQuad, InvalidArg, ParseError, UnknownTile
from .geometry import (
    RBox,
    convex_intersection,
    corners,
    min_area_rect,
    polygon_area,
)
from .postproc import Detection


@dataclass(frozen=True)
class DotaObject:
    quad: np.ndarray  # (4, 2) corner coordinates
    category: str
    difficult: int = 0

    def __post_init__(self):
        q = np.asarray(self.quad, dtype=np.float64).reshape(4, 2)
        if not np.all(np.isfinite(q)):
            raise InvalidArg("quad coordinates must be finite")
        if not self.category:
            raise InvalidArg("category must be nonempty")
        if self.difficult not in (0, 1):
            raise InvalidArg(f"difficult flag must be 0 or 1, got {self.difficult}")
        object.__setattr__(self, "quad", q)


@dataclass(frozen=True)
class DotaAnnotation:
    objects: tuple
    headers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "headers", tuple(self.headers))


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def parse_dota(text):
    """Parse one image's annotation text into a DotaAnnotation."""
    headers = []
    objects = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if not _is_number(tokens[0]):
            headers.append(line)
            continue
        if len(tokens) < 9:
            raise ParseError(line_no, f"expected 8 coordinates and a category, got {len(tokens)} tokens")
        coords = []
        for t in tokens[:8]:
            if not _is_number(t):
                raise ParseError(line_no, f"bad coordinate {t!r}")
            coords.append(float(t))
        if not np.all(np.isfinite(coords)):
            raise ParseError(line_no, "non-finite coordinate")
        category = tokens[8]
        if _is_number(category):
            raise ParseError(line_no, f"category looks numeric: {category!r}")
        if len(tokens) == 9:
            difficult = 0
        elif len(tokens) == 10:
            if tokens[9] not in ("0", "1"):
                raise ParseError(line_no, f"difficult flag must be 0 or 1, got {tokens[9]!r}")
            difficult = int(tokens[9])
        else:
            raise ParseError(line_no, f"trailing tokens after difficult flag: {tokens[10:]}")
        objects.append(DotaObject(np.array(coords).reshape(4, 2), category, difficult))
    return DotaAnnotation(tuple(objects), tuple(headers))


@dataclass(frozen=True)
class TilePlan:
    windows: tuple  # (x0, y0, x1, y1) per tile, source pixels
    tile: int
    overlap: int
    scale: float  # output-side pixels per source pixel
    padded: bool
    image_w: int
    image_h: int

    def __len__(self):
        return len(self.windows)


def _axis_origins(dim, tile, stride):
    if dim <= tile:
        return [0]
    out = []
    x = 0
    while True:
        if x + tile >= dim:
            out.append(dim - tile)
            return out
        out.append(x)
        x += stride


def tile_plan(image_w, image_h, tile=600, overlap=150, out=800):
    """Plan overlapping square crops covering an image.

    Window origins advance by tile - overlap; the final window per axis is
    clamped so it ends at the image edge rather than spilling past it. An
    image smaller than the tile gets a single whole-image window with the
    padded flag set.
    """
    if tile <= 0 or out <= 0:
        raise InvalidArg("tile and out must be positive")
    if not 0 <= overlap < tile:
        raise InvalidArg(f"need tile > overlap >= 0, got tile={tile} overlap={overlap}")
    if image_w <= 0 or image_h <= 0:
        raise InvalidArg("image dimensions must be positive")
    stride = tile - overlap
    padded = image_w < tile or image_h < tile
    if padded:
        windows = ((0, 0, image_w, image_h),)
    else:
        xs = _axis_origins(image_w, tile, stride)
        ys = _axis_origins(image_h, tile, stride)
        windows = tuple(
            (x, y, x + tile, y + tile) for y in ys for x in xs
        )
    return TilePlan(windows, tile, overlap, out / tile, padded, image_w, image_h)


def remap_gt_to_tile(ann, window, scale, min_inside_frac=0.25):
    """Carry annotation objects into one tile's output coordinate frame.

    Objects keep their quad (translated and scaled) when fully inside the
    window. Partially covered objects are clipped to the window and refit
    with a minimum-area rotated rectangle; objects covered below
    min_inside_frac of their own area are dropped.
    """
    if not 0.0 <= min_inside_frac <= 1.0:
        raise InvalidArg(f"min_inside_frac must lie in [0,1], got {min_inside_frac}")
    x0, y0, x1, y1 = window
    win_poly = np.array(
        [[x0, y0], [x0, y1], [x1, y1], [x1, y0]], dtype=np.float64
    )
    origin = np.array([x0, y0], dtype=np.float64)
    out = []
    for obj in ann.objects:
        area = polygon_area(obj.quad)
        if area == 0.0:
            continue
        clipped = convex_intersection(obj.quad, win_poly)
        inside = polygon_area(clipped)
        if inside < min_inside_frac * area:
            continue
        if inside >= area * (1.0 - 1e-9):
            quad = (obj.quad - origin) * scale
        else:
            try:
                refit = min_area_rect(clipped)
            except DegenerateQuad:
                continue
            local = RBox(
                (refit.cx - x0) * scale,
                (refit.cy - y0) * scale,
                refit.w * scale,
                refit.h * scale,
                refit.theta,
            )
            quad = corners(local)
        out.append(DotaObject(quad, obj.category, obj.difficult))
    return out


def format_task1_line(image_id, score, box):
    """One submission line: image id, score, then the four box corners."""
    q = corners(box).reshape(-1)
    nums = " ".join(f"{v:.6f}" for v in q)
    return f"{image_id} {score:.6f} {nums}"


def write_dota_task1(dets_by_category, out_dir):
    """Write Task1_<category>.txt files, one detection per line.

    dets_by_category maps a category name to a list of
    (image_id, score, RBox) triples. Returns the written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for category, entries in sorted(dets_by_category.items()):
        path = os.path.join(out_dir, f"Task1_{category}.txt")
        with open(path, "w", encoding="utf-8") as fh:
            for image_id, score, box in entries:
                fh.write(format_task1_line(image_id, score, box) + "\n")
        paths.append(path)
    return paths


def read_dota_task1(text):
    """Parse submission-format text back into (image_id, score, quad) rows."""
    out = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 10:
            raise ParseError(line_no, f"expected 10 tokens, got {len(tokens)}")
        if not all(_is_number(t) for t in tokens[1:]):
            raise ParseError(line_no, "non-numeric score or coordinate")
        score = float(tokens[1])
        quad = np.array([float(t) for t in tokens[2:]]).reshape(4, 2)
        out.append((tokens[0], score, quad))
    return out


def merge_tile_detections(per_tile, plan):
    """Map per-tile detections back into source-image coordinates.

    per_tile maps a window index in plan.windows to detections expressed in
    that tile's output frame. The caller runs rotated_nms afterwards to
    collapse duplicates from overlapping tiles.
    """
    merged = []
    for tile_idx, dets in per_tile.items():
        if not 0 <= tile_idx < len(plan.windows):
            raise UnknownTile(f"tile index {tile_idx} outside plan of {len(plan.windows)}")
        x0, y0, _, _ = plan.windows[tile_idx]
        inv = 1.0 / plan.scale
        for d in dets:
            b = d.box
            merged.append(
                Detection(
                    RBox(x0 + b.cx * inv, y0 + b.cy * inv, b.w * inv, b.h * inv, b.theta),
                    d.class_id,
                    d.score,
                    d.stage,
                )
            )
    return merged
