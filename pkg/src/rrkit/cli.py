"""Command-line front end.

Subcommands wrap the library kernels so pipelines can be scripted without
writing Python: pairwise IoU tables, rotated NMS over detection files,
evaluation against DOTA-format ground truth, tiling plans, feature-map
reconstruction, and microbenchmarks.

Detection text files hold one detection per line:

    class_id score cx cy w h theta

Failures print a single machine-readable line to stderr,
``error: <Kind>: <detail>``, and exit nonzero. RRKIT_THREADS caps worker
threads for the batched geometry paths.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
import yaml

from . import evalkit, frm, geometry, postproc
from .dataio import (
    merge_tile_detections,
    parse_dota,
    read_dota_task1,
    remap_gt_to_tile,
    tile_plan,
)
from .errors import InvalidArg, InvalidConfig, ParseError, RRKitError
from .geometry import RBox
from .matching import stage_schedule
from .postproc import Detection, rotated_nms

SWEEP_DEFAULT = tuple(np.round(np.arange(0.5, 0.96, 0.05), 2))


@dataclass(frozen=True)
class ToolConfig:
    anchor_preset: str = "default"
    stages: int = 2
    nms_iou: float = 0.5
    iou_thresh: float = 0.5
    eval_mode: str = "11point"
    seed: int = 0

    def __post_init__(self):
        if self.anchor_preset not in ("default", "extended"):
            raise InvalidConfig(f"unknown anchor preset {self.anchor_preset!r}")
        if self.stages < 1:
            raise InvalidConfig("stages must be >= 1")
        stage_schedule(self.stages)  # bounds-check the threshold ladder
        if not 0.0 < self.nms_iou <= 1.0:
            raise InvalidConfig(f"nms_iou must lie in (0,1], got {self.nms_iou}")
        if not 0.0 < self.iou_thresh <= 1.0:
            raise InvalidConfig(f"iou_thresh must lie in (0,1], got {self.iou_thresh}")
        if self.eval_mode not in evalkit.MODES:
            raise InvalidConfig(f"eval_mode must be one of {evalkit.MODES}")


def load_config(path):
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise InvalidConfig(f"bad config syntax: {e}") from e
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise InvalidConfig("config root must be a mapping")
    known = {f.name for f in fields(ToolConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
    try:
        return ToolConfig(**raw)
    except TypeError as e:
        raise InvalidConfig(str(e)) from e


def _parse_floats(tokens, line_no):
    out = []
    for t in tokens:
        try:
            out.append(float(t))
        except ValueError:
            raise ParseError(line_no, f"bad number {t!r}") from None
    if not np.all(np.isfinite(out)):
        raise ParseError(line_no, "non-finite value")
    return out


def parse_det_lines(text):
    """Detection-file lines into Detection objects; '#' starts a comment."""
    dets = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 7:
            raise ParseError(line_no, f"expected 7 fields, got {len(tokens)}")
        vals = _parse_floats(tokens, line_no)
        if vals[0] != int(vals[0]):
            raise ParseError(line_no, f"class id must be integral, got {tokens[0]}")
        try:
            dets.append(Detection(RBox(*vals[2:7]), int(vals[0]), vals[1]))
        except RRKitError as e:
            raise ParseError(line_no, str(e)) from None
    return dets


def format_det_line(d):
    b = d.box
    return (
        f"{d.class_id} {d.score:.6f} "
        f"{b.cx:.6f} {b.cy:.6f} {b.w:.6f} {b.h:.6f} {b.theta:.6f}"
    )


def cmd_iou(args, cfg, out):
    text = Path(args.pairs).read_text(encoding="utf-8")
    pairs_a, pairs_b = [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        halves = line.split("|")
        if len(halves) != 2:
            raise ParseError(line_no, "expected 'cx cy w h theta | cx cy w h theta'")
        va = _parse_floats(halves[0].split(), line_no)
        vb = _parse_floats(halves[1].split(), line_no)
        if len(va) != 5 or len(vb) != 5:
            raise ParseError(line_no, "each side needs 5 numbers")
        pairs_a.append(va)
        pairs_b.append(vb)
    if pairs_a:
        vals = geometry.skew_iou_pairs(np.array(pairs_a), np.array(pairs_b))
        for v in vals:
            out.write(f"{v:.6f}\n")
    return 0


def cmd_nms(args, cfg, out):
    dets = parse_det_lines(Path(args.dets).read_text(encoding="utf-8"))
    thresh = args.iou if args.iou is not None else cfg.nms_iou
    kept = rotated_nms(dets, thresh, per_class=not args.no_per_class)
    for d in kept:
        out.write(format_det_line(d) + "\n")
    return 0


def _load_eval_inputs(dets_dir, gts_dir):
    gts_dir = Path(gts_dir)
    dets_dir = Path(dets_dir)
    gt_files = sorted(gts_dir.glob("*.txt"))
    if not gt_files:
        raise InvalidArg(f"no ground-truth files in {gts_dir}")
    categories = set()
    parsed = {}
    for path in gt_files:
        ann = parse_dota(path.read_text(encoding="utf-8"))
        parsed[path.stem] = ann
        categories.update(o.category for o in ann.objects)
    det_files = sorted(dets_dir.glob("Task1_*.txt"))
    det_categories = {p.stem[len("Task1_"):] for p in det_files}
    for c in sorted(det_categories - categories):
        print(f"warning: detections for category {c!r} absent from ground truth", file=sys.stderr)
    class_ids = {c: i for i, c in enumerate(sorted(categories | det_categories))}

    gts = evalkit.GroundTruthSet(classes=class_ids.values())
    for image_id, ann in parsed.items():
        for o in ann.objects:
            box = geometry.min_area_rect(o.quad)
            gts.add(image_id, box, class_ids[o.category], bool(o.difficult))
    dets = []
    for path in det_files:
        cid = class_ids[path.stem[len("Task1_"):]]
        for image_id, score, quad in read_dota_task1(path.read_text(encoding="utf-8")):
            dets.append(
                evalkit.DetRecord(image_id, geometry.min_area_rect(quad), score, cid)
            )
    names = {i: c for c, i in class_ids.items()}
    return dets, gts, names


def cmd_eval(args, cfg, out):
    dets, gts, names = _load_eval_inputs(args.dets_dir, args.gts_dir)
    mode = args.mode or cfg.eval_mode
    thresh = args.iou_thresh if args.iou_thresh is not None else cfg.iou_thresh
    result = evalkit.evaluate_map(dets, gts, thresh, mode)
    for cid in sorted(result.per_class):
        out.write(f"AP {names[cid]} {result.per_class[cid]:.4f}\n")
    out.write(f"mAP {result.mean_ap:.4f}\n")
    if args.sweep is not None:
        thresholds = (
            SWEEP_DEFAULT if args.sweep == "" else
            [float(t) for t in args.sweep.split(",")]
        )
        rows = evalkit.map_sweep(dets, gts, thresholds, mode)
        csv_lines = ["iou_thresh,map"] + [f"{t:.2f},{m:.6f}" for t, m in rows]
        if args.csv:
            Path(args.csv).write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
        else:
            for line in csv_lines:
                out.write(line + "\n")
    return 0


def cmd_tile(args, cfg, out):
    plan = tile_plan(args.w, args.h, args.tile, args.overlap, args.out)
    out.write(f"tiles {len(plan)} scale {plan.scale:.6f} padded {int(plan.padded)}\n")
    for i, (x0, y0, x1, y1) in enumerate(plan.windows):
        out.write(f"window {i} {x0} {y0} {x1} {y1}\n")
    if args.ann:
        ann = parse_dota(Path(args.ann).read_text(encoding="utf-8"))
        for i, window in enumerate(plan.windows):
            for obj in remap_gt_to_tile(ann, window, plan.scale, args.min_inside_frac):
                coords = " ".join(f"{v:.2f}" for v in obj.quad.reshape(-1))
                out.write(f"tile {i} {coords} {obj.category} {obj.difficult}\n")
    return 0


def _load_frm_kernels(path, channels):
    if path is None:
        return (
            frm.ConvKernel.identity(channels),
            frm.ConvKernel.zeros(5, 1, channels, channels),
            frm.ConvKernel.zeros(1, 5, channels, channels),
        )
    with np.load(path) as data:
        needed = {"k1_w", "k1_b", "k51_w", "k51_b", "k15_w", "k15_b"}
        missing = needed - set(data.files)
        if missing:
            raise InvalidArg(f"kernel archive missing arrays: {sorted(missing)}")
        return (
            frm.ConvKernel(data["k1_w"], data["k1_b"]),
            frm.ConvKernel(data["k51_w"], data["k51_b"]),
            frm.ConvKernel(data["k15_w"], data["k15_b"]),
        )


def read_box_field(text):
    """Box-field text: first line 'h w', then h*w lines 'cx cy w h theta score'."""
    lines = text.splitlines()
    if not lines:
        raise ParseError(1, "empty box file")
    dims = lines[0].split()
    if len(dims) != 2 or not all(t.isdigit() for t in dims):
        raise ParseError(1, "first line must be 'h w'")
    h, w = int(dims[0]), int(dims[1])
    rows = [l.strip() for l in lines[1:] if l.strip()]
    if len(rows) != h * w:
        raise ParseError(len(lines), f"expected {h * w} box lines, got {len(rows)}")
    boxes = np.empty((h, w, 5))
    scores = np.empty((h, w))
    for idx, line in enumerate(rows):
        vals = _parse_floats(line.split(), idx + 2)
        if len(vals) != 6:
            raise ParseError(idx + 2, f"expected 6 fields, got {len(vals)}")
        boxes[idx // w, idx % w] = vals[:5]
        scores[idx // w, idx % w] = vals[5]
    return frm.BoxField(boxes, scores)


def cmd_frm_demo(args, cfg, out):
    fmap = frm.read_feature_map(args.tensor)
    bf = read_box_field(Path(args.boxes).read_text(encoding="utf-8"))
    k1, k51, k15 = _load_frm_kernels(args.kernels, fmap.channels)
    result, stats = frm.reconstruct(fmap, bf, k1, k51, k15, return_stats=True)
    frm.write_feature_map(args.output, result)
    out.write(
        f"reconstructed {result.height}x{result.width}x{result.channels} "
        f"stride {result.stride} samples {stats.sample_count}\n"
    )
    return 0


def _bench_iou(rng, n):
    a = _random_boxes(rng, n)
    b = _random_boxes(rng, n)
    chunks = np.array_split(np.arange(n), min(20, n))
    times = []
    t_all = time.perf_counter()
    for idx in chunks:
        t0 = time.perf_counter()
        geometry.skew_iou_pairs(a[idx], b[idx])
        times.append((time.perf_counter() - t0) / len(idx))
    total = time.perf_counter() - t_all
    return n / total, times


def _random_boxes(rng, n):
    boxes = np.empty((n, 5))
    boxes[:, 0] = rng.uniform(0, 1000, n)
    boxes[:, 1] = rng.uniform(0, 1000, n)
    boxes[:, 2] = rng.uniform(4, 80, n)
    boxes[:, 3] = rng.uniform(4, 80, n)
    boxes[:, 4] = rng.uniform(-np.pi / 2, -1e-9, n)
    return boxes


def _bench_nms(rng, n):
    boxes = _random_boxes(rng, n)
    dets = [
        Detection(RBox(*boxes[i]), 0, float(rng.uniform()))
        for i in range(n)
    ]
    times = []
    t_all = time.perf_counter()
    for _ in range(5):
        t0 = time.perf_counter()
        rotated_nms(dets, 0.3, per_class=False)
        times.append((time.perf_counter() - t0) / n)
    total = time.perf_counter() - t_all
    return 5 * n / total, times

def _bench_frm(rng, n):
    f = frm.FeatureMap(rng.normal(size=(16, 16, 8)), 8)
    boxes = np.empty((16, 16, 5))
    boxes[:, :, 0] = rng.uniform(0, 128, (16, 16))
    boxes[:, :, 1] = rng.uniform(0, 128, (16, 16))
    boxes[:, :, 2:4] = rng.uniform(8, 40, (16, 16, 2))
    boxes[:, :, 4] = rng.uniform(-np.pi / 2, -1e-9, (16, 16))
    bf = frm.BoxField(boxes, np.ones((16, 16)))
    ks = (
        frm.ConvKernel(rng.normal(size=(1, 1, 8, 8)), np.zeros(8)),
        frm.ConvKernel(rng.normal(size=(5, 1, 8, 4)), np.zeros(4)),
        frm.ConvKernel(rng.normal(size=(1, 5, 4, 8)), np.zeros(8)),
    )
    times = []
    t_all = time.perf_counter()
    for _ in range(n):
        t0 = time.perf_counter()
        frm.reconstruct(f, bf, *ks)
        times.append(time.perf_counter() - t0)
    total = time.perf_counter() - t_all
    return n / total, times


def cmd_bench(args, cfg, out):
    if args.n <= 0:
        raise InvalidArg("benchmark needs n > 0")
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    runner = {"iou": _bench_iou, "nms": _bench_nms, "frm": _bench_frm}[args.op]
    ops_per_s, times = runner(rng, args.n)
    p50, p99 = np.percentile(times, [50, 99])
    out.write(
        f"op={args.op} n={args.n} ops_per_s={ops_per_s:.1f} "
        f"p50_us={p50 * 1e6:.3f} p99_us={p99 * 1e6:.3f}\n"
    )
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="rrkit",
        description="rotated-box detection toolkit: geometry, NMS, evaluation, tiling",
    )
    p.add_argument("--config", help="YAML config; flags override its values")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("iou", help="pairwise rotated IoU from a file of box pairs")
    sp.add_argument("pairs", help="lines: cx cy w h theta | cx cy w h theta")
    sp.set_defaults(fn=cmd_iou)

    sp = sub.add_parser("nms", help="rotated NMS over a detection file")
    sp.add_argument("dets")
    sp.add_argument("--iou", type=float, default=None)
    sp.add_argument("--no-per-class", action="store_true",
                    help="suppress across classes instead of within")
    sp.set_defaults(fn=cmd_nms)

    sp = sub.add_parser("eval", help="AP / mAP from submission files and DOTA ground truth")
    sp.add_argument("dets_dir", help="directory of Task1_<category>.txt files")
    sp.add_argument("gts_dir", help="directory of per-image annotation .txt files")
    sp.add_argument("--iou-thresh", type=float, default=None)
    sp.add_argument("--mode", choices=evalkit.MODES, default=None)
    sp.add_argument("--sweep", nargs="?", const="", default=None,
                    help="comma-separated IoU thresholds (default 0.5:0.95:0.05)")
    sp.add_argument("--csv", help="write sweep rows here instead of stdout")
    sp.set_defaults(fn=cmd_eval)

    sp = sub.add_parser("tile", help="plan overlapping crops and remap annotations")
    sp.add_argument("--w", type=int, required=True)
    sp.add_argument("--h", type=int, required=True)
    sp.add_argument("--tile", type=int, default=600)
    sp.add_argument("--overlap", type=int, default=150)
    sp.add_argument("--out", type=int, default=800)
    sp.add_argument("--ann", help="annotation file to remap into each tile")
    sp.add_argument("--min-inside-frac", type=float, default=0.25)
    sp.set_defaults(fn=cmd_tile)

    sp = sub.add_parser("frm-demo", help="feature reconstruction over a stored map")
    sp.add_argument("tensor", help="binary feature map")
    sp.add_argument("boxes", help="box-field text file")
    sp.add_argument("--kernels", default=None,
                    help="npz with k1_w,k1_b,k51_w,k51_b,k15_w,k15_b (default identity)")
    sp.add_argument("--output", required=True)
    sp.set_defaults(fn=cmd_frm_demo)

    sp = sub.add_parser("bench", help="microbenchmark core kernels")
    sp.add_argument("--op", choices=("iou", "nms", "frm"), required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(fn=cmd_bench)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else ToolConfig()
        return args.fn(args, cfg, out)
    except RRKitError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: IOError: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
