#!/usr/bin/env python3
"""Measure kernel throughput on this machine and record the baseline.

Writes tests/perf_baseline.json, which the acceptance suite compares
against: a run more than 20% slower than the recorded numbers fails.
Rerun this after intentional performance changes or on new hardware:

    python3 scripts/bench_baseline.py [--trials 5]
"""

import argparse
import datetime
import json
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from rrkit.geometry import RBox, skew_iou_pairs  # noqa: E402
from rrkit.postproc import Detection, rotated_nms  # noqa: E402


def random_boxes(rng, n, spread=1000.0):
    out = np.empty((n, 5))
    out[:, 0] = rng.uniform(0, spread, n)
    out[:, 1] = rng.uniform(0, spread, n)
    out[:, 2] = rng.uniform(4, 80, n)
    out[:, 3] = rng.uniform(4, 80, n)
    out[:, 4] = rng.uniform(-np.pi / 2, -1e-9, n)
    return out


def bench_iou(rng, n=1_000_000, trials=5):
    a = random_boxes(rng, n)
    b = random_boxes(rng, n)
    skew_iou_pairs(a[:100], b[:100])  # JIT warmup
    best = 0.0
    for _ in range(trials):
        t0 = time.perf_counter()
        skew_iou_pairs(a, b)
        best = max(best, n / (time.perf_counter() - t0))
    return best


def bench_nms(rng, n=10_000, trials=5):
    boxes = random_boxes(rng, n, spread=4000.0)
    dets = [Detection(RBox(*boxes[i]), 0, float(rng.uniform())) for i in range(n)]
    rotated_nms(dets[:100], 0.3, per_class=False)  # warmup
    best = float("inf")
    for _ in range(trials):
        t0 = time.perf_counter()
        rotated_nms(dets, 0.3, per_class=False)
        best = min(best, (time.perf_counter() - t0) * 1000.0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    iou_rate = bench_iou(rng, trials=args.trials)
    nms_ms = bench_nms(rng, trials=args.trials)
    baseline = {
        "iou_pairs_per_s": round(iou_rate),
        "nms_10k_ms": round(nms_ms, 2),
        "cpu_count": os.cpu_count(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "recorded": datetime.date.today().isoformat(),
    }
    out = Path(__file__).resolve().parent.parent / "tests" / "perf_baseline.json"
    out.write_text(json.dumps(baseline, indent=2) + "\n")
    print(f"iou: {iou_rate:,.0f} pairs/s")
    print(f"nms 10k: {nms_ms:.1f} ms")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
