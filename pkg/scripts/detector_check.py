#!/usr/bin/env python3
"""Compare detected segments with the ground-truth edges of rendered scenes.

An edge counts as found when some detected segment has both endpoints
within ``--tol`` pixels of it (either orientation).

    python scripts/detector_check.py --n 10 --boxes 2
"""

import argparse

import numpy as np

from vpcalib.lsd_lite import DetectorConfig, detect_segments, segments_to_array
from vpcalib.pipeline import calibrate_image
from vpcalib.metrics import evaluate_camera
from vpcalib.synth import SynthConfig, generate_scene, scene_rng


def matched(gt, det, tol):
    if len(det) == 0:
        return 0.0
    hits = 0
    for s in gt:
        d1 = np.maximum(np.hypot(*(det[:, :2] - s[:2]).T), np.hypot(*(det[:, 2:] - s[2:]).T))
        d2 = np.maximum(np.hypot(*(det[:, :2] - s[2:]).T), np.hypot(*(det[:, 2:] - s[:2]).T))
        hits += np.minimum(d1, d2).min() <= tol
    return hits / len(gt)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--seed", type=int, default=8)
    p.add_argument("--boxes", type=int, default=4)
    p.add_argument("--tol", type=float, default=2.0)
    p.add_argument("--extend", action="store_true", help="enable endpoint extension")
    args = p.parse_args()

    dcfg = DetectorConfig(extend=args.extend)
    rates, angles = [], []
    for i in range(args.n):
        segs, ann, img = generate_scene(SynthConfig(n_boxes=args.boxes), scene_rng(args.seed, i), with_image=True)
        gt = segments_to_array(segs)
        det = segments_to_array(detect_segments(img, dcfg))
        rates.append(matched(gt, det, args.tol))
        res = calibrate_image(img)
        angles.append(evaluate_camera("s", res.camera, ann.cam).angle)
        print(f"scene {i:3d}  edges {len(gt):3d}  detected {len(det):3d}  matched {rates[-1]:.2f}  "
              f"angle error {angles[-1]:.2f} deg")
    print(f"mean matched {np.mean(rates):.3f}  mean angle error {np.mean(angles):.3f} deg")


if __name__ == "__main__":
    main()
