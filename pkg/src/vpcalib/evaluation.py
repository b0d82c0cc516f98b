"""Dataset-level evaluation shared by the CLI, the scripts and the acceptance tests."""

import json
import warnings
from pathlib import Path

from .errors import EmptyInput, MissingGroundTruth
from .images import read_image
from .lsd_lite import read_segments, segments_to_array
from .metrics import evaluate_camera, summarize
from .pipeline import calibrate_image, calibrate_segments
from .synth import generate_scene, read_annotation, scene_rng


def synthetic_records(n, seed, synth_cfg, pipe_cfg, zsnet_params=None):
    """Calibrate ``n`` generated scenes; returns ``(records, results)``."""
    records, results = [], []
    for i in range(n):
        segments, ann, _ = generate_scene(synth_cfg, scene_rng(seed, i))
        res = calibrate_segments(
            segments, ann.cam.width, ann.cam.height, pipe_cfg, zsnet_params=zsnet_params,
            ann=ann if pipe_cfg.mode == "oracle" else None,
        )
        records.append(evaluate_camera(f"scene_{i:05d}", res.camera, ann.cam, res.degraded))
        results.append(res)
    return records, results


def scene_dirs(root):
    root = Path(root)
    if not root.is_dir():
        raise EmptyInput(f"{root} is not a directory")
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and p.name.startswith("scene_"))
    if not dirs:
        raise EmptyInput(f"no scene_* directories in {root}")
    return dirs


def load_scene(directory):
    gt = Path(directory) / "gt.json"
    if not gt.exists():
        raise MissingGroundTruth(f"{gt} not found")
    return read_annotation(gt)


def calibrate_scene(directory, ann, pipe_cfg, source="segments", zsnet_params=None):
    directory = Path(directory)
    oracle = ann if pipe_cfg.mode == "oracle" else None
    if source == "image":
        return calibrate_image(read_image(directory / "image.pgm"), pipe_cfg, zsnet_params, oracle)
    segs = segments_to_array(read_segments(directory / "segments.txt"))
    return calibrate_segments(segs, ann.cam.width, ann.cam.height, pipe_cfg, zsnet_params=zsnet_params, ann=oracle)


def dataset_records(root, pipe_cfg, source="segments", zsnet_params=None):
    """Per-scene records in directory order; scenes without ground truth are skipped.

    Returns ``(records, n_skipped)``.
    """
    records, skipped = [], 0
    for d in scene_dirs(root):
        try:
            ann = load_scene(d)
        except MissingGroundTruth as exc:
            warnings.warn(f"skipping {d.name}: {exc}")
            skipped += 1
            continue
        res = calibrate_scene(d, ann, pipe_cfg, source, zsnet_params)
        records.append(evaluate_camera(d.name, res.camera, ann.cam, res.degraded))
    if not records:
        raise EmptyInput(f"no scene in {root} has ground truth")
    return records, skipped


def summary_row(summary):
    row = {}
    for m in summary.mean:
        row[f"{m}_mean"] = summary.mean[m]
        row[f"{m}_median"] = summary.median[m]
    row["auc"] = summary.auc
    row["n"] = summary.n
    row["n_degraded"] = summary.n_degraded
    return row
