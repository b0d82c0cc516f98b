"""Command-line entry point: detect, calibrate, synth, eval, train-zs, sweep.

Exit codes: 0 success, 1 error, 2 degraded calibration, 64 usage error.
Pipeline settings come from built-in defaults, then ``--config`` (JSON or
``key=value`` lines), then explicit flags.
"""

import argparse
import csv
import io
import itertools
import json
import sys
import warnings
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .camera import PseudoIntrinsics
from .errors import CalibError
from .evaluation import dataset_records, summary_row
from .framescore import Incidence, activation_maps, dump_maps, frame_tensor, rasterize, write_tensor
from .images import LOWRES, read_image, resample_area
from .lsd_lite import detect_segments, format_segments, read_segments, segments_to_array
from .metrics import curve_csv, curve_svg, records_csv, summarize, summary_csv
from .pipeline import PipelineConfig, calibrate_image, calibrate_segments, detect_lowres
from .synth import SynthConfig, generate_dataset, read_annotation
from .zsnet_lite import (
    TrainConfig, accuracy, init_params, load_params, make_zenith_batches, pseudo_lines, save_params, train,
)

EXIT_OK, EXIT_ERROR, EXIT_DEGRADED, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dump(obj):
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def _write(path, text):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


# ---- configuration -------------------------------------------------------

_PIPE_FIELDS = {f.name: f for f in fields(PipelineConfig)}
# extra spellings accepted on the command line
_ALIASES = {
    "delta_z": ["--delta-z-deg"], "delta_p": ["--delta-p-deg"], "delta_n": ["--delta-n-deg"],
    "n_candidates": ["--n-zenith"],
}


def _coerce(name, value):
    kind = type(getattr(PipelineConfig(), name))
    if kind is bool:
        return str(value).lower() in ("1", "true", "yes", "on")
    return kind(value)


def read_config_file(path):
    """JSON object or ``key=value`` lines ('#' starts a comment)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip().replace("-", "_")] = v.strip()
    unknown = sorted(set(raw) - set(_PIPE_FIELDS))
    if unknown:
        raise UsageError(f"{path}: unknown keys {', '.join(unknown)}")
    return {k: _coerce(k, v) for k, v in raw.items()}


def _add_pipeline_flags(p):
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="JSON or key=value file")
    for name, f in _PIPE_FIELDS.items():
        kind = type(getattr(PipelineConfig(), name))
        flags = ["--" + name.replace("_", "-")] + _ALIASES.get(name, [])
        if name == "mode":
            g.add_argument(*flags, dest=name, choices=("deterministic", "oracle"), default=argparse.SUPPRESS)
        else:
            g.add_argument(*flags, dest=name, type=kind, default=argparse.SUPPRESS)
    g.add_argument("--zsnet", help="trained zenith scorer parameters (default: consensus fallback)")


def pipeline_config(args):
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for name in _PIPE_FIELDS:
        if name in vars(args):
            values[name] = getattr(args, name)
    try:
        return PipelineConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _zsnet(args):
    return load_params(args.zsnet) if getattr(args, "zsnet", None) else None


# ---- subcommands ---------------------------------------------------------

def cmd_detect(args):
    cfg = pipeline_config(args)
    img = read_image(args.image)
    low = resample_area(img, LOWRES, LOWRES) if args.lowres else img
    segs = detect_segments(low, cfg.detector())
    _write(args.out, format_segments(segs))
    return EXIT_OK


def cmd_calibrate(args):
    if bool(args.image) == bool(args.segments):
        raise UsageError("calibrate: give exactly one of --image or --segments")
    cfg = pipeline_config(args)
    ann = read_annotation(args.gt) if args.gt else None
    if cfg.mode == "oracle" and ann is None:
        raise UsageError("calibrate: --mode oracle needs --gt")
    params = _zsnet(args)
    if args.image:
        img = read_image(args.image)
        res = calibrate_image(img, cfg, params, ann)
    else:
        segs = segments_to_array(read_segments(args.segments))
        if ann is not None:
            w, h = ann.cam.width, ann.cam.height
        else:
            w, h = args.width, args.height
        res = calibrate_segments(segs, w, h, cfg, zsnet_params=params, ann=ann)
    out = res.to_json()
    out["scorer"] = "zsnet" if params is not None else "fallback"
    _write(args.out, _dump(out))
    if (args.dump_maps or args.export_tensor) and res.hypotheses:
        _export(args, res)
    return EXIT_DEGRADED if res.degraded else EXIT_OK


def _export(args, res):
    """Maps (and optionally the 17-channel tensor) of the best hypothesis."""
    cam = res.camera
    pi = PseudoIntrinsics(cam.width, cam.height)
    if args.image:
        img = read_image(args.image)
        low, full = detect_lowres(img, pipeline_config(args))
        gray = resample_area(img, LOWRES, LOWRES).pixels
    else:
        full = segments_to_array(read_segments(args.segments))
        low = full * np.array([LOWRES / cam.width, LOWRES / cam.height] * 2)
        gray = np.zeros((LOWRES, LOWRES))
    best = max(res.hypotheses, key=lambda h: h.scores.get("s", 0.0))
    inc = Incidence(low)
    lmap = rasterize(inc)
    maps = activation_maps(inc, pseudo_lines(full, pi), best)
    if args.dump_maps:
        dump_maps(args.dump_maps, lmap, maps)
    if args.export_tensor:
        write_tensor(args.export_tensor, frame_tensor(gray, lmap, maps, best, pi.f))


def cmd_synth(args):
    cfg = SynthConfig(
        width=args.width, height=args.height, n_boxes=args.n_boxes, noise_px=args.noise_px,
        outlier_frac=args.outlier_frac, atlanta_yaw=args.atlanta_yaw, seed=args.seed,
    )
    generate_dataset(args.out, args.n, cfg, with_image=not args.no_image)
    return EXIT_OK


def _eval_outputs(out_dir, records, skipped, cfg, source):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = summarize(records)
    hz = [r.horizon for r in records]
    (out_dir / "records.csv").write_text(records_csv(records))
    (out_dir / "summary.csv").write_text(summary_csv(summary))
    (out_dir / "curve.csv").write_text(curve_csv(hz))
    (out_dir / "curve.svg").write_text(curve_svg(hz))
    meta = {
        "config": cfg.to_dict(), "source": source, "fov": "vertical", "n": summary.n,
        "n_degraded": summary.n_degraded, "n_skipped": skipped, "auc": summary.auc,
    }
    (out_dir / "eval.json").write_text(_dump(meta))
    return summary


def cmd_eval(args):
    cfg = pipeline_config(args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        records, skipped = dataset_records(args.data, cfg, args.source, _zsnet(args))
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    summary = _eval_outputs(args.out, records, skipped, cfg, args.source)
    sys.stdout.write(summary_csv(summary))
    return EXIT_OK


def parse_grid(specs):
    """``["k=1,4,8", "delta_c=0.3,0.5"]`` -> ordered list of override dicts (last key varies fastest)."""
    keys, values = [], []
    for spec in specs:
        if "=" not in spec:
            raise UsageError(f"bad grid entry {spec!r}: expected name=v1,v2,...")
        k, v = spec.split("=", 1)
        k = k.strip().replace("-", "_")
        if k not in _PIPE_FIELDS:
            raise UsageError(f"unknown grid parameter {k!r}")
        keys.append(k)
        values.append([_coerce(k, x) for x in v.split(",") if x.strip()])
    return [dict(zip(keys, combo)) for combo in itertools.product(*values)]


def cmd_sweep(args):
    base = pipeline_config(args)
    grid = parse_grid(args.grid) if args.grid else [{}]
    if any("density_min" in g or "min_length" in g for g in grid) and args.source != "image":
        raise UsageError("detector parameters can only be swept with --source image")
    params = _zsnet(args)
    rows = []
    for overrides in grid:
        try:
            cfg = PipelineConfig(**{**base.to_dict(), **overrides})
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            records, _ = dataset_records(args.data, cfg, args.source, params)
        row = {"setting": ";".join(f"{k}={v}" for k, v in overrides.items()) or "default"}
        row.update(summary_row(summarize(records)))
        rows.append(row)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_train_zs(args):
    train_set = make_zenith_batches(args.n_train, args.seed)
    test_set = make_zenith_batches(args.n_test, args.seed + 1)
    cfg = TrainConfig(epochs=args.epochs, lr=args.lr, lr_halve_every=args.lr_halve_every, lam=args.lam, seed=args.seed)
    params, hist = train(init_params(args.seed), train_set, cfg)
    save_params(params, args.out)
    report = {
        "l_cls": hist.l_cls, "l_loc": hist.l_loc,
        "l_cls_ratio": hist.l_cls[-1] / hist.l_cls[0],
        "train_accuracy": accuracy(params, train_set),
        "heldout_accuracy": accuracy(params, test_set),
        "train": asdict(cfg), "n_train": args.n_train, "n_test": args.n_test,
    }
    _write(args.report, _dump(report))
    return EXIT_OK


def build_parser():
    p = _Parser(prog="vpcalib", description="Single-image camera calibration from line segments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("detect", help="detect line segments in an image")
    d.add_argument("--image", required=True)
    d.add_argument("--out", help="segments file (default: stdout)")
    d.add_argument("--lowres", action="store_true", help="detect on the 224x224 resampled image")
    _add_pipeline_flags(d)
    d.set_defaults(func=cmd_detect)

    c = sub.add_parser("calibrate", help="calibrate one image or segment file")
    c.add_argument("--image")
    c.add_argument("--segments")
    c.add_argument("--width", type=int, default=LOWRES, help="frame width for --segments")
    c.add_argument("--height", type=int, default=LOWRES, help="frame height for --segments")
    c.add_argument("--gt", help="gt.json; required for --mode oracle")
    c.add_argument("--out", help="result JSON (default: stdout)")
    c.add_argument("--dump-maps", help="directory for L/A_x/A_y/A_z PGMs of the best hypothesis")
    c.add_argument("--export-tensor", help="17-channel tensor file of the best hypothesis")
    _add_pipeline_flags(c)
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--width", type=int, default=LOWRES)
    s.add_argument("--height", type=int, default=LOWRES)
    s.add_argument("--n-boxes", type=int, default=4)
    s.add_argument("--noise-px", type=float, default=0.0)
    s.add_argument("--outlier-frac", type=float, default=0.0)
    s.add_argument("--atlanta-yaw", type=float, default=None)
    s.add_argument("--no-image", action="store_true")
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="evaluate on a scene_* dataset")
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True, help="output directory")
    e.add_argument("--source", choices=("segments", "image"), default="segments")
    _add_pipeline_flags(e)
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="evaluate a parameter grid")
    w.add_argument("--data", required=True)
    w.add_argument("--grid", action="append", help="name=v1,v2,... (repeatable)")
    w.add_argument("--out", help="CSV (default: stdout)")
    w.add_argument("--source", choices=("segments", "image"), default="segments")
    _add_pipeline_flags(w)
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("train-zs", help="train the toy zenith scorer on synthetic batches")
    t.add_argument("--out", required=True, help="parameter JSON")
    t.add_argument("--report", help="training report JSON (default: stdout)")
    t.add_argument("--n-train", type=int, default=200)
    t.add_argument("--n-test", type=int, default=100)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--lr-halve-every", type=int, default=5)
    t.add_argument("--lam", "--lambda-loc", dest="lam", type=float, default=1.0)
    t.add_argument("--seed", type=int, default=10)
    t.set_defaults(func=cmd_train_zs)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("vpcalib: a subcommand is required")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CalibError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
