"""Synthetic Manhattan / Atlanta box scenes with exact ground truth.

A scene is a handful of axis-aligned 3D boxes in front of a camera sampled
in the configured FoV / pitch / roll / yaw ranges. Box edges are projected,
clipped to the image, optionally perturbed and mixed with random outlier
segments. Ground truth is stored before any noise is added.
"""

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraParams, PseudoIntrinsics, fov_to_focal, horizon_from_camera, rot_y, vps_from_rotation
from .errors import DegenerateScene
from .images import GrayImage, write_pgm
from .lsd_lite import Segment, write_segments
from .raster import clip_segment, draw_segments

AXES = ("x", "y", "z")

_BOX_EDGES = (
    # (corner a, corner b, axis) with corners indexed by bits (x, y, z)
    (0, 1, "x"), (2, 3, "x"), (4, 5, "x"), (6, 7, "x"),
    (0, 2, "y"), (1, 3, "y"), (4, 6, "y"), (5, 7, "y"),
    (0, 4, "z"), (1, 5, "z"), (2, 6, "z"), (3, 7, "z"),
)


@dataclass
class SynthConfig:
    width: int = 224
    height: int = 224
    fov_range: tuple = (40.0, 80.0)
    pitch_range: tuple = (-30.0, 40.0)
    roll_range: tuple = (-20.0, 20.0)
    yaw_range: tuple = (-45.0, 45.0)
    n_boxes: int = 4
    noise_px: float = 0.0
    outlier_frac: float = 0.0
    atlanta_yaw: float = None
    depth_range: tuple = (6.0, 14.0)
    min_edge_length: float = 10.0
    min_edges_per_axis: int = 2
    max_tries: int = 100
    seed: int = 0

    def __post_init__(self):
        for name in ("fov_range", "pitch_range", "roll_range", "yaw_range", "depth_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if not 0 <= self.outlier_frac < 1:
            raise ValueError("outlier_frac must be in [0, 1)")


@dataclass
class SceneAnnotation:
    cam: CameraParams
    z_gt: np.ndarray
    horizon_gt: np.ndarray
    vps_gt: np.ndarray
    edges: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    outlier_frac: float = 0.0
    noise_px: float = 0.0

    @property
    def pseudo(self):
        return PseudoIntrinsics(self.cam.width, self.cam.height)

    def to_json(self):
        return {
            "camera": self.cam.to_json(),
            "fov_deg": math.degrees(self.cam.vfov),
            "zenith_pseudo": [float(v) for v in self.z_gt],
            "horizon": [float(v) for v in self.horizon_gt],
            "vps_pseudo": [[float(v) for v in row] for row in self.vps_gt],
            "noise_px": float(self.noise_px),
            "outlier_frac": float(self.outlier_frac),
            "edges": [[float(v) for v in e[:4]] + [e[4]] for e in self.edges],
            "labels": list(self.labels),
        }

    @classmethod
    def from_json(cls, d):
        cam = CameraParams.from_json(d["camera"])
        ann = annotation_for_camera(cam)
        ann.edges = [list(e) for e in d.get("edges", [])]
        ann.labels = list(d.get("labels", []))
        ann.outlier_frac = float(d.get("outlier_frac", 0.0))
        ann.noise_px = float(d.get("noise_px", 0.0))
        return ann


def annotation_for_camera(cam):
    """Ground-truth zenith, horizon and VPs implied by a camera."""
    pi = PseudoIntrinsics(cam.width, cam.height)
    vps = vps_from_rotation(cam.R, cam.f, pi)
    return SceneAnnotation(cam=cam, z_gt=vps[1], horizon_gt=horizon_from_camera(cam), vps_gt=vps)


def sample_camera(cfg, rng):
    def uni(r):
        lo, hi = r
        return lo if lo == hi else rng.uniform(lo, hi)

    fov = math.radians(uni(cfg.fov_range))
    pitch = math.radians(uni(cfg.pitch_range))
    roll = math.radians(uni(cfg.roll_range))
    yaw = math.radians(uni(cfg.yaw_range))
    return CameraParams(
        f=fov_to_focal(fov, cfg.height), pitch=pitch, yaw=yaw, roll=roll, width=cfg.width, height=cfg.height
    )


def _box_edges(center, half, yaw):
    corners = np.array(
        [[(1 if i & 1 else -1), (1 if i & 2 else -1), (1 if i & 4 else -1)] for i in range(8)], dtype=float
    )
    corners = corners * half
    if yaw:
        # rot_y maps world to a turned frame; its transpose turns the box
        corners = corners @ rot_y(yaw)
    corners = corners + center
    return [(corners[a], corners[b], axis) for a, b, axis in _BOX_EDGES]


def _project_edge(cam, p0, p1, near=0.1):
    R, K = cam.R, cam.K
    c0, c1 = R @ p0, R @ p1
    if c0[2] < near and c1[2] < near:
        return None
    if c0[2] < near or c1[2] < near:
        t = (near - c0[2]) / (c1[2] - c0[2])
        cut = c0 + t * (c1 - c0)
        if c0[2] < near:
            c0 = cut
        else:
            c1 = cut
    q0, q1 = K @ c0, K @ c1
    seg = (q0[0] / q0[2], q0[1] / q0[2], q1[0] / q1[2], q1[1] / q1[2])
    return clip_segment(seg, 0.0, 0.0, cam.width, cam.height)


def _place_boxes(cfg, cam, rng):
    K_inv = np.linalg.inv(cam.K)
    edges = []
    for b in range(cfg.n_boxes):
        u = rng.uniform(0.15, 0.85) * cfg.width
        v = rng.uniform(0.15, 0.85) * cfg.height
        depth = rng.uniform(*cfg.depth_range)
        center = cam.R.T @ (depth * (K_inv @ np.array([u, v, 1.0])))
        half = rng.uniform(0.6, 2.0, size=3) * depth / 8.0
        yaw = 0.0
        suffix = ""
        if cfg.atlanta_yaw is not None and b % 2 == 1:
            yaw = math.radians(cfg.atlanta_yaw)
            suffix = "2"
        for p0, p1, axis in _box_edges(center, half, yaw):
            seg = _project_edge(cam, p0, p1)
            if seg is None or math.hypot(seg[2] - seg[0], seg[3] - seg[1]) <= cfg.min_edge_length:
                continue
            label = axis if axis == "y" else axis + suffix
            edges.append((*seg, label))
    return edges


def _random_segment(cfg, rng):
    for _ in range(100):
        cx = rng.uniform(0, cfg.width)
        cy = rng.uniform(0, cfg.height)
        ang = rng.uniform(0, math.pi)
        half = 0.5 * rng.uniform(cfg.min_edge_length + 2, 0.3 * cfg.width)
        d = np.array([math.cos(ang), math.sin(ang)]) * half
        seg = clip_segment((cx - d[0], cy - d[1], cx + d[0], cy + d[1]), 0.0, 0.0, cfg.width, cfg.height)
        if seg and math.hypot(seg[2] - seg[0], seg[3] - seg[1]) > cfg.min_edge_length:
            return seg
    raise DegenerateScene("could not place an outlier segment")


def _enough_edges(cfg, edges):
    if len(edges) < 4:
        return False
    counts = {}
    for e in edges:
        counts[e[4][0]] = counts.get(e[4][0], 0) + 1
    return all(counts.get(a, 0) >= cfg.min_edges_per_axis for a in AXES)


def render(segments, width, height):
    """White 1-px wireframe on black, no anti-aliasing."""
    rows = [s.as_row() if isinstance(s, Segment) else s[:4] for s in segments]
    return GrayImage(draw_segments(rows, width, height))


def generate_scene(cfg, rng, with_image=False):
    """Returns ``(segments, annotation, image_or_None)``."""
    for _ in range(cfg.max_tries):
        cam = sample_camera(cfg, rng)
        edges = _place_boxes(cfg, cam, rng)
        if _enough_edges(cfg, edges):
            break
    else:
        raise DegenerateScene(f"fewer than the required visible edges after {cfg.max_tries} tries")

    rows, labels = [], []
    for e in edges:
        noisy = np.array(e[:4], dtype=float)
        if cfg.noise_px > 0:
            noisy = noisy + rng.normal(0.0, cfg.noise_px, size=4)
            noisy[[0, 2]] = np.clip(noisy[[0, 2]], 0.0, cfg.width)
            noisy[[1, 3]] = np.clip(noisy[[1, 3]], 0.0, cfg.height)
        rows.append(noisy)
        labels.append(e[4])
    if cfg.outlier_frac > 0:
        n_total = int(round(len(edges) / (1.0 - cfg.outlier_frac)))
        for _ in range(n_total - len(edges)):
            rows.append(np.array(_random_segment(cfg, rng)))
            labels.append("outlier")
    order = rng.permutation(len(rows))
    rows = [rows[i] for i in order]
    labels = [labels[i] for i in order]

    segments = [Segment(r[:2], r[2:]) for r in rows if math.hypot(r[2] - r[0], r[3] - r[1]) > 0]
    ann = annotation_for_camera(cam)
    ann.edges = [list(e) for e in edges]
    ann.labels = labels
    ann.outlier_frac = cfg.outlier_frac
    ann.noise_px = cfg.noise_px
    image = render(segments, cfg.width, cfg.height) if with_image else None
    return segments, ann, image


def scene_rng(seed, index):
    return np.random.default_rng([seed, index])


def write_scene(directory, segments, ann, image=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_segments(segments, directory / "segments.txt")
    (directory / "gt.json").write_text(json.dumps(ann.to_json(), indent=1, sort_keys=True) + "\n")
    if image is not None:
        write_pgm(directory / "image.pgm", image.pixels)


def read_annotation(path):
    return SceneAnnotation.from_json(json.loads(Path(path).read_text()))


def generate_dataset(out_dir, n_scenes, cfg, with_image=True):
    """Write ``scene_%05d`` directories; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(n_scenes):
        segments, ann, image = generate_scene(cfg, scene_rng(cfg.seed, i), with_image=with_image)
        path = out_dir / f"scene_{i:05d}"
        write_scene(path, segments, ann, image)
        paths.append(path)
    (out_dir / "synth_config.json").write_text(json.dumps(asdict(cfg), indent=1, sort_keys=True) + "\n")
    return paths
