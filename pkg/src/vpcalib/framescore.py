"""Scoring of frame hypotheses against the rasterized segments and top-k aggregation.

Two modes exist. ``oracle`` multiplies the Manhattan score ``m`` by the
ground-truth similarity ``s_vh`` and is only usable on annotated data.
``deterministic`` uses ``m`` alone and is what inference runs.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .camera import CameraParams, angles_from_zenith, horizon_border_y, horizon_from_up
from .errors import EmptyLineMap, HorizonParallelToBorder, NoHypotheses
from .homgeom import closeness, cossim, principal_eigenvector, structure_tensor
from .images import LOWRES, write_pgm
from .raster import segment_pixels

MODES = ("deterministic", "oracle")


@dataclass
class ScoreConfig:
    sigma: float = 0.1
    delta_s: float = 0.5
    k: int = 8

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not 0 < self.delta_s < 1:
            raise ValueError("delta_s must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be at least 1")


class Incidence:
    """Pixel-to-segment incidence of a rasterized segment set.

    ``pix`` and ``seg`` are parallel arrays sorted by pixel; ``starts`` marks
    the first entry of each distinct covered pixel.
    """

    def __init__(self, segments, width=LOWRES, height=LOWRES):
        rows = np.asarray(segments, dtype=float).reshape(-1, 4)
        pix, seg = [], []
        for s, r in enumerate(rows):
            p = segment_pixels(r, width, height)
            pix.append(p)
            seg.append(np.full(len(p), s, dtype=int))
        pix = np.concatenate(pix) if pix else np.zeros(0, dtype=int)
        seg = np.concatenate(seg) if seg else np.zeros(0, dtype=int)
        order = np.lexsort((seg, pix))
        self.pix, self.seg = pix[order], seg[order]
        self.starts = np.flatnonzero(np.r_[True, np.diff(self.pix) != 0]) if len(pix) else np.zeros(0, dtype=int)
        self.width, self.height = width, height
        self.n_segments = len(rows)

    @property
    def n_pixels(self):
        return len(self.starts)

    def paint(self, values):
        """Raster holding, per pixel, the max of ``values`` over covering segments."""
        out = np.zeros(self.width * self.height)
        if self.n_pixels:
            out[self.pix[self.starts]] = np.maximum.reduceat(np.asarray(values, dtype=float)[self.seg], self.starts)
        return out.reshape(self.height, self.width)


def rasterize(segments, width=LOWRES, height=LOWRES):
    """Binary line map: 1 where a 1-px Bresenham stroke passes."""
    inc = segments if isinstance(segments, Incidence) else Incidence(segments, width, height)
    return inc.paint(np.ones(inc.n_segments)) if inc.n_segments else np.zeros((height, width))


def segment_closeness(lines, vps):
    """``(N, 3)`` closeness of each pseudo-space line to each of three VPs."""
    return closeness(np.asarray(lines, dtype=float)[:, None, :], np.asarray(vps, dtype=float)[None, :, :])


def activation_maps(incidence, lines, hypothesis):
    """``(3, H, W)`` maps; each segment's stroke carries its closeness to v_x, v_y, v_z."""
    c = np.atleast_2d(segment_closeness(lines, hypothesis.vps))
    return np.stack([incidence.paint(c[:, d]) for d in range(3)])


def manhattan_score(line_map, maps):
    total = float(np.sum(line_map))
    if total <= 0:
        raise EmptyLineMap("no line pixels")
    return float(np.sum(np.max(maps, axis=0)) / total)


def manhattan_scores(incidence, lines, hypotheses):
    """``m`` for every hypothesis without building the maps.

    ``max_d A_d`` at a pixel is the max over covering segments of that
    segment's best closeness, so one reduction per hypothesis suffices.
    """
    if incidence.n_pixels == 0:
        raise EmptyLineMap("no line pixels")
    ln = np.asarray(lines, dtype=float)
    ln = ln / np.linalg.norm(ln, axis=1, keepdims=True)
    vps = np.stack([h.vps for h in hypotheses])
    vps = vps / np.linalg.norm(vps, axis=2, keepdims=True)
    best = 1.0 - np.min(np.abs(np.einsum("hdk,sk->hsd", vps, ln)), axis=2)
    best = np.clip(best, 0.0, 1.0)
    per_pixel = np.maximum.reduceat(best[:, incidence.seg], incidence.starts, axis=1)
    return per_pixel.sum(axis=1) / incidence.n_pixels


def border_distance(pred, gt, width, height):
    """Max over the left and right borders of the vertical gap, in image heights."""
    p = horizon_border_y(pred, width)
    g = horizon_border_y(gt, width)
    if p is None or g is None:
        raise HorizonParallelToBorder("horizon does not cross a vertical border")
    return max(abs(p[0] - g[0]), abs(p[1] - g[1])) / height


def horizon_similarity(dist):
    return math.exp(-dist * dist)


def vh_similarity(s_h, s_z, sigma):
    return math.exp(-(((s_h + s_z) / 2.0 - 1.0) ** 2) / (2.0 * sigma * sigma))


def gt_similarity(hypothesis, ann, cfg):
    """``(s_z, s_h, s_vh, c)`` of a hypothesis against a scene annotation."""
    cam = ann.cam
    s_z = float(cossim(ann.z_gt, hypothesis.zenith))
    pred = horizon_from_up(hypothesis.R[:, 1], hypothesis.f, cam.width, cam.height)
    try:
        s_h = horizon_similarity(border_distance(pred, ann.horizon_gt, cam.width, cam.height))
    except HorizonParallelToBorder:
        s_h = 0.0
    s_vh = vh_similarity(s_h, s_z, cfg.sigma)
    return s_z, s_h, s_vh, int(s_vh >= cfg.delta_s)


def final_score(m, s_vh=None, mode="deterministic"):
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "oracle":
        if s_vh is None:
            raise ValueError("oracle mode needs s_vh")
        return s_vh * m
    return m


def topk_indices(scores, k):
    """Indices of the ``k`` best scores; ties go to the lower index."""
    scores = np.asarray(scores, dtype=float)
    order = np.argsort(-scores, kind="stable")
    return order[: min(k, len(scores))]


def aggregate_topk(hypotheses, scores, k, pi, width=None, height=None):
    """Score-weighted focal and zenith of the top-k; yaw from the single best.

    Returns ``(CameraParams, top_indices)``. When every top-k score is zero
    the weights fall back to uniform.
    """
    if len(hypotheses) == 0:
        raise NoHypotheses("nothing to aggregate")
    top = topk_indices(scores, k)
    w = np.asarray(scores, dtype=float)[top]
    if not w.sum() > 0:
        w = np.ones(len(top))
    f = float(np.dot(w, [hypotheses[i].f for i in top]) / w.sum())
    zs = np.stack([hypotheses[i].zenith for i in top])
    st = np.tensordot(w, structure_tensor(zs), axes=1) / w.sum()
    z = principal_eigenvector(st)
    pitch, roll = angles_from_zenith(z, f, pi)
    yaw = hypotheses[top[0]].yaw
    cam = CameraParams(
        f=f, pitch=pitch, yaw=yaw, roll=roll,
        width=width if width is not None else pi.width,
        height=height if height is not None else pi.height,
    )
    return cam, top


def score_hypotheses(hypotheses, incidence, lines, cfg, mode="deterministic", ann=None):
    """Fill ``hypothesis.scores`` and return the final score array."""
    m = manhattan_scores(incidence, lines, hypotheses)
    out = np.empty(len(hypotheses))
    for i, h in enumerate(hypotheses):
        h.scores["m"] = float(m[i])
        s_vh = None
        if ann is not None:
            _, _, s_vh, c = gt_similarity(h, ann, cfg)
            h.scores["s_vh"] = s_vh
            h.scores["c"] = c
        out[i] = final_score(float(m[i]), s_vh, mode)
        h.scores["s"] = float(out[i])
    return out


def frame_tensor(image, line_map, maps, hypothesis, f_pseudo):
    """``(H, W, 17)``: RGB, L, A_x/A_y/A_z, the 9 entries of R, and f / f_pseudo.

    A grayscale image fills all three colour channels.
    """
    img = np.asarray(image, dtype=float)
    rgb = np.repeat(img[:, :, None], 3, axis=2) if img.ndim == 2 else img[:, :, :3]
    h, w = line_map.shape
    consts = np.concatenate([np.asarray(hypothesis.R, dtype=float).ravel(), [hypothesis.f / f_pseudo]])
    return np.concatenate([
        rgb, line_map[:, :, None], np.moveaxis(maps, 0, 2), np.broadcast_to(consts, (h, w, 10)),
    ], axis=2).astype(np.float32)


def write_tensor(path, tensor):
    """Flat little-endian float32 body preceded by one JSON header line."""
    tensor = np.ascontiguousarray(tensor, dtype="<f4")
    header = json.dumps({"dtype": "float32", "order": "HWC", "shape": list(tensor.shape)}, sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(tensor.tobytes())


def read_tensor(path):
    data = Path(path).read_bytes()
    nl = data.index(b"\n")
    header = json.loads(data[:nl])
    return np.frombuffer(data[nl + 1:], dtype="<f4").reshape(header["shape"])


def dump_maps(directory, line_map, maps):
    """PGM rasters L, A_x, A_y, A_z scaled to 0..255."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, arr in zip(("L", "A_x", "A_y", "A_z"), [line_map, *maps]):
        p = directory / f"{name}.pgm"
        write_pgm(p, np.clip(arr, 0.0, 1.0))
        paths.append(p)
    return paths
