"""End-to-end calibration: segments -> zenith -> frame hypotheses -> scores -> camera."""

import math
import warnings
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .camera import CameraParams, PseudoIntrinsics, angles_from_zenith, horizon_border_y, horizon_from_camera
from .errors import DegenerateInput, InsufficientHypotheses, InsufficientLines, NoHorizontals, SamplingExhausted
from .framegen import FrameConfig, group_horizontals, sample_frames
from .framescore import Incidence, ScoreConfig, aggregate_topk, score_hypotheses
from .images import LOWRES, GrayImage, resample_area
from .lsd_lite import DetectorConfig, detect_segments, segments_to_array
from .zenith import ZenithConfig, aggregate, filter_vertical, sample_candidates, select_or_best
from .zsnet_lite import fallback_score, forward, pseudo_lines


@dataclass
class PipelineConfig:
    """Every tunable of the pipeline in one flat namespace (CLI and config files use these names)."""

    seed: int = 0
    mode: str = "deterministic"
    # zenith stage
    delta_z: float = 67.5
    delta_p: float = 2.0
    delta_n: float = 5.0
    delta_c: float = 0.5
    n_lines: int = 256
    n_candidates: int = 256
    fallback_tol_deg: float = 2.0
    # frame hypotheses
    n_frames: int = 256
    min_frames: int = 8
    junction_radius: float = 5.0
    vert_closeness_deg: float = 2.0
    # scoring
    sigma: float = 0.1
    delta_s: float = 0.5
    k: int = 8
    # detector
    min_length: float = 10.0
    angle_tol_deg: float = 22.5
    density_min: float = 0.7
    grad_threshold: float = 0.02

    def __post_init__(self):
        if self.mode not in ("deterministic", "oracle"):
            raise ValueError(f"mode must be deterministic or oracle, not {self.mode!r}")
        self.zenith()
        self.frame()
        self.score()

    def zenith(self):
        return ZenithConfig(
            delta_z=self.delta_z, delta_p=self.delta_p, delta_n=self.delta_n, delta_c=self.delta_c,
            n_lines=self.n_lines, n_candidates=self.n_candidates, seed=self.seed,
        )

    def frame(self):
        return FrameConfig(
            n_frames=self.n_frames, min_frames=self.min_frames, junction_radius=self.junction_radius,
            vert_closeness_deg=self.vert_closeness_deg, seed=self.seed,
        )

    def score(self):
        return ScoreConfig(sigma=self.sigma, delta_s=self.delta_s, k=self.k)

    def detector(self):
        return DetectorConfig(
            min_length=self.min_length, angle_tol_deg=self.angle_tol_deg,
            density_min=self.density_min, grad_threshold=self.grad_threshold,
        )

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_types(cls):
        return {f.name: f.type for f in fields(cls)}


@dataclass
class CalibrationResult:
    camera: CameraParams
    score: float
    mode: str
    degraded: bool
    reason: str = ""
    z_est: np.ndarray = None
    n_hypotheses: int = 0
    hypotheses: list = field(default_factory=list, repr=False)
    config: dict = field(default_factory=dict, repr=False)

    def horizon_norm(self):
        """Horizon heights at the left and right borders, in image heights."""
        ys = horizon_border_y(horizon_from_camera(self.camera), self.camera.width)
        if ys is None:
            return None, None
        return ys[0] / self.camera.height, ys[1] / self.camera.height

    def to_json(self):
        cam = self.camera
        left, right = self.horizon_norm()
        out = {
            "f_px": cam.f,
            "fov_deg": math.degrees(cam.vfov),
            "pitch_deg": math.degrees(cam.pitch),
            "roll_deg": math.degrees(cam.roll),
            "yaw_deg": math.degrees(cam.yaw),
            "horizon": {"left_y_norm": left, "right_y_norm": right},
            "score": self.score,
            "mode": self.mode,
            "degraded": self.degraded,
            "config": self.config,
        }
        if self.degraded:
            out["reason"] = self.reason
        return out


def estimate_zenith(lines, cfg, zsnet_params=None):
    """``(z_est, Z_c)``: the aggregated zenith and the selected candidates."""
    zc = cfg.zenith()
    lz, _ = filter_vertical(lines, zc, np.random.default_rng([cfg.seed, 0]))
    cands = sample_candidates(lz, zc, np.random.default_rng([cfg.seed, 1]))
    if zsnet_params is None:
        cands.scores = fallback_score(lz, cands.v, cfg.fallback_tol_deg)
    else:
        cands.scores = forward(zsnet_params, lz, cands.v)
    sel = cands.subset(select_or_best(cands, zc))
    _, z_est = aggregate(sel)
    return z_est, sel


def _degraded(z_est, pi, width, height, reason, cfg):
    if z_est is None or not np.any(np.asarray(z_est)[:2]):
        pitch = roll = 0.0
    else:
        pitch, roll = angles_from_zenith(z_est, pi.f, pi)
    cam = CameraParams(f=pi.f, pitch=pitch, yaw=0.0, roll=roll, width=width, height=height)
    return CalibrationResult(
        camera=cam, score=0.0, mode=cfg.mode, degraded=True, reason=reason, z_est=z_est, config=cfg.to_dict(),
    )


def calibrate_segments(segments, width, height, cfg=None, raster_segments=None, zsnet_params=None, ann=None):
    """Calibrate from segments given in a ``width`` x ``height`` pixel frame.

    ``raster_segments`` are the same segments in the 224x224 frame used for
    the line maps; by default they are rescaled from ``segments``. ``ann``
    is required in oracle mode.
    """
    cfg = cfg or PipelineConfig()
    if cfg.mode == "oracle" and ann is None:
        raise ValueError("oracle mode needs a ground-truth annotation")
    pi = PseudoIntrinsics(width, height)
    arr = segments_to_array(segments) if not isinstance(segments, np.ndarray) else segments.reshape(-1, 4)
    if len(arr) == 0:
        return _degraded(None, pi, width, height, "no segments", cfg)
    lines = pseudo_lines(arr, pi)

    try:
        z_est, zc = estimate_zenith(lines, cfg, zsnet_params)
    except (InsufficientLines, SamplingExhausted) as exc:
        return _degraded(None, pi, width, height, f"zenith: {exc}", cfg)

    scale = np.array([LOWRES / width, LOWRES / height] * 2)
    fcfg = cfg.frame()
    # adjacency radius is specified at 224 resolution
    fcfg.junction_radius *= math.sqrt(width * height) / LOWRES
    try:
        groups = group_horizontals(arr, lines, z_est, pi, fcfg)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hyps = sample_frames(lines, groups, zc.v, pi, fcfg)
    except (NoHorizontals, InsufficientHypotheses, DegenerateInput) as exc:
        return _degraded(z_est, pi, width, height, f"frames: {exc}", cfg)

    low = arr * scale if raster_segments is None else np.asarray(raster_segments, dtype=float).reshape(-1, 4)
    scores = score_hypotheses(hyps, Incidence(low), lines, cfg.score(), cfg.mode, ann)
    cam, top = aggregate_topk(hyps, scores, cfg.k, pi, width, height)
    return CalibrationResult(
        camera=cam, score=float(scores[top[0]]), mode=cfg.mode, degraded=False, z_est=z_est,
        n_hypotheses=len(hyps), hypotheses=hyps, config=cfg.to_dict(),
    )


def detect_lowres(img, cfg=None):
    """Segments detected at 224x224, returned in both the low-res and the original frame."""
    cfg = cfg or PipelineConfig()
    pix = img.pixels if hasattr(img, "pixels") else np.asarray(img, dtype=float)
    h, w = pix.shape
    low = resample_area(GrayImage(pix), LOWRES, LOWRES)
    segs = segments_to_array(detect_segments(low, cfg.detector()))
    full = segs * np.array([w / LOWRES, h / LOWRES] * 2)
    return segs, full


def calibrate_image(img, cfg=None, zsnet_params=None, ann=None):
    cfg = cfg or PipelineConfig()
    pix = img.pixels if hasattr(img, "pixels") else np.asarray(img, dtype=float)
    h, w = pix.shape
    low, full = detect_lowres(pix, cfg)
    return calibrate_segments(full, w, h, cfg, raster_segments=low, zsnet_params=zsnet_params, ann=ann)
