"""Manhattan frame hypotheses from a zenith estimate and junction-filtered segments.

Horizontal segments are those touching a junction with a zenith-vanishing
segment. They are split by which side of the pivot (the line through the
zenith and the image center) their line meets the pseudo-horizon. Pairs
within a side give horizontal VPs which, together with a zenith candidate,
fix one (f, R) hypothesis each.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .camera import calibrate_from_vps, vps_from_rotation
from .errors import DegenerateInput, InsufficientHypotheses, NoHorizontals, NoRealFocal


@dataclass
class FrameConfig:
    n_frames: int = 256
    min_frames: int = 8
    junction_radius: float = 5.0
    vert_closeness_deg: float = 2.0
    retry_factor: int = 20
    upright: bool = True
    require_both_groups: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_frames < 1 or self.min_frames < 1:
            raise ValueError("n_frames and min_frames must be positive")
        if self.junction_radius <= 0 or not 0 < self.vert_closeness_deg < 90:
            raise ValueError("invalid junction radius or closeness tolerance")


@dataclass
class FrameHypothesis:
    f: float
    R: np.ndarray
    angles: tuple
    vps: np.ndarray
    zenith_source: int
    group: int = 0
    pair: tuple = (0, 0)
    scores: dict = field(default_factory=dict)

    @property
    def pitch(self):
        return self.angles[0]

    @property
    def yaw(self):
        return self.angles[1]

    @property
    def roll(self):
        return self.angles[2]

    @property
    def zenith(self):
        return self.vps[1]


@dataclass
class GroupedSegments:
    """Index arrays into the segment list, plus junctions in pixel coordinates."""

    left: np.ndarray
    right: np.ndarray
    junctions: np.ndarray
    vertical: np.ndarray

    @property
    def groups(self):
        return (self.left, self.right)


def pseudo_horizon(z_est):
    """Pseudo-space horizon of a pseudo-space zenith: the same coefficient vector."""
    z = np.asarray(z_est, dtype=float)
    if not np.any(z):
        raise DegenerateInput("zero zenith")
    if np.hypot(z[0], z[1]) <= 1e-12 * np.linalg.norm(z):
        raise DegenerateInput("zenith at the principal point has no horizon direction")
    return z.copy()


def horizon_side(lines, z_est):
    """Signed position where each line meets the pseudo-horizon, relative to the pivot.

    Negative is left of the pivot, positive right, NaN where the meeting point
    is at infinity.
    """
    h = pseudo_horizon(z_est)
    pivot = np.cross(h, [0.0, 0.0, 1.0])
    q = np.cross(h, pivot)
    q = q[:2] / q[2]
    d = np.array([h[1], -h[0]])
    if d[0] < 0 or (d[0] == 0 and d[1] < 0):
        d = -d
    d /= np.linalg.norm(d)
    x = np.cross(np.asarray(lines, dtype=float).reshape(-1, 3), h)
    t = np.full(len(x), np.nan)
    finite = np.abs(x[:, 2]) > 1e-12 * np.linalg.norm(x, axis=1)
    t[finite] = (x[finite, :2] / x[finite, 2:3] - q) @ d
    return t


def classify_vertical(lines, z_est, tol_deg):
    """Lines passing within ``tol_deg`` (angular residual) of the zenith."""
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    ln = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    z = np.asarray(z_est, dtype=float)
    z = z / np.linalg.norm(z)
    return np.abs(ln @ z) < math.sin(math.radians(tol_deg))


def group_horizontals(endpoints, lines, z_est, pi, cfg):
    """Junction filtering and left/right split.

    ``endpoints`` is an ``(N, 4)`` array in the pixel frame of ``pi``;
    ``lines`` are the matching pseudo-space line equations.
    """
    endpoints = np.asarray(endpoints, dtype=float).reshape(-1, 4)
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    vertical = classify_vertical(lines, z_est, cfg.vert_closeness_deg)
    vi = np.flatnonzero(vertical)
    hi = np.flatnonzero(~vertical)
    if len(vi) == 0 or len(hi) == 0:
        raise NoHorizontals("need both zenith-vanishing and other segments")

    ev = endpoints[vi].reshape(-1, 2, 2)
    eh = endpoints[hi].reshape(-1, 2, 2)
    dist = np.sqrt(((ev[:, None, :, None, :] - eh[None, :, None, :, :]) ** 2).sum(-1))
    va, ha = np.nonzero(dist.min(axis=(2, 3)) < cfg.junction_radius)
    jxy = np.zeros((0, 2))
    if len(va):
        j = np.cross(lines[vi[va]], lines[hi[ha]]) @ pi.K.T
        finite = np.abs(j[:, 2]) > 1e-12 * np.linalg.norm(j, axis=1)
        jxy = j[finite, :2] / j[finite, 2:3]
    keep = np.zeros(len(hi), dtype=bool)
    if len(jxy):
        d = np.sqrt(((eh[:, :, None, :] - jxy[None, None, :, :]) ** 2).sum(-1))
        keep = (d < cfg.junction_radius).any(axis=(1, 2))
    kept = hi[keep]
    t = horizon_side(lines[kept], z_est)
    left, right = kept[t < 0], kept[t > 0]
    if cfg.require_both_groups and (len(left) == 0 or len(right) == 0):
        raise NoHorizontals(f"horizontal groups of size {len(left)} and {len(right)}")
    if max(len(left), len(right)) < 2:
        raise NoHorizontals(f"no group holds a pair: sizes {len(left)} and {len(right)}")
    return GroupedSegments(left=left, right=right, junctions=jxy, vertical=vertical)


def upright_frame(z, h, pi):
    """Relabel a Manhattan frame so its zenith is the axis closest to image vertical.

    The three axes of a Manhattan frame are interchangeable, so a hypothesis
    built with a horizontal VP as "zenith" explains the segments equally
    well. Picking the axis with the largest camera-y component resolves this
    for any camera with |pitch| and |roll| below 45 degrees.
    """
    f, R, angles = calibrate_from_vps(z, h, pi)
    k = int(np.argmax(np.abs(R[1])))
    if k == 1:
        return f, R, angles
    vps = vps_from_rotation(R, f, pi)
    return calibrate_from_vps(vps[k], vps[1], pi)


def sample_frames(lines, groups, zeniths, pi, cfg):
    """Up to ``cfg.n_frames`` valid hypotheses, alternating between the two groups.

    Draw ``a`` uses only the ``a``-th entries of arrays pre-drawn from
    ``default_rng([seed, 2])``, so the hypothesis set depends on nothing but
    the seed and the inputs. Draws whose VPs admit no real focal length are
    discarded; the budget is ``retry_factor * n_frames`` draws.
    """
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    zeniths = np.asarray(zeniths, dtype=float).reshape(-1, 3)
    if len(zeniths) == 0:
        raise InsufficientHypotheses("no zenith candidates")
    groups = groups.groups if hasattr(groups, "groups") else groups
    usable = [np.asarray(g) for g in groups if len(g) >= 2]
    if not usable:
        raise InsufficientHypotheses("no group holds a segment pair")

    budget = cfg.retry_factor * cfg.n_frames
    rng = np.random.default_rng([cfg.seed, 2])
    zi = rng.integers(len(zeniths), size=budget)
    ui = rng.random(budget)
    uj = rng.random(budget)

    counts = [0] * len(usable)
    out = []
    rejected = 0
    for a in range(budget):
        if len(out) >= cfg.n_frames:
            break
        g = int(np.argmin(counts))
        members = usable[g]
        n = len(members)
        i = int(ui[a] * n)
        j = int(uj[a] * (n - 1))
        j += j >= i
        i, j = int(members[i]), int(members[j])
        try:
            build = upright_frame if cfg.upright else calibrate_from_vps
            f, R, angles = build(zeniths[zi[a]], np.cross(lines[i], lines[j]), pi)
        except (NoRealFocal, DegenerateInput):
            rejected += 1
            continue
        counts[g] += 1
        out.append(FrameHypothesis(
            f=f, R=R, angles=angles, vps=vps_from_rotation(R, f, pi),
            zenith_source=int(zi[a]), group=g, pair=(i, j),
        ))
    if len(out) < cfg.min_frames:
        raise InsufficientHypotheses(f"{len(out)} valid hypotheses, need {cfg.min_frames}")
    if len(out) < cfg.n_frames:
        warnings.warn(f"draw budget exhausted: {len(out)} of {cfg.n_frames} hypotheses ({rejected} rejected)")
    return out
