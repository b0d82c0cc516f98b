"""A small LSD-style line segment detector and the segment text format.

The detector follows the level-line region-growing design: 2x2 gradients,
pixels seeded in order of decreasing gradient magnitude, regions grown over
8-neighbours whose orientation is within ``angle_tol_deg`` of the region,
then approximated by a rectangle. Instead of the a-contrario NFA test a
region is validated by its aligned-pixel density, pixel count and length.

Orientations are compared modulo pi, so the two flanks of a thin bright line
form a single region centred on the line.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ImageTooSmall, ParseError
from .homgeom import line_from_endpoints


@dataclass
class Segment:
    p0: np.ndarray
    p1: np.ndarray
    line: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.p0 = np.asarray(self.p0, dtype=float).reshape(2)
        self.p1 = np.asarray(self.p1, dtype=float).reshape(2)
        self.line = line_from_endpoints(np.append(self.p0, 1.0), np.append(self.p1, 1.0))

    @property
    def length(self):
        return float(np.hypot(*(self.p1 - self.p0)))

    @property
    def direction(self):
        d = self.p1 - self.p0
        return d / np.linalg.norm(d)

    def as_row(self):
        return [self.p0[0], self.p0[1], self.p1[0], self.p1[1]]


def segments_to_array(segments):
    """``(N, 4)`` array of ``x0 y0 x1 y1``."""
    if not segments:
        return np.zeros((0, 4))
    return np.array([s.as_row() for s in segments], dtype=float)


def segments_from_array(arr):
    return [Segment(r[:2], r[2:]) for r in np.asarray(arr, dtype=float).reshape(-1, 4)]


@dataclass
class DetectorConfig:
    min_length: float = 10.0
    angle_tol_deg: float = 22.5
    density_min: float = 0.7
    grad_threshold: float = 0.02
    smooth_sigma: float = 1.0
    min_pixels: int = 8
    merge_angle_deg: float = 1.0
    merge_dist: float = 1.5
    merge_gap: float = 2.0
    extend: bool = False
    extend_band: float = 1.5
    extend_gap: float = 4.0


def _gradients(pix, sigma):
    a = gaussian_filter(pix, sigma, mode="nearest") if sigma > 0 else pix
    gx = 0.5 * (a[:-1, 1:] + a[1:, 1:] - a[:-1, :-1] - a[1:, :-1])
    gy = 0.5 * (a[1:, :-1] + a[1:, 1:] - a[:-1, :-1] - a[:-1, 1:])
    mag = np.hypot(gx, gy)
    ori = np.mod(np.arctan2(gy, gx), math.pi)
    return mag, ori


def _ang_diff_pi(a, b):
    d = abs(a - b) % math.pi
    return min(d, math.pi - d)


def _grow(seed, ori, mag, used, valid, width, height, tol):
    """Region growing from ``seed`` (flat index); returns the list of flat indices."""
    region = [seed]
    queue = deque([seed])
    o = ori[seed]
    sx, sy = math.cos(2 * o), math.sin(2 * o)
    region_o = o
    in_region = {seed}
    while queue:
        idx = queue.popleft()
        y, x = divmod(idx, width)
        for dy in (-1, 0, 1):
            yy = y + dy
            if yy < 0 or yy >= height:
                continue
            for dx in (-1, 0, 1):
                xx = x + dx
                if (dx == 0 and dy == 0) or xx < 0 or xx >= width:
                    continue
                n = yy * width + xx
                if used[n] or not valid[n] or n in in_region:
                    continue
                if _ang_diff_pi(ori[n], region_o) < tol:
                    in_region.add(n)
                    region.append(n)
                    queue.append(n)
                    sx += math.cos(2 * ori[n])
                    sy += math.sin(2 * ori[n])
                    region_o = 0.5 * math.atan2(sy, sx)
    return region


def _rectangle(region, mag, width):
    idx = np.asarray(region)
    ys, xs = np.divmod(idx, width)
    # pixel i spans [i, i+1); a 2x2 gradient sample sits on the shared corner
    xs = xs + 1.0
    ys = ys + 1.0
    w = mag[idx]
    cx = np.average(xs, weights=w)
    cy = np.average(ys, weights=w)
    dx, dy = xs - cx, ys - cy
    cov = np.array([
        [np.average(dx * dx, weights=w), np.average(dx * dy, weights=w)],
        [np.average(dx * dy, weights=w), np.average(dy * dy, weights=w)],
    ])
    u = np.linalg.eigh(cov)[1][:, 1]
    nrm = np.array([-u[1], u[0]])
    along = dx * u[0] + dy * u[1]
    across = dx * nrm[0] + dy * nrm[1]
    lmin, lmax = along.min(), along.max()
    wmin, wmax = across.min(), across.max()
    c = np.array([cx, cy])
    p0 = c + lmin * u
    p1 = c + lmax * u
    length = lmax - lmin + 1.0
    rect_w = max(wmax - wmin + 1.0, 1.0)
    return p0, p1, length, rect_w


def _merge_duplicates(segs, cfg):
    """Fuse near-collinear segments whose extents overlap or nearly touch."""
    cos_tol = math.cos(math.radians(cfg.merge_angle_deg))
    segs = [np.array(s, dtype=float) for s in segs]
    changed = True
    while changed:
        changed = False
        segs.sort(key=lambda s: -np.hypot(s[2] - s[0], s[3] - s[1]))
        for i in range(len(segs)):
            a = segs[i]
            da = a[2:] - a[:2]
            la = np.linalg.norm(da)
            ua = da / la
            na = np.array([-ua[1], ua[0]])
            for j in range(i + 1, len(segs)):
                b = segs[j]
                db = b[2:] - b[:2]
                lb = np.linalg.norm(db)
                if abs(ua @ db) / lb < cos_tol:
                    continue
                if max(abs((b[:2] - a[:2]) @ na), abs((b[2:] - a[:2]) @ na)) > cfg.merge_dist:
                    continue
                t = np.array([(b[:2] - a[:2]) @ ua, (b[2:] - a[:2]) @ ua])
                if t.max() < -cfg.merge_gap or t.min() > la + cfg.merge_gap:
                    continue
                lo, hi = min(0.0, t.min()), max(la, t.max())
                off = lb * (((b[:2] + b[2:]) / 2 - a[:2]) @ na) / (la + lb)
                base = a[:2] + off * na
                segs[i] = np.concatenate([base + lo * ua, base + hi * ua])
                del segs[j]
                changed = True
                break
            if changed:
                break
    return segs


def _density(region, rect):
    _, _, length, rect_w = rect
    return len(region) / (length * rect_w)


def _refine(region, seed, ori, mag, used, valid, width, height, tol, cfg):
    """Tighten a region that fails the density test.

    First re-grow from the seed with a tolerance estimated from the angles
    near the seed, then repeatedly drop pixels far from the seed. Returns
    ``(region, rect)`` with ``rect`` None when nothing passes.
    """
    rect = _rectangle(region, mag, width)
    if _density(region, rect) >= cfg.density_min:
        return region, rect

    sy, sx = divmod(seed, width)
    near = [n for n in region if (divmod(n, width)[0] - sy) ** 2 + (n % width - sx) ** 2 <= rect[3] ** 2]
    diffs = np.array([_ang_diff_pi(ori[n], ori[seed]) for n in near])
    tau = min(tol, max(2.0 * math.sqrt(np.mean(diffs ** 2)), math.radians(2.0)))
    region = _grow(seed, ori, mag, used, valid, width, height, tau)
    if len(region) < cfg.min_pixels:
        return region, None
    rect = _rectangle(region, mag, width)

    pts = np.array([divmod(n, width) for n in region], dtype=float)
    d2 = (pts[:, 0] - sy) ** 2 + (pts[:, 1] - sx) ** 2
    radius = math.sqrt(d2.max())
    region = np.asarray(region)
    while _density(region, rect) < cfg.density_min:
        radius *= 0.75
        keep = d2 <= radius * radius
        if keep.sum() < cfg.min_pixels:
            return region.tolist(), None
        region, d2 = region[keep], d2[keep]
        rect = _rectangle(region, mag, width)
    return region.tolist(), rect


def _extend(p0, p1, mag, ori, cfg):
    """Push both endpoints outwards while the band around the line keeps aligned gradient.

    Regions near corners are often claimed by a neighbouring segment first,
    leaving the rectangle short of the junction.
    """
    h, w = mag.shape
    u = (p1 - p0) / np.linalg.norm(p1 - p0)
    nrm = np.array([-u[1], u[0]])
    want = math.atan2(nrm[1], nrm[0]) % math.pi
    tol = math.radians(cfg.angle_tol_deg)
    offsets = np.arange(-cfg.extend_band, cfg.extend_band + 1e-9, 0.5)

    def supported(q):
        pts = q[None, :] + offsets[:, None] * nrm[None, :]
        c = np.rint(pts[:, 0] - 1.0).astype(int)
        r = np.rint(pts[:, 1] - 1.0).astype(int)
        ok = (r >= 0) & (r < h) & (c >= 0) & (c < w)
        if not ok.any():
            return False
        r, c = r[ok], c[ok]
        d = np.abs(ori[r, c] - want)
        d = np.minimum(d, math.pi - d)
        return bool(np.any((mag[r, c] > cfg.grad_threshold) & (d < tol)))

    ends = []
    for p, sign in ((p0, -1.0), (p1, 1.0)):
        best, misses, t = 0.0, 0, 0.5
        while misses * 0.5 <= cfg.extend_gap:
            if supported(p + sign * t * u):
                best, misses = t, 0
            else:
                misses += 1
            t += 0.5
        ends.append(p + sign * best * u)
    return ends[0], ends[1]


def detect_segments(img, cfg=None):
    """Line segments of a grayscale image, longest first."""
    cfg = cfg or DetectorConfig()
    pix = img.pixels if hasattr(img, "pixels") else np.asarray(img, dtype=float)
    if pix.shape[0] < 16 or pix.shape[1] < 16:
        raise ImageTooSmall(f"image {pix.shape[1]}x{pix.shape[0]} is below 16x16")
    mag, ori = _gradients(pix, cfg.smooth_sigma)
    h, w = mag.shape
    tol = math.radians(cfg.angle_tol_deg)

    mag_flat = mag.ravel()
    ori_l = ori.ravel().tolist()
    valid = (mag_flat > cfg.grad_threshold).tolist()
    used = [False] * (h * w)
    order = np.argsort(-mag_flat, kind="stable")
    order = order[mag_flat[order] > cfg.grad_threshold]

    raw = []
    for seed in order.tolist():
        if used[seed]:
            continue
        region = _grow(seed, ori_l, mag_flat, used, valid, w, h, tol)
        if len(region) < cfg.min_pixels:
            for n in region:
                used[n] = True
            continue
        region, rect = _refine(region, seed, ori_l, mag_flat, used, valid, w, h, tol, cfg)
        for n in region:
            used[n] = True
        if rect is None:
            continue
        p0, p1, _, _ = rect
        if np.hypot(*(p1 - p0)) <= cfg.min_length:
            continue
        if cfg.extend:
            p0, p1 = _extend(p0, p1, mag, ori, cfg)
        raw.append(np.concatenate([p0, p1]))

    merged = _merge_duplicates(raw, cfg)
    out = [Segment(s[:2], s[2:]) for s in merged if np.hypot(s[2] - s[0], s[3] - s[1]) > cfg.min_length]
    out.sort(key=lambda s: -s.length)
    return out


def _fmt(x):
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def format_segments(segments):
    """One ``x0 y0 x1 y1`` line per segment, shortest exact float repr."""
    return "".join(" ".join(_fmt(v) for v in s.as_row()) + "\n" for s in segments)


def write_segments(segments, path):
    Path(path).write_text(format_segments(segments))


def read_segments(path):
    segments = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        parts = text.split()
        if len(parts) != 4:
            raise ParseError(f"expected 4 numbers, got {len(parts)}", lineno)
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise ParseError(f"not a number in {text!r}", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite coordinate", lineno)
        try:
            segments.append(Segment(vals[:2], vals[2:]))
        except Exception:
            raise ParseError("zero-length segment", lineno) from None
    return segments
