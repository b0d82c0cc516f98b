"""Integer line rasterization shared by the renderer and the line maps."""

import math

import numpy as np


def bresenham(x0, y0, x1, y1):
    """Pixels (as two int arrays ``xs, ys``) on the 1-px Bresenham line between two pixels."""
    x0, y0, x1, y1 = int(x0), int(y0), int(x1), int(y1)
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    xs, ys = [], []
    while True:
        xs.append(x0)
        ys.append(y0)
        if x0 == x1 and y0 == y1:
            break
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy
    return np.array(xs), np.array(ys)


def clip_segment(seg, xmin, ymin, xmax, ymax):
    """Liang-Barsky clip of ``(x0, y0, x1, y1)`` to a box; None if fully outside."""
    x0, y0, x1, y1 = (float(v) for v in seg)
    dx, dy = x1 - x0, y1 - y0
    t0, t1 = 0.0, 1.0
    for p, q in ((-dx, x0 - xmin), (dx, xmax - x0), (-dy, y0 - ymin), (dy, ymax - y0)):
        if p == 0:
            if q < 0:
                return None
            continue
        t = q / p
        if p < 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return (x0 + t0 * dx, y0 + t0 * dy, x0 + t1 * dx, y0 + t1 * dy)


def segment_pixels(seg, width, height):
    """Flat pixel indices covered by a continuous-coordinate segment, clipped to the image."""
    seg = clip_segment(seg, 0.0, 0.0, width - 1e-9, height - 1e-9)
    if seg is None:
        return np.zeros(0, dtype=int)
    x0, y0, x1, y1 = seg
    xs, ys = bresenham(math.floor(x0), math.floor(y0), math.floor(x1), math.floor(y1))
    keep = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    return np.unique(ys[keep] * width + xs[keep])


def draw_segments(segments, width, height, values=None):
    """Raster with each segment's pixels set to its value (default 1); overlaps keep the max."""
    out = np.zeros(height * width)
    for i, seg in enumerate(segments):
        idx = segment_pixels(seg, width, height)
        v = 1.0 if values is None else values[i]
        out[idx] = np.maximum(out[idx], v)
    return out.reshape(height, width)
