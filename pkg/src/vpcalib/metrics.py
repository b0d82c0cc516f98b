"""Calibration error metrics, horizon AUC and report writers.

FoV is the vertical field of view throughout.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np

from .camera import focal_to_fov, horizon_border_y, horizon_from_camera
from .errors import EmptyInput

AUC_RANGE = 0.25
METRICS = ("angle", "pitch", "roll", "fov", "horizon")


def horizon_error(pred, gt, width, height):
    """Max over both vertical borders of the gap between two lines, in image heights.

    ``inf`` when either line misses a border.
    """
    p = horizon_border_y(pred, width)
    g = horizon_border_y(gt, width)
    if p is None or g is None:
        return math.inf
    return max(abs(p[0] - g[0]), abs(p[1] - g[1])) / height


def auc(errors, max_error=AUC_RANGE):
    """Area under the cumulative error curve on ``[0, max_error]``, in percent.

    The curve is a step function, so the area is exact: each error ``e``
    below the range contributes ``max_error - e``.
    """
    e = np.asarray(errors, dtype=float).ravel()
    if e.size == 0:
        raise EmptyInput("auc of an empty list")
    inside = e[e < max_error]
    return float(np.sum(max_error - inside) / (max_error * e.size) * 100.0)


def cumulative_curve(errors, max_error=AUC_RANGE):
    """``(thresholds, fractions)`` of the step curve: the fraction of errors <= x."""
    e = np.sort(np.asarray(errors, dtype=float).ravel())
    if e.size == 0:
        raise EmptyInput("curve of an empty list")
    inside = e[e <= max_error]
    xs = np.concatenate([[0.0], inside, [max_error]])
    fr = np.concatenate([[np.mean(e <= 0.0)], np.arange(1, len(inside) + 1) / e.size, [len(inside) / e.size]])
    return xs, fr


def up_vector_errors(pred, gt):
    """``(angle, pitch, roll)`` errors in degrees."""
    cos = float(np.clip(np.dot(pred.up, gt.up) / (np.linalg.norm(pred.up) * np.linalg.norm(gt.up)), -1.0, 1.0))
    angle = math.degrees(math.acos(cos))
    pitch = abs(math.degrees(pred.pitch - gt.pitch))
    d = math.degrees(pred.roll - gt.roll)
    roll = abs((d + 180.0) % 360.0 - 180.0)
    return angle, pitch, roll


def fov_error(pred_f, gt_f, height):
    return abs(math.degrees(focal_to_fov(pred_f, height) - focal_to_fov(gt_f, height)))


@dataclass
class EvalRecord:
    name: str
    angle: float
    pitch: float
    roll: float
    fov: float
    horizon: float
    degraded: bool = False


def evaluate_camera(name, pred, gt, degraded=False):
    angle, pitch, roll = up_vector_errors(pred, gt)
    return EvalRecord(
        name=name, angle=angle, pitch=pitch, roll=roll,
        fov=fov_error(pred.f, gt.f, gt.height),
        horizon=horizon_error(horizon_from_camera(pred), horizon_from_camera(gt), gt.width, gt.height),
        degraded=degraded,
    )


@dataclass
class Summary:
    mean: dict
    median: dict
    auc: float
    n: int
    n_degraded: int
    n_horizon_inf: int

    def rows(self):
        out = [(m, self.mean[m], self.median[m]) for m in METRICS]
        out.append(("auc", self.auc, self.auc))
        return out


def summarize(records):
    """Means and medians skip infinite horizon errors; the AUC counts them as misses."""
    if not records:
        raise EmptyInput("no records to summarize")
    mean, median = {}, {}
    for m in METRICS:
        v = np.array([getattr(r, m) for r in records], dtype=float)
        v = v[np.isfinite(v)]
        mean[m] = float(np.mean(v)) if v.size else math.inf
        median[m] = float(np.median(v)) if v.size else math.inf
    hz = [r.horizon for r in records]
    return Summary(
        mean=mean, median=median, auc=auc(hz), n=len(records),
        n_degraded=sum(r.degraded for r in records),
        n_horizon_inf=sum(not math.isfinite(h) for h in hz),
    )


def _fmt(x):
    return repr(float(x))


def summary_csv(summary):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["metric", "mean", "median"])
    for name, mean, med in summary.rows():
        w.writerow([name, _fmt(mean), _fmt(med)])
    return buf.getvalue()


def records_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(asdict(records[0]).keys()) if records else ["name"]
    w.writerow(cols)
    for r in records:
        d = asdict(r)
        w.writerow([d[c] if c in ("name", "degraded") else _fmt(d[c]) for c in cols])
    return buf.getvalue()


def curve_csv(errors, max_error=AUC_RANGE):
    xs, fr = cumulative_curve(errors, max_error)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["threshold", "fraction"])
    for x, f in zip(xs, fr):
        w.writerow([_fmt(x), _fmt(f)])
    return buf.getvalue()


def curve_svg(errors, max_error=AUC_RANGE, size=(320, 240), margin=30):
    """Cumulative curve as a standalone SVG staircase polyline."""
    xs, fr = cumulative_curve(errors, max_error)
    w, h = size
    pw, ph = w - 2 * margin, h - 2 * margin

    def pt(x, y):
        return f"{margin + pw * x / max_error:.2f},{margin + ph * (1.0 - y):.2f}"

    pts = [pt(xs[0], fr[0])]
    for i in range(1, len(xs)):
        pts.append(pt(xs[i], fr[i - 1]))
        pts.append(pt(xs[i], fr[i]))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">\n'
        f'<rect x="{margin}" y="{margin}" width="{pw}" height="{ph}" fill="none" stroke="#999"/>\n'
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{" ".join(pts)}"/>\n'
        f'<text x="{margin}" y="{h - 8}" font-size="11">horizon error 0..{max_error} (image heights), '
        f'AUC {auc(errors, max_error):.2f}%</text>\n'
        "</svg>\n"
    )
