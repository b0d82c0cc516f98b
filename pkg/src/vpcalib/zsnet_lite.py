"""Toy zenith scorer: per-element MLPs, max-pooled line feature, sigmoid head.

Layer wiring (all hidden activations are leaky ReLU, slope 0.01)::

    candidate z  -> hz1 (3->32) -> hz2 (32->32) ----------------+
    lines  L_z   -> hl1 (3->32) -> hl2 (32->32) -> max over L_z -+-> concat (64)
                                                   -> s1 (64->32) -> s2 (32->1) -> sigmoid

Gradients are computed by hand; :func:`numerical_gradient` is the
finite-difference oracle used by the tests.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NoLabeledCandidates, ShapeMismatch
from .homgeom import structure_tensor

HIDDEN = 32
SLOPE = 0.01
FORMAT_VERSION = 1

LAYERS = {
    "hz1": (3, HIDDEN),
    "hz2": (HIDDEN, HIDDEN),
    "hl1": (3, HIDDEN),
    "hl2": (HIDDEN, HIDDEN),
    "s1": (2 * HIDDEN, HIDDEN),
    "s2": (HIDDEN, 1),
}


def init_params(seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    params = {}
    for name, (n_in, n_out) in LAYERS.items():
        params[name + ".W"] = rng.normal(0.0, scale * math.sqrt(2.0 / n_in), size=(n_in, n_out))
        params[name + ".b"] = np.zeros(n_out)
    return params


def zero_params():
    return {k: np.zeros_like(v) for k, v in init_params(0).items()}


def save_params(params, path):
    doc = {
        "format": "vpcalib-zsnet",
        "version": FORMAT_VERSION,
        "layers": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in sorted(params.items())},
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_params(path):
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != FORMAT_VERSION:
        raise ShapeMismatch(f"unsupported zsnet params version {doc.get('version')}")
    params = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in doc["layers"].items()}
    _check_shapes(params)
    return params


def _check_shapes(params):
    for name, (n_in, n_out) in LAYERS.items():
        W, b = params.get(name + ".W"), params.get(name + ".b")
        if W is None or b is None or W.shape != (n_in, n_out) or b.shape != (n_out,):
            raise ShapeMismatch(f"layer {name} missing or misshaped")


def _rows3(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != 3:
        raise ShapeMismatch(f"expected (N, 3) homogeneous rows, got shape {x.shape}")
    return x


def canonical_lines(lines):
    """Unit norm, first component made nonnegative (near-vertical lines are a-dominant)."""
    lines = _rows3(lines)
    lines = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    flip = (lines[:, 0] < 0) | ((lines[:, 0] == 0) & (lines[:, 1] < 0))
    lines[flip] *= -1
    return lines


def canonical_points(points):
    """Unit norm, y made nonnegative (zenith candidates are y-dominant)."""
    points = _rows3(points)
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    flip = (points[:, 1] < 0) | ((points[:, 1] == 0) & (points[:, 2] < 0))
    points[flip] *= -1
    return points


def _dense(x, W, b):
    # einsum reduces every row in the same order, so permuting rows permutes
    # outputs bit for bit (BLAS kernels need not)
    return np.einsum("ij,jk->ik", x, W) + b


def _lrelu(x):
    return np.maximum(x, SLOPE * x)


def _dlrelu(x):
    return np.where(x > 0, 1.0, SLOPE)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softplus(x):
    return np.logaddexp(0.0, x)


def _forward(params, lines, cands):
    _check_shapes(params)
    if lines.ndim != 2 or lines.shape[1] != 3 or cands.ndim != 2 or cands.shape[1] != 3:
        raise ShapeMismatch("lines and candidates must be (N, 3)")
    if len(lines) == 0 or len(cands) == 0:
        raise ShapeMismatch("empty lines or candidates")
    c = {}
    c["a1"] = _dense(lines, params["hl1.W"], params["hl1.b"])
    c["r1"] = _lrelu(c["a1"])
    c["a2"] = _dense(c["r1"], params["hl2.W"], params["hl2.b"])
    c["r2"] = _lrelu(c["a2"])
    c["arg"] = np.argmax(c["r2"], axis=0)
    c["g"] = g = c["r2"][c["arg"], np.arange(HIDDEN)]
    c["c1"] = _dense(cands, params["hz1.W"], params["hz1.b"])
    c["q1"] = _lrelu(c["c1"])
    c["c2"] = _dense(c["q1"], params["hz2.W"], params["hz2.b"])
    c["q2"] = _lrelu(c["c2"])
    s1 = params["s1.W"]
    c["e1"] = _dense(c["q2"], s1[HIDDEN:], _dense(g[None, :], s1[:HIDDEN], params["s1.b"])[0])
    c["t1"] = _lrelu(c["e1"])
    c["o"] = _dense(c["t1"], params["s2.W"], params["s2.b"])[:, 0]
    c["p"] = _sigmoid(c["o"])
    return c


def forward(params, lines, cands):
    """Score in (0, 1) for every candidate. Inputs are raw homogeneous vectors."""
    return _forward(params, canonical_lines(lines), canonical_points(cands))["p"]


@dataclass
class TrainBatch:
    lines: np.ndarray
    cands: np.ndarray
    labels: np.ndarray
    z_gt: np.ndarray

    def __post_init__(self):
        self.lines = canonical_lines(self.lines)
        self.cands = canonical_points(self.cands)
        self.labels = np.asarray(self.labels, dtype=int)
        self.z_gt = np.asarray(self.z_gt, dtype=float)
        if not np.any(self.labels >= 0):
            raise NoLabeledCandidates("batch has no defined labels")
        self.st = structure_tensor(self.cands).reshape(-1, 9)
        self.st_gt = structure_tensor(self.z_gt).reshape(9)


def _losses(params, batch, lam, cache=None):
    c = cache or _forward(params, batch.lines, batch.cands)
    mask = batch.labels >= 0
    n_lab = int(mask.sum())
    if n_lab == 0:
        raise NoLabeledCandidates("no candidate carries a defined label")
    y = batch.labels[mask].astype(float)
    o = c["o"][mask]
    l_cls = float(np.mean(_softplus(o) - y * o))
    p = c["p"]
    wsum = p.sum()
    st_avg = (p @ batch.st) / wsum
    diff = batch.st_gt - st_avg
    l_loc = math.sqrt(diff @ diff)
    c.update(mask=mask, n_lab=n_lab, st_avg=st_avg, diff=diff, wsum=wsum, l_loc=l_loc)
    return l_cls, l_loc, l_cls + lam * l_loc, c


def loss(params, batch, lam=1.0):
    """(L_cls, L_loc, total) with binary cross entropy over labeled candidates."""
    l_cls, l_loc, total, _ = _losses(params, batch, lam)
    return l_cls, l_loc, total


def backward(params, batch, lam=1.0):
    """Gradient of the total loss for every parameter, plus the loss triple."""
    l_cls, l_loc, total, c = _losses(params, batch, lam)
    p = c["p"]
    d_o = np.zeros_like(p)
    d_o[c["mask"]] = (p[c["mask"]] - batch.labels[c["mask"]]) / c["n_lab"]
    if lam != 0 and c["l_loc"] > 0:
        d_p = -((batch.st - c["st_avg"]) @ c["diff"]) / (c["l_loc"] * c["wsum"])
        d_o += lam * d_p * p * (1.0 - p)

    g = {}
    d_o = d_o[:, None]
    g["s2.W"] = c["t1"].T @ d_o
    g["s2.b"] = d_o.sum(axis=0)
    d_e1 = (d_o @ params["s2.W"].T) * _dlrelu(c["e1"])
    sum_e1 = d_e1.sum(axis=0)
    g["s1.W"] = np.vstack([np.outer(c["g"], sum_e1), c["q2"].T @ d_e1])
    g["s1.b"] = sum_e1
    d_g = params["s1.W"][:HIDDEN] @ sum_e1
    d_q2 = d_e1 @ params["s1.W"][HIDDEN:].T

    d_c2 = d_q2 * _dlrelu(c["c2"])
    g["hz2.W"] = c["q1"].T @ d_c2
    g["hz2.b"] = d_c2.sum(axis=0)
    d_c1 = (d_c2 @ params["hz2.W"].T) * _dlrelu(c["c1"])
    g["hz1.W"] = batch.cands.T @ d_c1
    g["hz1.b"] = d_c1.sum(axis=0)

    d_r2 = np.zeros_like(c["r2"])
    d_r2[c["arg"], np.arange(HIDDEN)] = d_g
    d_a2 = d_r2 * _dlrelu(c["a2"])
    g["hl2.W"] = c["r1"].T @ d_a2
    g["hl2.b"] = d_a2.sum(axis=0)
    d_a1 = (d_a2 @ params["hl2.W"].T) * _dlrelu(c["a1"])
    g["hl1.W"] = batch.lines.T @ d_a1
    g["hl1.b"] = d_a1.sum(axis=0)
    return g, (l_cls, l_loc, total)


def numerical_gradient(params, batch, lam=1.0, eps=1e-5):
    """Central finite differences of the total loss."""
    grads = {}
    for name, value in params.items():
        gr = np.zeros_like(value)
        flat = value.ravel()
        for i in range(flat.size):
            old = flat[i]
            flat[i] = old + eps
            up = loss(params, batch, lam)[2]
            flat[i] = old - eps
            down = loss(params, batch, lam)[2]
            flat[i] = old
            gr.flat[i] = (up - down) / (2 * eps)
        grads[name] = gr
    return grads


def max_relative_error(analytic, numeric, floor=1e-6):
    worst = 0.0
    for name in analytic:
        a, n = analytic[name], numeric[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@dataclass
class TrainConfig:
    epochs: int = 20
    lr: float = 1e-3
    lr_halve_every: int = 5
    lam: float = 1.0
    batch_size: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0


@dataclass
class TrainHistory:
    l_cls: list = field(default_factory=list)
    l_loc: list = field(default_factory=list)


def evaluate(params, batches, lam=1.0):
    """Mean (L_cls, L_loc) over batches."""
    vals = np.array([loss(params, b, lam)[:2] for b in batches])
    return float(vals[:, 0].mean()), float(vals[:, 1].mean())


def accuracy(params, batches, threshold=0.5):
    """Fraction of labeled candidates whose thresholded score matches the label."""
    hit = tot = 0
    for b in batches:
        p = _forward(params, b.lines, b.cands)["p"]
        mask = b.labels >= 0
        hit += int(np.sum((p[mask] > threshold) == (b.labels[mask] == 1)))
        tot += int(mask.sum())
    return hit / max(tot, 1)


def train(params, dataset, cfg=None):
    """Adam over shuffled mini-batches; the learning rate halves every few epochs.

    Returns the trained parameters (a new dict) and the per-epoch mean losses,
    the first entry being the loss before any update.
    """
    cfg = cfg or TrainConfig()
    if not dataset:
        raise ValueError("empty training set")
    params = {k: v.copy() for k, v in params.items()}
    m = {k: np.zeros_like(v) for k, v in params.items()}
    v = {k: np.zeros_like(v) for k, v in params.items()}
    rng = np.random.default_rng(cfg.seed)
    hist = TrainHistory()
    l_cls, l_loc = evaluate(params, dataset, cfg.lam)
    hist.l_cls.append(l_cls)
    hist.l_loc.append(l_loc)
    step = 0
    for epoch in range(cfg.epochs):
        lr = cfg.lr * 0.5 ** (epoch // cfg.lr_halve_every)
        order = rng.permutation(len(dataset))
        for start in range(0, len(order), cfg.batch_size):
            chunk = order[start:start + cfg.batch_size]
            grads = {k: np.zeros_like(val) for k, val in params.items()}
            for i in chunk:
                gi, _ = backward(params, dataset[i], cfg.lam)
                for k in grads:
                    grads[k] += gi[k] / len(chunk)
            step += 1
            for k in params:
                m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * grads[k]
                v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * grads[k] ** 2
                mhat = m[k] / (1 - cfg.beta1 ** step)
                vhat = v[k] / (1 - cfg.beta2 ** step)
                params[k] = params[k] - lr * mhat / (np.sqrt(vhat) + cfg.eps)
        l_cls, l_loc = evaluate(params, dataset, cfg.lam)
        hist.l_cls.append(l_cls)
        hist.l_loc.append(l_loc)
    return params, hist


def fallback_score(lines, cands, tol_deg=2.0):
    """Fraction of lines passing within ``tol_deg`` of each candidate.

    "Passing within" means the angular residual between the candidate and the
    line's plane through the pseudo camera center is below ``tol_deg``.
    """
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    cands = np.asarray(cands, dtype=float).reshape(-1, 3)
    ln = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    cn = cands / np.linalg.norm(cands, axis=1, keepdims=True)
    residual = np.abs(cn @ ln.T)
    return np.mean(residual < math.sin(math.radians(tol_deg)), axis=1)


def pseudo_lines(segments, pi):
    """Line equations of segments after mapping their endpoints to pseudo space."""
    from .homgeom import lines_from_segments
    from .lsd_lite import segments_to_array

    arr = segments if isinstance(segments, np.ndarray) else segments_to_array(segments)
    arr = arr.reshape(-1, 4)
    return lines_from_segments(pi.points_to_pseudo(arr[:, :2]), pi.points_to_pseudo(arr[:, 2:]))


def make_zenith_batches(n, seed, synth_cfg=None, zenith_cfg=None):
    """Labeled zenith-candidate batches, one per synthetic scene (noise-free by default)."""
    from .errors import InsufficientLines, SamplingExhausted
    from .synth import SynthConfig, generate_scene, scene_rng
    from .zenith import ZenithConfig, filter_vertical, label_candidates, sample_candidates

    synth_cfg = synth_cfg or SynthConfig()
    zenith_cfg = zenith_cfg or ZenithConfig()
    batches = []
    i = 0
    while len(batches) < n:
        rng = scene_rng(seed, i)
        i += 1
        segments, ann, _ = generate_scene(synth_cfg, rng)
        lines = pseudo_lines(segments, ann.pseudo)
        try:
            lz, _ = filter_vertical(lines, zenith_cfg, rng)
            cands = sample_candidates(lz, zenith_cfg, rng)
        except (InsufficientLines, SamplingExhausted):
            continue
        label_candidates(cands, ann.z_gt, zenith_cfg)
        if not np.any(cands.labels >= 0):
            continue
        batches.append(TrainBatch(lz, cands.v, cands.labels, ann.z_gt))
    return batches
