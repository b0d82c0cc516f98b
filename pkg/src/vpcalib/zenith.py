"""Zenith candidates: vertical-line filtering, pair sampling, labels, aggregation."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import AllScoresZero, EmptySelection, InsufficientLines, SamplingExhausted
from .homgeom import cossim, principal_eigenvector, structure_tensor

UNDEFINED = -1


@dataclass
class ZenithConfig:
    delta_z: float = 67.5
    delta_p: float = 2.0
    delta_n: float = 5.0
    delta_c: float = 0.5
    n_lines: int = 256
    n_candidates: int = 256
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.delta_p < self.delta_n < 90:
            raise ValueError("need 0 < delta_p < delta_n < 90")
        if not 0 < self.delta_c < 1:
            raise ValueError("delta_c must lie in (0, 1)")


@dataclass
class ZenithCandidates:
    """Candidate zenith VPs in pseudo space, one row each, unit norm."""

    v: np.ndarray
    source: np.ndarray
    scores: np.ndarray = None
    labels: np.ndarray = None

    def __len__(self):
        return len(self.v)

    def subset(self, idx):
        idx = np.asarray(idx)
        return ZenithCandidates(
            v=self.v[idx],
            source=self.source[idx],
            scores=None if self.scores is None else self.scores[idx],
            labels=None if self.labels is None else self.labels[idx],
        )


def line_angles_deg(lines):
    """Angle of each line from the image horizontal, in [0, 90] degrees."""
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    return np.degrees(np.arctan2(np.abs(lines[:, 0]), np.abs(lines[:, 1])))


def filter_vertical(lines, cfg, rng=None):
    """Lines steeper than ``delta_z``; returns ``(lines, indices)``.

    When more than ``n_lines`` qualify, ``n_lines`` of them are drawn without
    replacement (order preserved).
    """
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    keep = np.flatnonzero(line_angles_deg(lines) > cfg.delta_z)
    if len(keep) < 2:
        raise InsufficientLines(f"{len(keep)} near-vertical lines, need at least 2")
    if len(keep) > cfg.n_lines:
        rng = rng if rng is not None else np.random.default_rng([cfg.seed, 0])
        keep = np.sort(rng.choice(keep, size=cfg.n_lines, replace=False))
    return lines[keep], keep


def sample_candidates(lines, cfg, rng=None):
    """Intersections of random distinct line pairs, redrawn when the pair is degenerate."""
    lines = np.asarray(lines, dtype=float).reshape(-1, 3)
    n = len(lines)
    if n < 2:
        raise InsufficientLines("need at least 2 lines to sample candidates")
    rng = rng if rng is not None else np.random.default_rng([cfg.seed, 1])
    unit_lines = lines / np.linalg.norm(lines, axis=1, keepdims=True)
    want = cfg.n_candidates
    budget = 100 * want
    pts, src = [], []
    drawn = 0
    while len(pts) < want:
        if drawn >= budget:
            raise SamplingExhausted(f"only {len(pts)} of {want} candidates after {drawn} draws")
        k = min(want - len(pts), budget - drawn)
        i = rng.integers(n, size=k)
        j = rng.integers(n - 1, size=k)
        j = j + (j >= i)
        drawn += k
        v = np.cross(unit_lines[i], unit_lines[j])
        norm = np.linalg.norm(v, axis=1)
        ok = norm > 1e-12
        pts.extend(v[ok] / norm[ok, None])
        src.extend(np.stack([i[ok], j[ok]], axis=1))
    return ZenithCandidates(v=np.array(pts), source=np.array(src, dtype=int))


def label_candidates(cands, z_gt, cfg):
    """1 within delta_p of the truth, 0 beyond delta_n, UNDEFINED in between."""
    sim = np.atleast_1d(cossim(cands.v, np.asarray(z_gt, dtype=float)[None, :]))
    labels = np.full(len(sim), UNDEFINED, dtype=int)
    labels[sim > math.cos(math.radians(cfg.delta_p))] = 1
    labels[sim < math.cos(math.radians(cfg.delta_n))] = 0
    cands.labels = labels
    return cands


def average_tensor(points, weights):
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    if not total > 0:
        raise AllScoresZero("candidate scores sum to zero")
    return np.tensordot(weights, structure_tensor(points), axes=1) / total


def aggregate(cands, scores=None):
    """Score-weighted mean structure tensor and its principal direction."""
    scores = cands.scores if scores is None else scores
    st = average_tensor(cands.v, scores)
    return st, principal_eigenvector(st)


def localization_loss(cands, z_gt, scores=None):
    st, _ = aggregate(cands, scores)
    return float(np.linalg.norm(structure_tensor(z_gt) - st))


def select(cands, cfg, scores=None):
    """Indices of candidates scoring strictly above ``delta_c``, in input order."""
    scores = cands.scores if scores is None else scores
    idx = np.flatnonzero(np.asarray(scores) > cfg.delta_c)
    if len(idx) == 0:
        raise EmptySelection(f"no candidate scores above {cfg.delta_c}")
    return idx


def select_or_best(cands, cfg, scores=None):
    """:func:`select`, falling back to the single best candidate (lowest index on ties)."""
    scores = cands.scores if scores is None else scores
    try:
        return select(cands, cfg, scores)
    except EmptySelection:
        return np.array([int(np.argmax(scores))])
