import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vpcalib.errors import AllScoresZero, EmptySelection, InsufficientLines, SamplingExhausted
from vpcalib.homgeom import cossim, lines_from_segments
from vpcalib.synth import SynthConfig, generate_scene, scene_rng
from vpcalib.zenith import (
    UNDEFINED, ZenithCandidates, ZenithConfig, aggregate, filter_vertical, label_candidates, localization_loss,
    sample_candidates, select, select_or_best,
)
from vpcalib.zsnet_lite import pseudo_lines

VERTS = [[1.0, 0.0, -1.0], [1.0, 0.0, 1.0]]


def cands_of(points, scores=None):
    v = np.asarray(points, dtype=float)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    return ZenithCandidates(v=v, source=np.zeros((len(v), 2), int), scores=scores)


def vertical_lines(seed, i):
    segs, ann, _ = generate_scene(SynthConfig(), scene_rng(seed, i))
    lines = pseudo_lines(segs, ann.pseudo)
    mask = np.array([lab == "y" for lab in ann.labels])
    return lines[mask], ann


def test_filter_vertical_examples():
    cfg = ZenithConfig()
    lines, idx = filter_vertical([[1, 0, -5], [0, 1, -5]] + VERTS, cfg)
    assert list(idx) == [0, 2, 3]
    r = math.radians(67.5)
    _, idx = filter_vertical([[math.sin(r), math.cos(r), 0.0]] + VERTS, cfg)
    assert 0 not in idx


def test_filter_vertical_insufficient():
    with pytest.raises(InsufficientLines):
        filter_vertical([[1, 0, 0], [0, 1, 0]], ZenithConfig())


def test_filter_vertical_subsamples():
    cfg = ZenithConfig(n_lines=5)
    lines = [[1.0, 0.01 * i, 0.0] for i in range(20)]
    a, ia = filter_vertical(lines, cfg, np.random.default_rng(0))
    b, ib = filter_vertical(lines, cfg, np.random.default_rng(0))
    assert len(a) == 5 and list(ia) == list(ib) and list(ia) == sorted(ia)


seg = st.tuples(*[st.floats(0, 224)] * 4).filter(lambda s: math.hypot(s[2] - s[0], s[3] - s[1]) > 1)


@settings(max_examples=50)
@given(st.lists(seg, min_size=2, max_size=20), st.floats(0.1, 50))
def test_filter_vertical_invariances(segs, s):
    segs = np.array(segs)
    a = lines_from_segments(segs[:, :2], segs[:, 2:])
    b = lines_from_segments(segs[:, 2:], segs[:, :2])
    cfg = ZenithConfig()
    try:
        _, ia = filter_vertical(a, cfg)
    except InsufficientLines:
        with pytest.raises(InsufficientLines):
            filter_vertical(b * s, cfg)
        return
    _, ib = filter_vertical(b * s, cfg)
    assert list(ia) == list(ib)


def test_parallel_verticals_meet_at_infinity():
    c = sample_candidates(VERTS, ZenithConfig(n_candidates=16))
    assert len(c) == 16
    assert np.all(cossim(c.v, np.array([[0.0, 1.0, 0.0]])) > 1 - 1e-12)


def test_noise_free_candidates_hit_gt():
    lines, ann = vertical_lines(1, 0)
    c = sample_candidates(lines, ZenithConfig())
    assert np.all(cossim(c.v, ann.z_gt[None, :]) > 1 - 1e-9)
    label_candidates(c, ann.z_gt, ZenithConfig())
    assert np.all(c.labels == 1)


def test_sampling_deterministic_and_errors():
    lines, _ = vertical_lines(1, 1)
    a = sample_candidates(lines, ZenithConfig(seed=4))
    b = sample_candidates(lines, ZenithConfig(seed=4))
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.source, b.source)
    with pytest.raises(InsufficientLines):
        sample_candidates(lines[:1], ZenithConfig())
    with pytest.raises(SamplingExhausted):
        sample_candidates([[1.0, 0, 0], [2.0, 0, 0]], ZenithConfig(n_candidates=4))


def test_labels():
    cfg = ZenithConfig()
    z = np.array([0.0, 1.0, 0.0])
    t = math.radians(3.5)
    c = cands_of([z, [1.0, 0, 0], [math.sin(t), math.cos(t), 0.0]])
    label_candidates(c, z, cfg)
    assert list(c.labels) == [1, 0, UNDEFINED]


def test_aggregate_single_and_cluster():
    _, z = aggregate(cands_of([[0.3, 2.0, 0.1]], np.array([0.2])))
    assert cossim(z, [0.3, 2.0, 0.1]) > 1 - 1e-12
    g = np.array([0.0, 1.0, 0.0])
    d = math.radians(1.0)
    pts = [[math.sin(d), math.cos(d), 0], [-math.sin(d), math.cos(d), 0], [0, math.cos(d), math.sin(d)],
           [0, math.cos(d), -math.sin(d)]]
    _, z = aggregate(cands_of(pts, np.ones(4)))
    assert np.linalg.norm(np.cross(z, g)) < 1e-6


def test_localization_loss_zero_at_gt():
    g = np.array([0.1, 1.0, 0.3])
    assert localization_loss(cands_of([g, -2 * g]), g, np.array([0.5, 0.9])) == pytest.approx(0.0, abs=1e-12)


def test_aggregate_all_zero():
    with pytest.raises(AllScoresZero):
        aggregate(cands_of([[0, 1, 0], [1, 1, 0]], np.zeros(2)))


@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3), st.floats(0.01, 100))
def test_aggregate_score_scale_invariant(scores, s):
    c = cands_of([[0.1, 1, 0], [0, 1, 0.2], [-0.1, 1, 0.1]])
    _, a = aggregate(c, np.array(scores))
    _, b = aggregate(c, s * np.array(scores))
    assert cossim(a, b) > 1 - 1e-9


def test_select_examples():
    cfg = ZenithConfig()
    c = cands_of([[0, 1, 0]] * 3)
    assert list(select(c, cfg, np.array([0.9, 0.4, 0.6]))) == [0, 2]
    with pytest.raises(EmptySelection):
        select(c, cfg, np.full(3, 0.5))
    assert cfg.delta_c == 0.5
    assert list(select_or_best(c, cfg, np.array([0.1, 0.3, 0.3]))) == [1]


def test_config_validation():
    with pytest.raises(ValueError):
        ZenithConfig(delta_p=5, delta_n=2)
    with pytest.raises(ValueError):
        ZenithConfig(delta_c=1.0)
