import math
import warnings

import numpy as np
import pytest

from vpcalib.camera import CameraParams, PseudoIntrinsics, project, to_pseudo
from vpcalib.errors import DegenerateInput, InsufficientHypotheses, NoHorizontals
from vpcalib.framegen import (
    FrameConfig, classify_vertical, group_horizontals, horizon_side, pseudo_horizon, sample_frames,
)
from vpcalib.homgeom import cossim
from vpcalib.lsd_lite import segments_to_array
from vpcalib.synth import SynthConfig, annotation_for_camera, generate_scene, sample_camera, scene_rng
from vpcalib.zsnet_lite import pseudo_lines

AXIS_ROW = {"x": 0, "y": 1, "z": 2}


def scene(seed, i, cfg=SynthConfig()):
    segs, ann, _ = generate_scene(cfg, scene_rng(seed, i))
    arr = segments_to_array(segs)
    return arr, pseudo_lines(arr, ann.pseudo), ann


def frames(seed, i, cfg=SynthConfig(), fcfg=FrameConfig()):
    arr, lines, ann = scene(seed, i, cfg)
    groups = group_horizontals(arr, lines, ann.z_gt, ann.pseudo, fcfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        hyps = sample_frames(lines, groups, ann.z_gt[None, :], ann.pseudo, fcfg)
    return hyps, ann


def facade():
    cam = CameraParams(150.0, math.radians(5), math.radians(20), 0.0, 224, 224)
    corners = [(-2, -1.5), (2, -1.5), (2, 1.5), (-2, 1.5)]
    pix = []
    for x, y in corners:
        p = project(cam, cam.R.T @ np.array([0, 0, 8.0]) + np.array([x, y, 0.0]))
        pix.append(p[:2] / p[2])
    edges = np.array([[*pix[i], *pix[(i + 1) % 4]] for i in range(4)])
    return cam, edges, np.array(pix)


def test_pseudo_horizon_examples():
    np.testing.assert_array_equal(pseudo_horizon([0, 1, 0]), [0, 1, 0])
    z = np.array([0.1, 0.9, 0.3])
    assert cossim(pseudo_horizon(-3 * z), pseudo_horizon(z)) == pytest.approx(1.0)
    with pytest.raises(DegenerateInput):
        pseudo_horizon([0, 0, 0])
    with pytest.raises(DegenerateInput):
        pseudo_horizon([0, 0, 1])


def _vp_line_angles(cfg, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        ann = annotation_for_camera(sample_camera(cfg, rng))
        h = pseudo_horizon(ann.z_gt)
        for row in (0, 2):
            v = ann.vps_gt[row]
            out.append(math.degrees(math.asin(abs(h @ v) / (np.linalg.norm(h) * np.linalg.norm(v)))))
    return np.array(out)


def test_pseudo_horizon_near_gt_vps_pitch40():
    angles = _vp_line_angles(SynthConfig(pitch_range=(-40, 40)), 200, 0)
    assert angles.max() < 2.0


def test_pseudo_horizon_exact_at_pseudo_focal():
    angles = _vp_line_angles(SynthConfig(fov_range=(90, 90), pitch_range=(-40, 40)), 200, 1)
    assert angles.max() < 1e-9


def test_pseudo_horizon_parallel_to_true_horizon():
    rng = np.random.default_rng(2)
    for _ in range(50):
        ann = annotation_for_camera(sample_camera(SynthConfig(), rng))
        h = pseudo_horizon(ann.z_gt)
        true = ann.pseudo.K.T @ ann.horizon_gt
        assert abs(h[0] * true[1] - h[1] * true[0]) <= 1e-9 * np.linalg.norm(h[:2]) * np.linalg.norm(true[:2])


def test_facade_grouping():
    cam, edges, corners = facade()
    pi = PseudoIntrinsics(224, 224)
    ann = annotation_for_camera(cam)
    lines = pseudo_lines(edges, pi)
    g = group_horizontals(edges, lines, ann.z_gt, pi, FrameConfig())
    assert g.vertical.sum() == 2
    assert len(g.left) + len(g.right) == 2
    assert len(g.junctions) >= 4
    for c in corners:
        assert np.min(np.hypot(*(g.junctions - c).T)) < 1e-6


def test_verticals_only():
    arr, lines, ann = scene(1, 0)
    keep = classify_vertical(lines, ann.z_gt, 2.0)
    with pytest.raises(NoHorizontals):
        group_horizontals(arr[keep], lines[keep], ann.z_gt, ann.pseudo, FrameConfig())


def test_two_point_perspective_groups():
    cfg = SynthConfig(yaw_range=(45, 45), pitch_range=(0, 0), roll_range=(0, 0), n_boxes=1)
    for i in range(5):
        arr, lines, ann = scene(3, i, cfg)
        g = group_horizontals(arr, lines, ann.z_gt, ann.pseudo, FrameConfig())
        assert len(g.left) and len(g.right)
        assert not set(g.left) & set(g.right)
        t = horizon_side(lines, ann.z_gt)
        assert np.all(t[g.left] < 0) and np.all(t[g.right] > 0)


def test_grouping_order_invariant():
    arr, lines, ann = scene(1, 2)
    fc = FrameConfig()
    a = group_horizontals(arr, lines, ann.z_gt, ann.pseudo, fc)
    perm = np.random.default_rng(0).permutation(len(arr))
    b = group_horizontals(arr[perm], lines[perm], ann.z_gt, ann.pseudo, fc)
    assert set(perm[b.left]) == set(a.left) and set(perm[b.right]) == set(a.right)


def test_noise_free_every_hypothesis_f_exact():
    for i in range(10):
        hyps, ann = frames(12, i)
        assert all(abs(h.f - ann.cam.f) / ann.cam.f < 1e-6 for h in hyps)


def test_same_family_pairs_f_exact():
    shares = []
    for i in range(10):
        arr, lines, ann = scene(12, i)
        groups = group_horizontals(arr, lines, ann.z_gt, ann.pseudo, FrameConfig())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            hyps = sample_frames(lines, groups, ann.z_gt[None, :], ann.pseudo, FrameConfig())
        labels = segment_labels(arr, ann)
        pure = [h for h in hyps if labels[h.pair[0]] == labels[h.pair[1]]]
        shares.append(len(pure) / len(hyps))
        for h in pure:
            assert abs(h.f - ann.cam.f) / ann.cam.f < 1e-6
    assert np.mean(shares) > 0.5


def segment_labels(arr, ann):
    """Axis label of each segment, matched back to the annotation's edge list."""
    edges = np.array([e[:4] for e in ann.edges])
    idx = [int(np.argmin(np.abs(edges - r).sum(axis=1))) for r in arr]
    return [ann.edges[i][4] for i in idx]


def test_parallel_pairs_insufficient():
    pi = PseudoIntrinsics(224, 224)
    lines = np.array([[0.0, 1.0, c] for c in (-0.5, -0.2, 0.1, 0.4)])
    z = np.array([[0.1, 1.0, 0.5]])
    with pytest.raises(InsufficientHypotheses):
        sample_frames(lines, (np.arange(4), np.array([], int)), z, pi, FrameConfig())


def test_sample_frames_deterministic_and_valid():
    a, ann = frames(1, 3)
    b, _ = frames(1, 3)
    assert len(a) == FrameConfig().n_frames
    assert [h.pair for h in a] == [h.pair for h in b]
    assert [h.f for h in a] == [h.f for h in b]
    counts = np.bincount([h.group for h in a])
    if len(counts) == 2:
        assert abs(counts[0] - counts[1]) <= 1
    pi = ann.pseudo
    for h in a:
        assert h.f > 0
        np.testing.assert_allclose(h.R @ h.R.T, np.eye(3), atol=1e-9)
        assert np.linalg.det(h.R) == pytest.approx(1.0, abs=1e-9)
        implied = np.array([h.R[0, 1] * h.f / pi.f, h.R[1, 1] * h.f / pi.f, h.R[2, 1]])
        assert cossim(h.zenith, implied) > 1 - 1e-9


def test_atlanta_hypotheses_agree():
    cfg = SynthConfig(atlanta_yaw=30.0)
    for i in range(5):
        hyps, ann = frames(13, i, cfg)
        for h in hyps:
            assert cossim(h.zenith, ann.z_gt) > math.cos(math.radians(1.0))
            assert abs(h.f - ann.cam.f) / ann.cam.f < 0.05


def test_frame_config_validation():
    with pytest.raises(ValueError):
        FrameConfig(n_frames=0)
    with pytest.raises(ValueError):
        FrameConfig(junction_radius=0)
