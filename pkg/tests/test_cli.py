import csv
import io
import json
import shutil

import pytest

from vpcalib.cli import EXIT_DEGRADED, EXIT_ERROR, EXIT_OK, EXIT_USAGE, main, parse_grid, UsageError


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("ds")
    assert main(["synth", "--out", str(root / "d"), "--n", "6", "--seed", "3"]) == EXIT_OK
    return root / "d"


def read(path):
    return path.read_bytes()


def test_synth_is_reproducible(tmp_path, data):
    main(["synth", "--out", str(tmp_path / "d2"), "--n", "6", "--seed", "3"])
    for f in sorted(data.rglob("*")):
        if f.is_file():
            assert read(f) == read(tmp_path / "d2" / f.relative_to(data))


def test_calibrate_segments_ok_and_reproducible(tmp_path, data):
    scene = data / "scene_00000"
    args = ["calibrate", "--segments", str(scene / "segments.txt"), "--gt", str(scene / "gt.json"), "--seed", "1"]
    assert main(args + ["--out", str(tmp_path / "a.json")]) == EXIT_OK
    assert main(args + ["--out", str(tmp_path / "b.json")]) == EXIT_OK
    assert read(tmp_path / "a.json") == read(tmp_path / "b.json")
    out = json.loads((tmp_path / "a.json").read_text())
    assert out["degraded"] is False and out["config"]["seed"] == 1 and out["scorer"] == "fallback"


def test_calibrate_oracle_and_exports(tmp_path, data):
    scene = data / "scene_00001"
    rc = main([
        "calibrate", "--segments", str(scene / "segments.txt"), "--gt", str(scene / "gt.json"), "--mode", "oracle",
        "--out", str(tmp_path / "r.json"), "--dump-maps", str(tmp_path / "maps"),
        "--export-tensor", str(tmp_path / "t.bin"),
    ])
    assert rc == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "maps").iterdir()) == ["A_x.pgm", "A_y.pgm", "A_z.pgm", "L.pgm"]
    assert (tmp_path / "t.bin").stat().st_size > 224 * 224 * 17 * 4


def test_calibrate_image(tmp_path, data):
    scene = data / "scene_00002"
    rc = main(["calibrate", "--image", str(scene / "image.pgm"), "--out", str(tmp_path / "r.json")])
    assert rc in (EXIT_OK, EXIT_DEGRADED)
    assert "f_px" in json.loads((tmp_path / "r.json").read_text())


def test_exit_codes(tmp_path, data):
    assert main(["calibrate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["calibrate", "--segments", "x", "--image", "y"]) == EXIT_USAGE
    assert main(["calibrate", "--segments", str(tmp_path / "missing.txt")]) == EXIT_ERROR
    seg = data / "scene_00000" / "segments.txt"
    assert main(["calibrate", "--segments", str(seg), "--mode", "oracle"]) == EXIT_USAGE
    assert main(["calibrate", "--segments", str(seg), "--k", "0"]) == EXIT_USAGE
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    assert main(["calibrate", "--segments", str(empty), "--out", str(tmp_path / "o.json")]) == EXIT_DEGRADED
    assert json.loads((tmp_path / "o.json").read_text())["degraded"] is True


def test_config_precedence(tmp_path, data):
    seg = str(data / "scene_00000" / "segments.txt")
    conf = tmp_path / "c.txt"
    conf.write_text("# comment\nk = 4\nsigma=0.2\n")
    main(["calibrate", "--segments", seg, "--config", str(conf), "--k", "2", "--out", str(tmp_path / "o.json")])
    cfg = json.loads((tmp_path / "o.json").read_text())["config"]
    assert cfg["k"] == 2 and cfg["sigma"] == 0.2 and cfg["delta_c"] == 0.5
    conf.write_text(json.dumps({"k": 5}))
    main(["calibrate", "--segments", seg, "--config", str(conf), "--out", str(tmp_path / "o.json")])
    assert json.loads((tmp_path / "o.json").read_text())["config"]["k"] == 5
    conf.write_text("bogus=1\n")
    assert main(["calibrate", "--segments", seg, "--config", str(conf)]) == EXIT_USAGE


def test_aliases(tmp_path, data):
    seg = str(data / "scene_00000" / "segments.txt")
    main(["calibrate", "--segments", seg, "--delta-z-deg", "3.5", "--n-zenith", "64", "--out", str(tmp_path / "o.json")])
    cfg = json.loads((tmp_path / "o.json").read_text())["config"]
    assert cfg["delta_z"] == 3.5 and cfg["n_candidates"] == 64


def test_eval_outputs_and_determinism(tmp_path, data):
    assert main(["eval", "--data", str(data), "--out", str(tmp_path / "e1")]) == EXIT_OK
    assert main(["eval", "--data", str(data), "--out", str(tmp_path / "e2")]) == EXIT_OK
    for name in ("records.csv", "summary.csv", "curve.csv", "curve.svg", "eval.json"):
        assert read(tmp_path / "e1" / name) == read(tmp_path / "e2" / name)
    meta = json.loads((tmp_path / "e1" / "eval.json").read_text())
    assert meta["n"] == 6 and meta["n_skipped"] == 0 and meta["fov"] == "vertical"


def test_eval_empty_and_missing_gt(tmp_path, data):
    (tmp_path / "empty").mkdir()
    assert main(["eval", "--data", str(tmp_path / "empty"), "--out", str(tmp_path / "o")]) == EXIT_ERROR
    part = tmp_path / "part"
    shutil.copytree(data, part)
    (part / "scene_00002" / "gt.json").unlink()
    assert main(["eval", "--data", str(part), "--out", str(tmp_path / "o")]) == EXIT_OK
    meta = json.loads((tmp_path / "o" / "eval.json").read_text())
    assert meta["n"] == 5 and meta["n_skipped"] == 1


def test_parse_grid_order():
    g = parse_grid(["k=1,4", "delta_c=0.3,0.5"])
    assert g == [{"k": 1, "delta_c": 0.3}, {"k": 1, "delta_c": 0.5}, {"k": 4, "delta_c": 0.3}, {"k": 4, "delta_c": 0.5}]
    with pytest.raises(UsageError):
        parse_grid(["nope=1"])
    with pytest.raises(UsageError):
        parse_grid(["k"])


def sweep_rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_k_rows_and_size_one_grid(tmp_path, data):
    assert main(["sweep", "--data", str(data), "--grid", "k=1,4,8,16", "--out", str(tmp_path / "s.csv")]) == EXIT_OK
    rows = sweep_rows((tmp_path / "s.csv").read_text())
    assert [r["setting"] for r in rows] == ["k=1", "k=4", "k=8", "k=16"]

    main(["sweep", "--data", str(data), "--grid", "k=8", "--out", str(tmp_path / "one.csv")])
    main(["eval", "--data", str(data), "--out", str(tmp_path / "e")])
    one = sweep_rows((tmp_path / "one.csv").read_text())[0]
    summary = {r["metric"]: r for r in csv.DictReader(io.StringIO((tmp_path / "e" / "summary.csv").read_text()))}
    for m in ("angle", "pitch", "roll", "fov", "horizon"):
        assert one[f"{m}_mean"] == summary[m]["mean"]
        assert one[f"{m}_median"] == summary[m]["median"]
    assert one["auc"] == summary["auc"]["mean"]
    assert rows[2] == {**one, "setting": "k=8"}


def test_sweep_detector_params_need_images(data):
    assert main(["sweep", "--data", str(data), "--grid", "density_min=0.6,0.7"]) == EXIT_USAGE


def test_detect_reproducible(tmp_path, data):
    img = str(data / "scene_00000" / "image.pgm")
    assert main(["detect", "--image", img, "--out", str(tmp_path / "a.txt")]) == EXIT_OK
    main(["detect", "--image", img, "--out", str(tmp_path / "b.txt")])
    assert read(tmp_path / "a.txt") == read(tmp_path / "b.txt")
    assert len((tmp_path / "a.txt").read_text().splitlines()) > 0


def test_train_zs_reproducible(tmp_path):
    base = ["train-zs", "--n-train", "4", "--n-test", "2", "--epochs", "2", "--seed", "5"]
    assert main(base + ["--out", str(tmp_path / "p1.json"), "--report", str(tmp_path / "r1.json")]) == EXIT_OK
    main(base + ["--out", str(tmp_path / "p2.json"), "--lambda-loc", "1.0", "--report", str(tmp_path / "r2.json")])
    assert read(tmp_path / "p1.json") == read(tmp_path / "p2.json")
    assert read(tmp_path / "r1.json") == read(tmp_path / "r2.json")
    main(["synth", "--out", str(tmp_path / "d"), "--n", "1", "--seed", "2", "--no-image"])
    out = tmp_path / "o.json"
    sc = tmp_path / "d" / "scene_00000"
    main(["calibrate", "--segments", str(sc / "segments.txt"), "--zsnet", str(tmp_path / "p1.json"), "--out", str(out)])
    assert json.loads(out.read_text())["scorer"] == "zsnet"
