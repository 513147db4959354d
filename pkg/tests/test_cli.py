import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from omnistereo.calibration import save_corners
from omnistereo.camera_model import save_intrinsics
from omnistereo.cli import main, thread_count
from omnistereo.geometry import RigidTransform, save_rig
from omnistereo.matching_io import DirectionNoise, MatchSet, MatchSource, save_matches, save_scene, synthesize_matches
from omnistereo.synthetic import StereoRig, default_board_poses, stereo_views, stereo_zone_scene

from conftest import BOARD

TARGET_L = np.array([-2925.0, 2000.0, 5000.0])


@pytest.fixture
def setup(tmp_path, equidistant):
    rig = StereoRig.yawed(150.0, 0.0, 30.0)
    save_intrinsics(equidistant, tmp_path / "left.json")
    save_intrinsics(equidistant, tmp_path / "right.json")
    save_rig(rig.extrinsics, tmp_path / "rig.json")
    return tmp_path, rig


def run(argv):
    return main([str(a) for a in argv])


def test_calibrate_noiseless_fixture(setup, equidistant, capsys):
    d, rig = setup
    views = stereo_views(rig, equidistant, equidistant, BOARD, default_board_poses(BOARD))
    save_corners(d / "corners.csv", [o for v in views for o in v], BOARD)
    code = run(["calibrate", "--left", d / "left.json", "--right", d / "right.json", "--corners", d / "corners.csv",
                "--rows", 6, "--cols", 9, "--square-size", 40, "--out", d / "cal.json"])
    assert code == 0
    T = RigidTransform.from_dict(json.loads((d / "cal.json").read_text()))
    assert T.translation_error(rig.extrinsics) < 1e-4
    assert T.rotation_error(rig.extrinsics) < 1e-7


def test_calibrate_missing_file(setup, capsys):
    d, _ = setup
    code = run(["calibrate", "--left", d / "left.json", "--right", d / "right.json", "--corners", d / "none.csv",
                "--rows", 6, "--cols", 9, "--square-size", 40])
    assert code == 2
    assert "no such file" in capsys.readouterr().err


def test_calibrate_single_camera(setup, equidistant, capsys):
    d, rig = setup
    views = stereo_views(rig, equidistant, equidistant, BOARD, default_board_poses(BOARD))
    save_corners(d / "corners.csv", [v[0] for v in views], BOARD)
    code = run(["calibrate", "--left", d / "left.json", "--right", d / "right.json", "--corners", d / "corners.csv",
                "--rows", 6, "--cols", 9, "--square-size", 40])
    assert code == 2
    assert "both cameras" in capsys.readouterr().err


def test_calibrate_divergence_exit_code(setup, capsys):
    d, _ = setup
    rng = np.random.default_rng(3)
    with open(d / "corners.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["view", "camera", "i", "j", "u", "v"])
        for cam in "LR":
            for i in range(6):
                for j in range(9):
                    u, v = 640 + rng.uniform(-300, 300, 2)
                    w.writerow([0, cam, i, j, u, v])
    code = run(["calibrate", "--left", d / "left.json", "--right", d / "right.json", "--corners", d / "corners.csv",
                "--rows", 6, "--cols", 9, "--square-size", 40])
    assert code == 3


def read_cloud(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_triangulate_noiseless(setup, equidistant):
    d, rig = setup
    scene = stereo_zone_scene(50, rig.extrinsics, equidistant, equidistant, np.random.default_rng(1))
    save_matches(synthesize_matches(scene, rig.extrinsics, equidistant, equidistant), d / "m.csv")
    code = run(["triangulate", "--left", d / "left.json", "--right", d / "right.json", "--rig", d / "rig.json",
                "--matches", d / "m.csv", "--image-size", 1280, 1280, "--out", d / "cloud.csv"])
    assert code == 0
    rows = read_cloud(d / "cloud.csv")
    assert list(rows[0]) == ["uL", "vL", "uR", "vR", "X", "Y", "Z", "skew_mm", "accepted"]
    pts = np.array([[float(r[k]) for k in "XYZ"] for r in rows])
    assert np.max(np.linalg.norm(pts - scene, axis=1)) < 1e-3
    assert all(r["accepted"] == "1" for r in rows)


def test_triangulate_flags_severe_pair(tmp_path, equidistant):
    rig = StereoRig.yawed(150.0).extrinsics
    save_intrinsics(equidistant, tmp_path / "i.json")
    save_rig(rig, tmp_path / "rig.json")
    clean = synthesize_matches([TARGET_L], rig, equidistant, equidistant)
    bad = synthesize_matches([TARGET_L], rig, equidistant, equidistant, DirectionNoise(0.0, 0.02))
    save_matches(MatchSet(clean.pairs + bad.pairs, MatchSource.EXTERNAL), tmp_path / "m.csv")
    code = run(["triangulate", "--left", tmp_path / "i.json", "--right", tmp_path / "i.json",
                "--rig", tmp_path / "rig.json", "--matches", tmp_path / "m.csv", "--out", tmp_path / "c.csv"])
    assert code == 0
    rows = read_cloud(tmp_path / "c.csv")
    assert [r["accepted"] for r in rows] == ["1", "0"]
    assert float(rows[1]["skew_mm"]) > 50.0


def test_triangulate_empty_matches(setup, capsys):
    d, _ = setup
    (d / "m.csv").write_text("")
    code = run(["triangulate", "--left", d / "left.json", "--right", d / "right.json", "--rig", d / "rig.json",
                "--matches", d / "m.csv"])
    assert code == 2
    assert "empty" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv, expect",
    [
        (["zones", "--preset", "gecko"], {"S": 76, "M": 240, "B": 44, "total_fov": 316}),
        (["zones", "--preset", "stick_bug"], {"S": 150, "M": 92, "B": 118, "total_fov": 242}),
        (["zones", "--H", 196, "--O", 136], {"S": 136, "M": 120, "B": 104, "total_fov": 256}),
    ],
)
def test_zones(argv, expect, capsys):
    assert run(argv) == 0
    out = json.loads(capsys.readouterr().out)
    assert {k: out[k] for k in expect} == expect


@pytest.mark.parametrize(
    "argv",
    [
        ["zones", "--H", 196, "--O", 0],
        ["zones"],
        ["zones", "--preset", "owl"],
        ["zones", "--O", "abc"],
        ["bench", "--step", 0],
        ["frobnicate"],
    ],
)
def test_invalid_flags_exit_2(argv, capsys):
    try:
        code = run(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2


def test_bench_defaults(tmp_path):
    assert run(["bench", "--heatmaps", "--out-dir", tmp_path]) == 0
    lines = (tmp_path / "grid.csv").read_text().splitlines()
    assert len(lines) - 1 == 6561
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_cells"] == 6561 and summary["all_monotone_pseudo"] is True
    for m in ("pseudo", "midpoint"):
        assert (tmp_path / f"heatmap_{m}.pgm").read_text().split()[:3] == ["P2", "81", "81"]


def test_bench_byte_identical_across_threads(tmp_path, monkeypatch):
    outs = []
    for threads in ("1", "4"):
        monkeypatch.setenv("OMNISTEREO_THREADS", threads)
        d = tmp_path / threads
        assert run(["bench", "--step", 0.002, "--heatmaps", "--out-dir", d]) == 0
        outs.append({f.name: f.read_bytes() for f in sorted(d.iterdir())})
    assert outs[0] == outs[1]


def test_thread_count(monkeypatch):
    monkeypatch.setenv("OMNISTEREO_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("OMNISTEREO_THREADS", "0")
    assert thread_count() >= 1


def test_simulate_seeded(setup, equidistant):
    d, rig = setup
    scene = stereo_zone_scene(30, rig.extrinsics, equidistant, equidistant, np.random.default_rng(2))
    save_scene(scene, d / "scene.csv")
    base = ["simulate", "--scene", d / "scene.csv", "--rig", d / "rig.json", "--left", d / "left.json",
            "--right", d / "right.json", "--pixel-sigma", 0.5]
    assert run(base + ["--out", d / "a.json"]) == 0
    assert run(base + ["--out", d / "b.json"]) == 0
    assert run(base + ["--seed", 7, "--out", d / "c.json"]) == 0
    assert (d / "a.json").read_bytes() == (d / "b.json").read_bytes()
    assert (d / "a.json").read_bytes() != (d / "c.json").read_bytes()
    rep = json.loads((d / "a.json").read_text())
    assert rep["n_scene"] == 30


def test_simulate_rejects_mixed_noise(setup):
    d, _ = setup
    save_scene([[0.0, 0.0, 1000.0]], d / "scene.csv")
    code = run(["simulate", "--scene", d / "scene.csv", "--rig", d / "rig.json", "--left", d / "left.json",
                "--right", d / "right.json", "--pixel-sigma", 0.5, "--noise-x", 0.01])
    assert code == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "omnistereo.cli", "zones", "--preset", "human"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["M"] == 0
