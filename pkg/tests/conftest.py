import json
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from omnistereo.calibration import ChessboardSpec, board_pose_from_rays, calibrate_extrinsics
from omnistereo.camera_model import FisheyeIntrinsics
from omnistereo.geometry import RigidTransform
from omnistereo.synthetic import StereoRig, board_pose, default_board_poses, observe_board, stereo_views

FIXTURES = Path(__file__).parent / "fixtures"

BOARD = ChessboardSpec(6, 9, 40.0)
SINGLE_POSE = ((400.0, -200.0, 2000.0), (0.0, 25.0, 0.0))
MC_TRIALS = 100
MC_SIGMA = 0.2


def load_fixture(name):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def equidistant():
    return FisheyeIntrinsics.equidistant()


@pytest.fixture
def poly5():
    return FisheyeIntrinsics(k=(280.0, 15.0, -3.0, 0.5, -0.02), cx=640.0, cy=640.0)


@pytest.fixture
def board():
    return BOARD


def rotation_angle_between(Ra, Rb):
    # chordal form: well conditioned at small angles, unlike arccos of the trace
    chord = np.linalg.norm(np.asarray(Ra) - np.asarray(Rb)) / (2.0 * np.sqrt(2.0))
    return float(2.0 * np.arcsin(min(1.0, chord)))


@lru_cache(maxsize=None)
def monte_carlo(scenario: str):
    """Error samples (translation mm, rotation rad, rms mm) for seeds 0..MC_TRIALS-1."""
    intr = FisheyeIntrinsics.equidistant()
    out = {"translation_mm": [], "rotation_rad": [], "rms_mm": []}
    for seed in range(MC_TRIALS):
        rng = np.random.default_rng(seed)
        if scenario == "single_pose":
            B = board_pose(*SINGLE_POSE, BOARD)
            obs = observe_board(intr, RigidTransform.identity(), B, BOARD, "L", "0", MC_SIGMA, rng)
            T = board_pose_from_rays(intr, obs, BOARD).transform
            truth = B
            rms = np.nan
        else:
            rig = StereoRig.yawed(150.0, 0.0, 30.0)
            boards = default_board_poses(BOARD)
            if scenario == "rig_1_view":
                boards = boards[:1]
            views = stereo_views(rig, intr, intr, BOARD, boards, MC_SIGMA, rng)
            cal = calibrate_extrinsics(views, intr, intr, BOARD)
            T, truth, rms = cal.transform, rig.extrinsics, cal.rms_mm
        out["translation_mm"].append(float(np.linalg.norm(T.translation - truth.translation)))
        out["rotation_rad"].append(rotation_angle_between(T.rotation, truth.rotation))
        out["rms_mm"].append(float(rms))
    return {k: np.array(v) for k, v in out.items()}
