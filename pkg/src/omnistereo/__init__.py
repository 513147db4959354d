"""Geometry toolkit for nonrectified omnidirectional stereo."""

from .camera_model import FisheyeIntrinsics, PixelPoint, project, solve_theta, unproject
from .calibration import (
    BoardPose,
    ChessboardSpec,
    CornerObservations,
    board_pose_from_rays,
    calibrate_extrinsics,
    fit_rigid_transform,
)
from .fov_zones import VisionMode, compute_zones, preset
from .geometry import Ray, RigidTransform
from .matching_io import MatchPair, MatchSet, load_matches, save_matches, synthesize_matches
from .simbench import BenchConfig, run_noise_grid, simulate_scene, summarize
from .triangulation import (
    MismatchZone,
    TriangulationResult,
    classify_mismatch,
    closest_points,
    runtime_accept,
    triangulate_midpoint,
    triangulate_pseudo,
)

__version__ = "0.1.0"
