"""Synthetic rigs, board placements and scenes for tests and experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import ChessboardSpec, CornerObservations
from .camera_model import FisheyeIntrinsics, polar_angle, project
from .geometry import RigidTransform, rot_x, rot_y, rot_z, unit


def camera_transform(yaw_deg: float, center, pitch_deg: float = 0.0) -> RigidTransform:
    """World -> camera transform for a camera yawed about the vertical (y) axis."""
    Rc = rot_y(yaw_deg) @ rot_x(pitch_deg)
    return RigidTransform.from_camera_pose(Rc, center)


@dataclass(frozen=True)
class StereoRig:
    left: RigidTransform  # world -> left camera
    right: RigidTransform  # world -> right camera

    @classmethod
    def yawed(cls, baseline=150.0, yaw_left=0.0, yaw_right=0.0) -> StereoRig:
        return cls(
            camera_transform(yaw_left, [0.0, 0.0, 0.0]),
            camera_transform(yaw_right, [baseline, 0.0, 0.0]),
        )

    @property
    def extrinsics(self) -> RigidTransform:
        """Left camera frame -> right camera frame."""
        return self.right.compose(self.left.inverse())


def board_pose(center, tilt_deg=(0.0, 0.0, 0.0), spec: ChessboardSpec | None = None) -> RigidTransform:
    """Board -> world transform placing the board centroid at ``center``.

    ``tilt_deg`` rotates the board about world x, y, then z.
    """
    R = rot_z(tilt_deg[2]) @ rot_y(tilt_deg[1]) @ rot_x(tilt_deg[0])
    c = np.zeros(3) if spec is None else spec.model_points().mean(axis=0)
    return RigidTransform(R, np.asarray(center, dtype=float) - R @ c)


def default_board_poses(spec: ChessboardSpec) -> list[RigidTransform]:
    """Three placements in front of a rig whose cameras face roughly +z."""
    return [
        board_pose([-250.0, -100.0, 1500.0], (10.0, 20.0, 0.0), spec),
        board_pose([300.0, 150.0, 2000.0], (-15.0, -10.0, 5.0), spec),
        board_pose([50.0, -250.0, 1200.0], (25.0, 5.0, -10.0), spec),
    ]


def observe_board(
    intr: FisheyeIntrinsics,
    world_to_cam: RigidTransform,
    board_to_world: RigidTransform,
    spec: ChessboardSpec,
    camera: str,
    view: str,
    sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> CornerObservations:
    P = world_to_cam.apply(board_to_world.apply(spec.model_points()))
    d = unit(P)
    if np.any(polar_angle(d) > intr.theta_max):
        raise ValueError(f"board in view {view} leaves the field of camera {camera}")
    pix = project(intr, d)
    if sigma:
        pix = pix + rng.normal(0.0, sigma, pix.shape)
    return CornerObservations(camera, view, pix)


def stereo_views(rig: StereoRig, intrL, intrR, spec, boards, sigma=0.0, rng=None):
    views = []
    for k, B in enumerate(boards):
        views.append(
            (
                observe_board(intrL, rig.left, B, spec, "L", str(k), sigma, rng),
                observe_board(intrR, rig.right, B, spec, "R", str(k), sigma, rng),
            )
        )
    return views


def stereo_zone_scene(
    n: int,
    rig_extrinsics: RigidTransform,
    intrL: FisheyeIntrinsics,
    intrR: FisheyeIntrinsics,
    rng: np.random.Generator,
    depth=(800.0, 6000.0),
    margin_deg: float = 10.0,
) -> np.ndarray:
    """Random points (left frame) visible to both cameras, by rejection sampling."""
    lim_L = intrL.theta_max - np.radians(margin_deg)
    lim_R = intrR.theta_max - np.radians(margin_deg)
    out = []
    while len(out) < n:
        d = unit(rng.normal(size=3))
        p = d * rng.uniform(*depth)
        q = rig_extrinsics.apply(p)
        if polar_angle(d) <= lim_L and polar_angle(unit(q)) <= lim_R:
            out.append(p)
    return np.array(out)
