"""Pixel pairs -> left-frame rays -> triangulated points."""

from __future__ import annotations

import numpy as np

from .camera_model import FisheyeIntrinsics, unproject
from .errors import OmniStereoError
from .geometry import Ray, RigidTransform
from .triangulation import DEFAULT_TAU, triangulate_midpoint, triangulate_pseudo


def stereo_rays(pixL, pixR, intrL: FisheyeIntrinsics, intrR: FisheyeIntrinsics, rig: RigidTransform):
    """Left and right optical paths for one pixel pair, both in the left frame.

    ``rig`` maps left-camera coordinates to right-camera coordinates, as
    produced by extrinsic calibration.
    """
    dL = unproject(intrL, pixL)
    dR = rig.rotation.T @ unproject(intrR, pixR)
    return Ray(np.zeros(3), dL, "left"), Ray(rig.center, dR / np.linalg.norm(dR), "left")


def triangulate_matches(matches, intrL, intrR, rig, method="pseudo", tau=DEFAULT_TAU):
    """Triangulate every pair of a MatchSet; failed pairs give None."""
    fn = triangulate_pseudo if method == "pseudo" else triangulate_midpoint
    out = []
    for pair in matches:
        try:
            rayL, rayR = stereo_rays(pair.pixelL, pair.pixelR, intrL, intrR, rig)
            out.append(fn(rayL, rayR, tau=tau))
        except OmniStereoError:
            out.append(None)
    return out
