"""Rays, rigid transforms and small rotation helpers."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NonUnitDirection, OmniStereoError

UNIT_TOL = 1e-9
ORTHO_TOL = 1e-9


def as_real(x) -> np.ndarray:
    """Float64 array, or the input unchanged if it is already extended precision."""
    a = np.asarray(x)
    return a if a.dtype == np.longdouble else a.astype(float)


def cross3(a, b) -> np.ndarray:
    """Cross product of two 3-vectors; avoids np.cross overhead in hot loops."""
    return np.array(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]],
        dtype=np.result_type(a, b),
    )


def norm3(v):
    return np.sqrt(v @ v)


def unit(v):
    v = as_real(v)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def skew(w):
    wx, wy, wz = w
    return np.array([[0.0, -wz, wy], [wz, 0.0, -wx], [-wy, wx, 0.0]])


def rotvec_to_matrix(w) -> np.ndarray:
    """Rodrigues' formula; exact to rounding for any angle."""
    w = np.asarray(w, dtype=float)
    angle = float(np.linalg.norm(w))
    K = skew(w)
    if angle < 1e-8:
        # second-order Taylor terms; the next neglected term is O(angle**3)
        return np.eye(3) + K + 0.5 * K @ K
    return (
        np.eye(3)
        + (np.sin(angle) / angle) * K
        + ((1.0 - np.cos(angle)) / angle**2) * (K @ K)
    )


def matrix_to_rotvec(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    cos_a = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_a = 0.5 * np.linalg.norm(v)
    angle = np.arctan2(sin_a, cos_a)
    if angle < 1e-8:
        return 0.5 * v
    if np.pi - angle < 1e-6:
        # near pi the antisymmetric part vanishes; read the axis off R + I
        B = 0.5 * (R + np.eye(3))
        axis = B[np.argmax(np.diag(B))]
        axis = axis / np.linalg.norm(axis)
        return angle * axis
    return angle * v / (2.0 * sin_a)


def rot_x(deg):
    return rotvec_to_matrix([np.radians(deg), 0.0, 0.0])


def rot_y(deg):
    return rotvec_to_matrix([0.0, np.radians(deg), 0.0])


def rot_z(deg):
    return rotvec_to_matrix([0.0, 0.0, np.radians(deg)])


def rotation_angle(R) -> float:
    """Geodesic angle of a rotation matrix, in radians."""
    return float(np.linalg.norm(matrix_to_rotvec(R)))


def axis_aligned_rotations() -> list[np.ndarray]:
    """The 24 proper rotations that map coordinate axes onto coordinate axes."""
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1.0, -1.0), repeat=3):
            M = np.zeros((3, 3))
            for row, (col, s) in enumerate(zip(perm, signs)):
                M[row, col] = s
            if np.linalg.det(M) > 0:
                out.append(M)
    return out


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    dir: np.ndarray
    frame: str = "left"

    def __post_init__(self):
        o = as_real(self.origin).reshape(3)
        d = as_real(self.dir).reshape(3)
        if abs(np.linalg.norm(d) - 1.0) > UNIT_TOL:
            raise NonUnitDirection(f"ray direction has norm {np.linalg.norm(d):.12g}")
        object.__setattr__(self, "origin", o)
        object.__setattr__(self, "dir", d)

    @classmethod
    def towards(cls, origin, target, frame="left") -> Ray:
        origin = as_real(origin)
        return cls(origin, unit(as_real(target) - origin), frame)

    def at(self, s):
        return self.origin + np.multiply.outer(s, self.dir)

    def transformed(self, T: RigidTransform, frame: str | None = None) -> Ray:
        return Ray(T.apply(self.origin), T.rotation @ self.dir, frame or self.frame)


@dataclass(frozen=True)
class RigidTransform:
    """x_dst = rotation @ x_src + translation (translation in mm)."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHO_TOL:
            raise OmniStereoError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise OmniStereoError("rotation has det != +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls()

    @classmethod
    def from_camera_pose(cls, rotation, center) -> RigidTransform:
        """Transform from the reference frame into a camera frame.

        ``rotation`` holds the camera axes expressed in the reference frame as
        columns and ``center`` is the camera centre in reference coordinates.
        """
        Rc = np.asarray(rotation, dtype=float)
        c = np.asarray(center, dtype=float)
        return cls(Rc.T, -Rc.T @ c)

    def apply(self, points):
        p = np.asarray(points, dtype=float)
        return p @ self.rotation.T + self.translation

    def inverse(self) -> RigidTransform:
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other: RigidTransform) -> RigidTransform:
        """self after other."""
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    @property
    def center(self) -> np.ndarray:
        """Origin of the destination frame expressed in the source frame."""
        return -self.rotation.T @ self.translation

    def rotation_error(self, other: RigidTransform) -> float:
        return rotation_angle(self.rotation.T @ other.rotation)

    def translation_error(self, other: RigidTransform) -> float:
        return float(np.linalg.norm(self.translation - other.translation))

    def to_dict(self) -> dict:
        return {
            "rotation": [[float(x) for x in row] for row in self.rotation],
            "translation": [float(x) for x in self.translation],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RigidTransform:
        return cls(np.array(d["rotation"], dtype=float), np.array(d["translation"], dtype=float))


def load_rig(path) -> RigidTransform:
    with open(path) as fh:
        d = json.load(fh)
    try:
        return RigidTransform.from_dict(d)
    except (KeyError, ValueError, TypeError) as exc:
        raise OmniStereoError(f"{path}: malformed rig file ({exc})") from exc


def save_rig(T: RigidTransform, path) -> None:
    Path(path).write_text(json.dumps(T.to_dict(), indent=2) + "\n")
