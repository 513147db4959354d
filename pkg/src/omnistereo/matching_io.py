"""Homologous point pairs: CSV interchange and synthetic generation.

Matches from an external matcher arrive as ``uL,vL,uR,vR[,confidence]``
rows. Synthetic matches are made by projecting known scene points (left
camera frame, mm) into both cameras, optionally with pixel noise or with a
fixed offset on the right ray direction.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .camera_model import FisheyeIntrinsics, PixelPoint, polar_angle, project, unproject
from .errors import EmptyScene, OutOfBoundsPixel, ParseError, RadiusOutOfRange
from .geometry import RigidTransform, as_real, unit

MATCH_HEADER = ["uL", "vL", "uR", "vR"]
SCENE_HEADER = ["x", "y", "z"]


class MatchSource(str, enum.Enum):
    EXTERNAL = "External"
    SYNTHETIC = "Synthetic"


@dataclass(frozen=True)
class MatchPair:
    pixelL: PixelPoint
    pixelR: PixelPoint
    confidence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "pixelL", PixelPoint(float(self.pixelL[0]), float(self.pixelL[1])))
        object.__setattr__(self, "pixelR", PixelPoint(float(self.pixelR[0]), float(self.pixelR[1])))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass
class MatchSet:
    pairs: list[MatchPair]
    source: MatchSource = MatchSource.EXTERNAL
    scene_id: str = ""
    skipped: int = field(default=0, compare=False)
    # synthetic sets only: ground-truth point for each pair, left frame
    truth: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def pixels(self):
        """(N, 2) left and right pixel arrays."""
        if not self.pairs:
            return np.zeros((0, 2)), np.zeros((0, 2))
        L = np.array([p.pixelL for p in self.pairs], dtype=float)
        R = np.array([p.pixelR for p in self.pairs], dtype=float)
        return L, R


@dataclass(frozen=True)
class PixelNoise:
    sigma: float  # px, applied independently to both images


@dataclass(frozen=True)
class DirectionNoise:
    x: float
    y: float


def _check_pixel(u, v, lineno, image_size, intr, side):
    if image_size is not None:
        w, h = image_size
        if not (0.0 <= u < w and 0.0 <= v < h):
            raise OutOfBoundsPixel(f"line {lineno}: {side} pixel ({u}, {v}) outside {w}x{h} image")
    if intr is not None:
        r = math.hypot((u - intr.cx) / intr.mu, (v - intr.cy) / intr.mv)
        if r > intr.r_max:
            raise OutOfBoundsPixel(
                f"line {lineno}: {side} pixel ({u}, {v}) beyond the lens field (r={r:.3f} px)"
            )


def load_matches(
    path,
    image_size: tuple[float, float] | None = None,
    intrL: FisheyeIntrinsics | None = None,
    intrR: FisheyeIntrinsics | None = None,
    scene_id: str = "",
) -> MatchSet:
    """Parse a match CSV.

    ``image_size`` is (width, height) in pixels. When intrinsics are supplied,
    pixels beyond the lens' maximum radius are also rejected.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty match file", line=1)
    header = [h.strip() for h in rows[0]]
    if header == MATCH_HEADER:
        has_conf = False
    elif header == MATCH_HEADER + ["confidence"]:
        has_conf = True
    else:
        raise ParseError(f"expected header {','.join(MATCH_HEADER)}[,confidence]", line=1)
    ncol = len(header)

    pairs = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != ncol:
            raise ParseError(f"expected {ncol} fields, got {len(row)}", line=lineno)
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if not all(math.isfinite(v) for v in vals):
            raise ParseError("non-finite value", line=lineno)
        conf = vals[4] if has_conf else 1.0
        if not 0.0 <= conf <= 1.0:
            raise ParseError(f"confidence {conf} outside [0, 1]", line=lineno)
        _check_pixel(vals[0], vals[1], lineno, image_size, intrL, "left")
        _check_pixel(vals[2], vals[3], lineno, image_size, intrR, "right")
        pairs.append(MatchPair(PixelPoint(vals[0], vals[1]), PixelPoint(vals[2], vals[3]), conf))
    if not pairs:
        raise ParseError("match file has no data rows", line=2)
    return MatchSet(pairs, MatchSource.EXTERNAL, scene_id)


def save_matches(ms: MatchSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MATCH_HEADER + ["confidence"])
        for p in ms.pairs:
            w.writerow([repr(p.pixelL.u), repr(p.pixelL.v), repr(p.pixelR.u), repr(p.pixelR.v), repr(p.confidence)])


def load_scene(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty scene file", line=1)
    if [h.strip() for h in rows[0]] != SCENE_HEADER:
        raise ParseError("expected header x,y,z", line=1)
    pts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3:
            raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
        try:
            pts.append([float(c) for c in row])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
    return np.array(pts, dtype=float).reshape(-1, 3)


def save_scene(points, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCENE_HEADER)
        for p in np.asarray(points, dtype=float).reshape(-1, 3):
            w.writerow([repr(float(c)) for c in p])


def perturb_direction(d, noise_x: float, noise_y: float) -> np.ndarray:
    """Add (x, y) to the first two components of a unit vector, then renormalise."""
    d = as_real(d).copy()
    d[..., 0] += noise_x
    d[..., 1] += noise_y
    return unit(d)


def synthesize_matches(
    scene,
    rig: RigidTransform,
    intrL: FisheyeIntrinsics,
    intrR: FisheyeIntrinsics,
    noise: PixelNoise | DirectionNoise | None = None,
    rng: np.random.Generator | None = None,
    scene_id: str = "",
) -> MatchSet:
    """Project scene points (left frame, mm) into both cameras.

    ``rig`` maps left-camera coordinates to right-camera coordinates.
    Direction noise is applied to the right ray expressed in the left frame,
    so with an unrotated rig it is the same offset the noise-grid benchmark
    uses. Points outside either field of view are skipped and counted.
    """
    P = np.asarray(scene, dtype=float).reshape(-1, 3)
    if len(P) == 0:
        raise EmptyScene("scene has no points")
    if isinstance(noise, PixelNoise) and rng is None:
        raise ValueError("pixel noise needs an explicit random generator")

    PR = rig.apply(P)
    nL = np.linalg.norm(P, axis=1)
    nR = np.linalg.norm(PR, axis=1)
    ok = (nL > 0) & (nR > 0)
    dL = P / np.where(ok, nL, 1.0)[:, None]
    dR = PR / np.where(ok, nR, 1.0)[:, None]
    ok &= (polar_angle(dL) <= intrL.theta_max) & (polar_angle(dR) <= intrR.theta_max)

    pairs, truth = [], []
    skipped = 0
    for k in range(len(P)):
        if not ok[k]:
            skipped += 1
            continue
        pixL = project(intrL, dL[k])
        pixR = project(intrR, dR[k])
        if isinstance(noise, DirectionNoise):
            ray = rig.rotation.T @ unproject(intrR, pixR)
            ray = rig.rotation @ perturb_direction(ray, noise.x, noise.y)
            if polar_angle(ray) > intrR.theta_max:
                skipped += 1
                continue
            pixR = project(intrR, ray)
        elif isinstance(noise, PixelNoise):
            pixL = np.asarray(pixL) + rng.normal(0.0, noise.sigma, 2)
            pixR = np.asarray(pixR) + rng.normal(0.0, noise.sigma, 2)
            try:
                unproject(intrL, pixL)
                unproject(intrR, pixR)
            except RadiusOutOfRange:
                skipped += 1
                continue
        pairs.append(MatchPair(PixelPoint(*pixL), PixelPoint(*pixR)))
        truth.append(P[k])
    return MatchSet(
        pairs,
        MatchSource.SYNTHETIC,
        scene_id,
        skipped,
        np.array(truth, dtype=float).reshape(-1, 3),
    )
