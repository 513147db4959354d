"""Extrinsic calibration from chessboard ray bundles.

Each detected corner unprojects to a ray through the camera centre. For one
image the board pose is found by fitting the known planar grid to that ray
bundle (angular least squares, damped Gauss-Newton). Corner clouds recovered
in both cameras for the same board placement are then registered with an SVD
rigid fit to give the left-to-right transform.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera_model import FisheyeIntrinsics, unproject
from .errors import (
    DegenerateBoard,
    DegenerateGeometry,
    DivergedOptimization,
    InsufficientViews,
    ParseError,
)
from .geometry import RigidTransform, axis_aligned_rotations, rotvec_to_matrix, unit

log = logging.getLogger(__name__)

MAX_ITER = 200
DECREASE_TOL = 1e-12  # rad^2
RELATIVE_DECREASE_TOL = 1e-4
DIVERGED_OBJECTIVE = 1e-2  # rad^2
LAMBDA0 = 1e-3
LAMBDA_MAX = 1e16
SCREEN_ITER = 8
REFINE_STARTS = 3


@dataclass(frozen=True)
class ChessboardSpec:
    rows: int
    cols: int
    square_size: float

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError("chessboard needs at least 2x2 interior corners")
        if not self.square_size > 0:
            raise ValueError("square_size must be positive")

    @property
    def n_corners(self) -> int:
        return self.rows * self.cols

    def model_points(self) -> np.ndarray:
        """Corner (i, j) sits at (j * s, i * s, 0); rows are returned row-major."""
        i, j = np.mgrid[0 : self.rows, 0 : self.cols]
        s = self.square_size
        return np.stack([j.ravel() * s, i.ravel() * s, np.zeros(self.n_corners)], axis=1)


@dataclass(frozen=True)
class CornerObservations:
    camera: str  # "L" or "R"
    view: str
    pixels: np.ndarray  # (rows * cols, 2), row-major

    def __post_init__(self):
        if self.camera not in ("L", "R"):
            raise ValueError(f"camera must be 'L' or 'R', got {self.camera!r}")
        object.__setattr__(self, "pixels", np.asarray(self.pixels, dtype=float).reshape(-1, 2))


@dataclass(frozen=True)
class BoardPose:
    transform: RigidTransform  # board frame -> camera frame
    rms_residual: float  # rad
    iterations: int = 0

    def corners(self, spec: ChessboardSpec) -> np.ndarray:
        return self.transform.apply(spec.model_points())


@dataclass
class ExtrinsicCalibration:
    transform: RigidTransform  # left camera frame -> right camera frame
    rms_mm: float
    per_view: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.transform.to_dict()
        d["per_view"] = self.per_view
        d["rms_mm"] = self.rms_mm
        return d


# ---------------------------------------------------------------------------
# board pose from a ray bundle
# ---------------------------------------------------------------------------


def _tangent_bases(u):
    helper = np.where(np.abs(u[:, :1]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    e1 = unit(np.cross(u, helper))
    e2 = np.cross(u, e1)
    return e1, e2


class _RayBundleProblem:
    """Angular residuals between observed rays and rays to posed model corners.

    The residual for one corner is the log map of the predicted direction in
    the tangent plane of the observed ray, so its squared norm is exactly the
    squared angle between the two. Parameters are updated as
    R <- exp(w) R, t <- t + dt.
    """

    def __init__(self, rays, model):
        self.u = rays
        self.e1, self.e2 = _tangent_bases(rays)
        self.E = np.stack([self.e1, self.e2, self.u], axis=1)  # (N, 3, 3)
        self.model = model

    def _local(self, R, t):
        y = self.model @ R.T
        p = y + t
        abc = np.einsum("nij,nj->ni", self.E, p)
        return y, abc

    @staticmethod
    def _kappa(rho, c):
        alpha = np.arctan2(rho, c)
        safe = np.where(rho > 0.0, rho, 1.0)
        return np.where(rho > 0.0, alpha / safe, 1.0 / np.where(c != 0.0, c, 1.0))

    def residuals(self, R, t):
        _, abc = self._local(R, t)
        a, b, c = abc.T
        k = self._kappa(np.hypot(a, b), c)
        return np.concatenate([k * a, k * b])

    def objective(self, R, t) -> float:
        r = self.residuals(R, t)
        return float(r @ r)

    def jacobian(self, R, t):
        y, abc = self._local(R, t)
        a, b, c = abc.T
        rho = np.hypot(a, b)
        k = self._kappa(rho, c)
        k_c = -1.0 / (rho * rho + c * c)
        # d(kappa)/d(rho) / rho; the direct form cancels catastrophically as rho -> 0
        q = np.where(c > 0.0, rho / np.where(c > 0.0, c, 1.0), np.inf)
        small = q < 1e-3
        safe_rho = np.where(small, 1.0, rho)
        direct = (rho * c / (rho * rho + c * c) - np.arctan2(rho, c)) / safe_rho**3
        cs = np.where(small, c, 1.0)
        series = (-2.0 / 3.0 + 0.8 * q * q) / cs**3
        k_rr = np.where(small, series, direct)

        n = len(a)
        M = np.zeros((n, 2, 3))
        M[:, 0, 0] = k + k_rr * a * a
        M[:, 0, 1] = k_rr * a * b
        M[:, 1, 0] = k_rr * a * b
        M[:, 1, 1] = k + k_rr * b * b
        M[:, 0, 2] = k_c * a
        M[:, 1, 2] = k_c * b
        G = M @ self.E  # d residual / d p, world axes
        J = np.empty((2, n, 6))
        for comp in range(2):
            g = G[:, comp, :]
            J[comp, :, :3] = np.cross(y, g)
            J[comp, :, 3:] = g
        return J.reshape(2 * n, 6)


def _apply_increment(R, t, delta):
    return rotvec_to_matrix(delta[:3]) @ R, t + delta[3:]


def _levenberg_marquardt(problem, R, t, max_iter=MAX_ITER):
    f = problem.objective(R, t)
    lam = LAMBDA0
    it = 0
    for it in range(1, max_iter + 1):
        r = problem.residuals(R, t)
        J = problem.jacobian(R, t)
        A = J.T @ J
        g = J.T @ r
        diag = np.diag(A).copy()
        diag[diag == 0.0] = 1.0
        accepted = False
        while lam <= LAMBDA_MAX:
            try:
                delta = np.linalg.solve(A + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            R_new, t_new = _apply_increment(R, t, delta)
            f_new = problem.objective(R_new, t_new)
            if f_new < f:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        decrease = f - f_new
        R, t, f = R_new, t_new, f_new
        lam = max(lam / 10.0, 1e-12)
        # an absolute floor alone stops zero-residual problems too early, when
        # one more Gauss-Newton step would still gain orders of magnitude
        if decrease < DECREASE_TOL and decrease <= RELATIVE_DECREASE_TOL * (f + decrease):
            break
    return R, t, f, it


def _initial_depth(rays, spec: ChessboardSpec) -> float:
    grid = rays.reshape(spec.rows, spec.cols, 3)
    ang_h = np.arccos(np.clip(np.sum(grid[:, 1:] * grid[:, :-1], axis=-1), -1.0, 1.0))
    ang_v = np.arccos(np.clip(np.sum(grid[1:] * grid[:-1], axis=-1), -1.0, 1.0))
    mean_angle = np.mean(np.concatenate([ang_h.ravel(), ang_v.ravel()]))
    return spec.square_size / max(np.tan(mean_angle), 1e-12)


def board_pose_from_rays(
    intr: FisheyeIntrinsics, obs: CornerObservations, spec: ChessboardSpec
) -> BoardPose:
    """Recover the board-to-camera pose from one image's corner pixels."""
    if len(obs.pixels) != spec.n_corners:
        raise ParseError(
            f"view {obs.view} camera {obs.camera}: {len(obs.pixels)} corners, "
            f"expected {spec.n_corners}"
        )
    rays = unproject(intr, obs.pixels)
    sv = np.linalg.svd(rays, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise DegenerateBoard(f"view {obs.view}: corner rays are coplanar (collinear corners)")

    model = spec.model_points()
    centroid = model.mean(axis=0)
    problem = _RayBundleProblem(rays, model)
    depth = _initial_depth(rays, spec)
    aim = unit(rays.mean(axis=0))

    # Planar targets have mirror-like local minima with small objective, so a
    # single start is not enough: every axis-aligned start gets a short run,
    # the most promising few are refined, and the lowest objective wins.
    screened = []
    for Q in axis_aligned_rotations():
        t0 = depth * aim - Q @ centroid
        R, t, f, _ = _levenberg_marquardt(problem, Q, t0, SCREEN_ITER)
        screened.append((f, R, t))
    screened.sort(key=lambda c: c[0])
    best = None
    for _, R0, t0 in screened[:REFINE_STARTS]:
        R, t, f, iters = _levenberg_marquardt(problem, R0, t0)
        if not _in_front(rays, model @ R.T + t):
            continue
        if best is None or f < best[2]:
            best = (R, t, f, iters)
    if best is None:
        raise DivergedOptimization(f"view {obs.view}: no start converged in front of the camera")
    R, t, f, iters = best
    if f > DIVERGED_OBJECTIVE:
        raise DivergedOptimization(
            f"view {obs.view} camera {obs.camera}: objective {f:.3g} rad^2 after fitting"
        )
    # re-orthonormalise once to clear accumulated rounding
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    rms = float(np.sqrt(f / spec.n_corners))
    return BoardPose(RigidTransform(R, t), rms, iters)


def _in_front(rays, points) -> bool:
    return bool(np.all(np.einsum("ij,ij->i", rays, points) > 0.0))


# ---------------------------------------------------------------------------
# rigid registration
# ---------------------------------------------------------------------------


def fit_rigid_transform(points_a, points_b) -> RigidTransform:
    """Least-squares (R, t) with R @ a + t ~= b, det(R) = +1."""
    A = np.asarray(points_a, dtype=float).reshape(-1, 3)
    B = np.asarray(points_b, dtype=float).reshape(-1, 3)
    if A.shape != B.shape:
        raise DegenerateGeometry(f"point sets differ in size: {len(A)} vs {len(B)}")
    if len(A) < 3:
        raise DegenerateGeometry("need at least 3 point pairs")
    ca = A.mean(axis=0)
    cb = B.mean(axis=0)
    Ac = A - ca
    Bc = B - cb
    sv = np.linalg.svd(Ac, compute_uv=False)
    if sv[0] == 0.0 or sv[1] <= 1e-9 * sv[0]:
        raise DegenerateGeometry("source points are collinear")

    H = Ac.T @ Bc
    U, _, Vt = np.linalg.svd(H)
    V = Vt.T
    D = np.eye(3)
    if np.linalg.det(V @ U.T) < 0.0:
        D[2, 2] = -1.0
    R = V @ D @ U.T
    return RigidTransform(R, cb - R @ ca)


# ---------------------------------------------------------------------------
# stereo extrinsics
# ---------------------------------------------------------------------------


def calibrate_extrinsics(
    views,
    intrL: FisheyeIntrinsics,
    intrR: FisheyeIntrinsics,
    spec: ChessboardSpec,
) -> ExtrinsicCalibration:
    """Left-to-right transform from paired board observations.

    ``views`` is a sequence of (left, right) CornerObservations for the same
    board placement.
    """
    views = list(views)
    if not views:
        raise InsufficientViews("no paired views")
    ptsL, ptsR, per_view = [], [], []
    for obsL, obsR in views:
        poseL = board_pose_from_rays(intrL, obsL, spec)
        poseR = board_pose_from_rays(intrR, obsR, spec)
        ptsL.append(poseL.corners(spec))
        ptsR.append(poseR.corners(spec))
        per_view.append(
            {"view": obsL.view, "rms_left_rad": poseL.rms_residual, "rms_right_rad": poseR.rms_residual}
        )
        log.debug("view %s: rms L %.3g rad, R %.3g rad", obsL.view, poseL.rms_residual, poseR.rms_residual)
    A = np.concatenate(ptsL)
    B = np.concatenate(ptsR)
    T = fit_rigid_transform(A, B)
    resid = np.linalg.norm(T.apply(A) - B, axis=1)
    n = spec.n_corners
    for k, entry in enumerate(per_view):
        entry["rms_mm"] = float(np.sqrt(np.mean(resid[k * n : (k + 1) * n] ** 2)))
    return ExtrinsicCalibration(T, float(np.sqrt(np.mean(resid**2))), per_view)


# ---------------------------------------------------------------------------
# corner files
# ---------------------------------------------------------------------------

CORNER_HEADER = ["view", "camera", "i", "j", "u", "v"]


def _view_key(v: str):
    return (0, int(v), "") if v.lstrip("-").isdigit() else (1, 0, v)


def load_corners(path, spec: ChessboardSpec):
    """Read a corner CSV into ``[(left_obs, right_obs), ...]`` sorted by view id.

    Views seen by only one camera are dropped with a warning; if that leaves
    nothing, InsufficientViews is raised.
    """
    grids: dict[tuple[str, str], np.ndarray] = {}
    filled: dict[tuple[str, str], np.ndarray] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError("empty corner file", line=1)
        if [h.strip() for h in header] != CORNER_HEADER:
            raise ParseError(f"expected header {','.join(CORNER_HEADER)}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 6:
                raise ParseError(f"expected 6 fields, got {len(row)}", line=lineno)
            view, cam = row[0].strip(), row[1].strip()
            if cam not in ("L", "R"):
                raise ParseError(f"camera must be L or R, got {cam!r}", line=lineno)
            try:
                i, j = int(row[2]), int(row[3])
                u, v = float(row[4]), float(row[5])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if not (0 <= i < spec.rows and 0 <= j < spec.cols):
                raise ParseError(f"grid index ({i}, {j}) outside {spec.rows}x{spec.cols}", line=lineno)
            if not (np.isfinite(u) and np.isfinite(v)):
                raise ParseError("non-finite pixel coordinate", line=lineno)
            key = (view, cam)
            if key not in grids:
                grids[key] = np.zeros((spec.n_corners, 2))
                filled[key] = np.zeros(spec.n_corners, dtype=bool)
            idx = i * spec.cols + j
            if filled[key][idx]:
                raise ParseError(f"duplicate corner ({i}, {j}) for view {view} camera {cam}", line=lineno)
            grids[key][idx] = (u, v)
            filled[key][idx] = True
    if not grids:
        raise ParseError("corner file has no data rows", line=2)
    for (view, cam), mask in filled.items():
        if not mask.all():
            raise ParseError(f"view {view} camera {cam}: {int((~mask).sum())} corners missing")

    pairs = []
    for view in sorted({v for v, _ in grids}, key=_view_key):
        if (view, "L") in grids and (view, "R") in grids:
            pairs.append(
                (
                    CornerObservations("L", view, grids[(view, "L")]),
                    CornerObservations("R", view, grids[(view, "R")]),
                )
            )
        else:
            log.warning("view %s seen by one camera only; skipped", view)
    if not pairs:
        raise InsufficientViews("no view has corners from both cameras")
    return pairs


def save_corners(path, observations, spec: ChessboardSpec) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CORNER_HEADER)
        for obs in observations:
            for idx, (u, v) in enumerate(obs.pixels):
                i, j = divmod(idx, spec.cols)
                w.writerow([obs.view, obs.camera, i, j, repr(float(u)), repr(float(v))])


def save_report(cal: ExtrinsicCalibration, path) -> None:
    Path(path).write_text(json.dumps(cal.to_dict(), indent=2) + "\n")
