"""Two-ray triangulation: skew-line midpoint and pseudo intersection.

The pseudo intersection builds the plane through both camera centres and the
skew-line midpoint S, projects each ray direction into that plane, and
intersects the two in-plane lines. Errors that tilt a ray out of the plane
(mostly vertical mismatch for a horizontal baseline) are then discarded
instead of being averaged into the estimate.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegeneratePlane, ParallelProjectedLines, ParallelRays
from .geometry import Ray, cross3, norm3

PARALLEL_TOL = 1e-12
PLANE_TOL = 1e-12
DEFAULT_TAU = 0.01

# noise-plane zone bounds on the right-ray direction components
SLIGHT_BOUND = 0.005
VERTICAL_BOUND = 0.015


class Method(str, enum.Enum):
    MIDPOINT = "Midpoint"
    PSEUDO = "PseudoIntersection"


class MismatchZone(str, enum.Enum):
    SLIGHT = "SlightlyMismatched"
    VERTICAL = "VerticalTolerance"
    SEVERE = "SeverelyMismatched"


@dataclass(frozen=True)
class ClosestApproach:
    pL: np.ndarray
    pR: np.ndarray
    midpoint: np.ndarray
    distance: float
    sL: float
    sR: float

    @property
    def behind(self) -> bool:
        """True if either closest point lies behind its ray origin."""
        return self.sL < 0.0 or self.sR < 0.0


@dataclass(frozen=True)
class TriangulationResult:
    point: np.ndarray
    method: Method
    skew_distance: float
    plane_deviation: float
    accepted: bool
    origin_left: np.ndarray
    behind: bool = False
    degenerate: bool = False

    @property
    def range(self) -> float:
        return float(norm3(self.point - self.origin_left))


def _closest(oL, dL, oR, dR):
    # Lagrange's identity: a*c - b*b == |dL x dR|^2, without the cancellation
    cross = cross3(dL, dR)
    den = cross @ cross
    if np.sqrt(den) <= PARALLEL_TOL:
        raise ParallelRays(f"|dL x dR| = {np.sqrt(den):.3g}")
    w = oL - oR
    a, b, c = dL @ dL, dL @ dR, dR @ dR
    d, e = dL @ w, dR @ w
    sL = (b * e - c * d) / den
    sR = (a * e - b * d) / den
    return sL, sR


def closest_points(rayL: Ray, rayR: Ray) -> ClosestApproach:
    """Closest pair of points between the two (infinite) ray lines."""
    sL, sR = _closest(rayL.origin, rayL.dir, rayR.origin, rayR.dir)
    pL = rayL.origin + sL * rayL.dir
    pR = rayR.origin + sR * rayR.dir
    return ClosestApproach(
        pL, pR, 0.5 * (pL + pR), float(norm3(pL - pR)), float(sL), float(sR)
    )


def runtime_accept(result: TriangulationResult, tau: float = DEFAULT_TAU) -> bool:
    """Ground-truth-free check: skew distance relative to range from the left camera."""
    if result.skew_distance == 0.0:
        return True
    rng = result.range
    if rng == 0.0:
        return False
    return bool(result.skew_distance / rng <= tau)


def _finish(result: TriangulationResult, tau: float | None) -> TriangulationResult:
    accepted = True if tau is None else runtime_accept(result, tau)
    if result.degenerate or result.behind:
        accepted = False
    return replace(result, accepted=accepted)


def triangulate_midpoint(rayL: Ray, rayR: Ray, tau: float | None = DEFAULT_TAU) -> TriangulationResult:
    ca = closest_points(rayL, rayR)
    res = TriangulationResult(
        ca.midpoint, Method.MIDPOINT, ca.distance, 0.0, True, rayL.origin, ca.behind
    )
    return _finish(res, tau)


def intersection_plane_normal(rayL: Ray, rayR: Ray, S) -> np.ndarray:
    """Unit normal of the plane through both origins and S.

    Raises DegeneratePlane when the three points are (numerically) collinear.
    """
    base = rayR.origin - rayL.origin
    arm = np.asarray(S) - rayL.origin
    n = cross3(base, arm)
    scale = norm3(base) * norm3(arm)
    nn = norm3(n)
    if scale == 0.0 or nn <= PLANE_TOL * scale:
        raise DegeneratePlane("camera origins and skew midpoint are collinear")
    return n / nn


def triangulate_pseudo(
    rayL: Ray, rayR: Ray, tau: float | None = DEFAULT_TAU, strict: bool = False
) -> TriangulationResult:
    """Pseudo intersection S' of the two rays projected onto their predicted plane.

    With ``strict=False`` a collinear plane falls back to the midpoint and the
    result is marked degenerate; ``strict=True`` raises DegeneratePlane instead.
    """
    ca = closest_points(rayL, rayR)
    try:
        n = intersection_plane_normal(rayL, rayR, ca.midpoint)
    except DegeneratePlane:
        if strict:
            raise
        res = TriangulationResult(
            ca.midpoint, Method.PSEUDO, ca.distance, 0.0, False, rayL.origin,
            ca.behind, degenerate=True,
        )
        return _finish(res, tau)

    # both origins lie in the plane, so only the directions need projecting
    eL = rayL.dir - (rayL.dir @ n) * n
    eR = rayR.dir - (rayR.dir @ n) * n
    nL = norm3(eL)
    nR = norm3(eR)
    if nL == 0.0 or nR == 0.0:
        raise ParallelProjectedLines("a ray is normal to the intersection plane")
    eL /= nL
    eR /= nR
    try:
        sL, sR = _closest(rayL.origin, eL, rayR.origin, eR)
    except ParallelRays as exc:
        raise ParallelProjectedLines(str(exc)) from exc
    qL = rayL.origin + sL * eL
    qR = rayR.origin + sR * eR
    point = 0.5 * (qL + qR)
    # angle between a unit vector and its projection onto the plane
    deviation = float(np.arcsin(min(1.0, max(abs(rayL.dir @ n), abs(rayR.dir @ n)))))
    res = TriangulationResult(
        point, Method.PSEUDO, ca.distance, deviation, True, rayL.origin,
        bool(sL < 0.0 or sR < 0.0),
    )
    return _finish(res, tau)


def classify_mismatch(noise_x: float, noise_y: float) -> MismatchZone:
    ax, ay = abs(noise_x), abs(noise_y)
    if ax <= SLIGHT_BOUND and ay <= SLIGHT_BOUND:
        return MismatchZone.SLIGHT
    if ax <= SLIGHT_BOUND and ay <= VERTICAL_BOUND:
        return MismatchZone.VERTICAL
    return MismatchZone.SEVERE
