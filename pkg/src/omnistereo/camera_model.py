"""Kannala-Brandt fisheye model: pixel <-> incident ray.

The radial mapping is the odd polynomial

    r(theta) = k1*theta + k2*theta**3 + k3*theta**5 + k4*theta**7 + k5*theta**9

with r in pixels, so the focal length lives inside k1. Pixel offsets from the
principal point are ``(mu * r * cos(phi), mv * r * sin(phi))``.

All functions broadcast: a single direction of shape (3,) gives a pixel of
shape (2,), an (N, 3) array gives (N, 2), and so on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    InvalidIntrinsics,
    NonUnitDirection,
    PolarAngleOutOfRange,
    RadiusOutOfRange,
)

UNIT_TOL = 1e-9
THETA_TOL = 1e-12
MAX_ITER = 100
MONOTONE_SAMPLES = 2001

# nominal lens: H = 195.95 deg, so half-FOV is the largest valid polar angle
DEFAULT_THETA_MAX_DEG = 195.95 / 2.0


class PixelPoint(NamedTuple):
    u: float
    v: float


@dataclass(frozen=True)
class FisheyeIntrinsics:
    k: tuple[float, float, float, float, float]
    cx: float
    cy: float
    mu: float = 1.0
    mv: float = 1.0
    theta_max: float = math.radians(DEFAULT_THETA_MAX_DEG)

    def __post_init__(self):
        k = tuple(float(c) for c in self.k)
        if len(k) != 5:
            raise InvalidIntrinsics(f"expected 5 polynomial coefficients, got {len(k)}")
        object.__setattr__(self, "k", k)
        for name in ("cx", "cy", "mu", "mv", "theta_max"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise InvalidIntrinsics(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if not 0.0 < self.theta_max <= math.pi:
            raise InvalidIntrinsics("theta_max must lie in (0, pi]")
        if self.mu <= 0 or self.mv <= 0:
            raise InvalidIntrinsics("pixel scales mu, mv must be positive")
        theta = np.linspace(0.0, self.theta_max, MONOTONE_SAMPLES)
        if np.any(self.radius_derivative(theta) <= 0.0):
            raise InvalidIntrinsics(
                "r(theta) is not strictly increasing on [0, theta_max]"
            )

    @classmethod
    def equidistant(cls, k1=300.0, cx=640.0, cy=640.0, **kw) -> FisheyeIntrinsics:
        return cls((k1, 0.0, 0.0, 0.0, 0.0), cx, cy, **kw)

    def radius(self, theta):
        """Evaluate r(theta) by Horner's rule in theta**2."""
        theta = np.asarray(theta, dtype=float)
        t2 = theta * theta
        k1, k2, k3, k4, k5 = self.k
        return theta * (k1 + t2 * (k2 + t2 * (k3 + t2 * (k4 + t2 * k5))))

    def radius_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        t2 = theta * theta
        k1, k2, k3, k4, k5 = self.k
        return k1 + t2 * (3 * k2 + t2 * (5 * k3 + t2 * (7 * k4 + t2 * 9 * k5)))

    @property
    def r_max(self) -> float:
        return float(self.radius(self.theta_max))

    def to_dict(self) -> dict:
        return {
            "k": list(self.k),
            "cx": self.cx,
            "cy": self.cy,
            "mu": self.mu,
            "mv": self.mv,
            "theta_max_deg": math.degrees(self.theta_max),
        }

    @classmethod
    def from_dict(cls, d: dict) -> FisheyeIntrinsics:
        try:
            return cls(
                tuple(d["k"]),
                d["cx"],
                d["cy"],
                d.get("mu", 1.0),
                d.get("mv", 1.0),
                math.radians(d.get("theta_max_deg", DEFAULT_THETA_MAX_DEG)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidIntrinsics(f"malformed intrinsics record: {exc!r}") from exc


def load_intrinsics(path) -> FisheyeIntrinsics:
    with open(path) as fh:
        return FisheyeIntrinsics.from_dict(json.load(fh))


def save_intrinsics(intr: FisheyeIntrinsics, path) -> None:
    Path(path).write_text(json.dumps(intr.to_dict(), indent=2) + "\n")


def solve_theta(intr: FisheyeIntrinsics, r):
    """Invert r(theta) on [0, theta_max].

    Newton's method started at r / k1, with every iterate kept inside a
    bisection bracket. Monotonicity of r(theta) makes the bracket valid, so the
    iteration cannot escape or stall.
    """
    r = np.asarray(r, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    r_max = intr.r_max
    tol = 1e-10 * np.maximum(1.0, r_max)
    if np.any(~np.isfinite(r)) or np.any(r < 0.0) or np.any(r > r_max + tol):
        raise RadiusOutOfRange(
            f"radius outside [0, {r_max:.6g}] px for theta_max={intr.theta_max:.6g} rad"
        )
    r = np.minimum(r, r_max)

    lo = np.zeros_like(r)
    hi = np.full_like(r, intr.theta_max)
    # k1 > 0 is implied by the monotonicity check at theta = 0
    theta = np.clip(r / intr.k[0], 0.0, intr.theta_max)
    for _ in range(MAX_ITER):
        f = intr.radius(theta) - r
        lo = np.where(f < 0.0, theta, lo)
        hi = np.where(f > 0.0, theta, hi)
        step = f / intr.radius_derivative(theta)
        cand = theta - step
        outside = (cand <= lo) | (cand >= hi)
        cand = np.where(outside, 0.5 * (lo + hi), cand)
        done = (np.abs(cand - theta) < THETA_TOL) | (f == 0.0)
        theta = np.where(f == 0.0, theta, cand)
        if np.all(done):
            break
    return float(theta[0]) if scalar else theta


def project(intr: FisheyeIntrinsics, direction):
    """Map unit direction(s) in the camera frame to pixel coordinates.

    A single direction gives a PixelPoint; an (n, 3) batch gives an (n, 2) array.
    """
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d, axis=-1)
    if np.any(np.abs(norm - 1.0) > UNIT_TOL):
        raise NonUnitDirection(f"direction norm {np.max(np.abs(norm - 1.0)):.3g} away from 1")
    x, y, z = d[..., 0], d[..., 1], d[..., 2]
    # atan2 form keeps full precision near the optical axis where arccos does not
    theta = np.arctan2(np.hypot(x, y), z)
    if np.any(theta > intr.theta_max):
        raise PolarAngleOutOfRange(
            f"polar angle {np.degrees(np.max(theta)):.4f} deg exceeds "
            f"theta_max {np.degrees(intr.theta_max):.4f} deg"
        )
    phi = np.arctan2(y, x)
    r = intr.radius(theta)
    u = intr.cx + intr.mu * r * np.cos(phi)
    v = intr.cy + intr.mv * r * np.sin(phi)
    if d.ndim == 1:
        return PixelPoint(float(u), float(v))
    return np.stack([u, v], axis=-1)


def polar_angle(direction):
    d = np.asarray(direction, dtype=float)
    return np.arctan2(np.hypot(d[..., 0], d[..., 1]), d[..., 2])


def unproject(intr: FisheyeIntrinsics, pixel):
    """Retrieve the unit incident-ray direction(s) for pixel(s)."""
    p = np.asarray(pixel, dtype=float)
    du = (p[..., 0] - intr.cx) / intr.mu
    dv = (p[..., 1] - intr.cy) / intr.mv
    r = np.hypot(du, dv)
    phi = np.arctan2(dv, du)
    theta = np.asarray(solve_theta(intr, r))
    s = np.sin(theta)
    return np.stack([s * np.cos(phi), s * np.sin(phi), np.cos(theta)], axis=-1)


def angular_error(a, b):
    """Angle in radians between direction(s) a and b, accurate at small angles."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.arctan2(
        np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1)
    )
