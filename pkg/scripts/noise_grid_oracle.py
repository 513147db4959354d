#!/usr/bin/env python3
"""High-precision reference values for the noise-grid benchmark.

Recomputes both triangulation methods for a subset of grid cells with mpmath
at 50 significant digits. The construction deliberately differs from the
package code:

* closest points come from the common-normal plane formula
  c1 = p1 + ((p2 - p1) . n2 / (d1 . n2)) d1, with n2 = d2 x (d1 x d2);
* the pseudo intersection works in 2-D coordinates of an orthonormal basis of
  the plane (baseline axis + Gram-Schmidt) and intersects the projected lines
  by Cramer's rule.

Writes tests/fixtures/noise_grid_oracle.json.
"""

import json
from pathlib import Path

import mpmath as mp

mp.mp.dps = 50

OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "noise_grid_oracle.json"

OL = [mp.mpf(-75), mp.mpf(0), mp.mpf(0)]
OR = [mp.mpf(75), mp.mpf(0), mp.mpf(0)]
TARGET = [mp.mpf(-3000), mp.mpf(2000), mp.mpf(5000)]


def sub(a, b):
    return [x - y for x, y in zip(a, b)]


def add(a, b):
    return [x + y for x, y in zip(a, b)]


def scale(a, s):
    return [x * s for x in a]


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def cross(a, b):
    return [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]


def norm(a):
    return mp.sqrt(dot(a, a))


def normalize(a):
    return scale(a, 1 / norm(a))


def closest_pair(p1, d1, p2, d2):
    n = cross(d1, d2)
    n1 = cross(d1, n)
    n2 = cross(d2, n)
    c1 = add(p1, scale(d1, dot(sub(p2, p1), n2) / dot(d1, n2)))
    c2 = add(p2, scale(d2, dot(sub(p1, p2), n1) / dot(d2, n1)))
    return c1, c2


def perturbed_right(x, y):
    d = normalize(sub(TARGET, OR))
    d = [d[0] + mp.mpf(x), d[1] + mp.mpf(y), d[2]]
    return normalize(d)


def cell(x, y):
    dL = normalize(sub(TARGET, OL))
    dR = perturbed_right(x, y)
    c1, c2 = closest_pair(OL, dL, OR, dR)
    S = scale(add(c1, c2), mp.mpf(1) / 2)

    # orthonormal in-plane basis: baseline direction, then S - oL made orthogonal
    u = normalize(sub(OR, OL))
    w = sub(S, OL)
    v = normalize(sub(w, scale(u, dot(w, u))))

    def to2(p):
        q = sub(p, OL)
        return dot(q, u), dot(q, v)

    def dir2(d):
        return dot(d, u), dot(d, v)

    (ax, ay), (bx, by) = to2(OL), to2(OR)
    (lx, ly), (rx, ry) = dir2(dL), dir2(dR)
    # a + s l = b + t r  ->  [l, -r] [s, t]^T = b - a
    det = lx * (-ry) - (-rx) * ly
    s = ((bx - ax) * (-ry) - (-rx) * (by - ay)) / det
    P2 = (ax + s * lx, ay + s * ly)
    P = add(OL, add(scale(u, P2[0]), scale(v, P2[1])))

    rng_true = norm(sub(TARGET, OL))
    return {
        "x": float(x),
        "y": float(y),
        "err_pseudo_mm": float(norm(sub(P, OL)) - rng_true),
        "err_midpoint_mm": float(norm(sub(S, OL)) - rng_true),
        "eucl_pseudo_mm": float(norm(sub(P, TARGET))),
        "eucl_midpoint_mm": float(norm(sub(S, TARGET))),
    }


def main():
    step = mp.mpf("0.0005")
    ks = range(-40, 41, 4)  # every 4th default-grid cell along each axis
    coords = sorted({mp.nstr(k * step, 6) for k in ks} | {"0.003", "0.01", "0.015", "0.02"},
                    key=lambda s: mp.mpf(s))
    cells = []
    for ys in coords:
        for xs in coords:
            if abs(mp.mpf(xs)) > mp.mpf("0.02") or abs(mp.mpf(ys)) > mp.mpf("0.02"):
                continue
            cells.append(cell(mp.mpf(xs), mp.mpf(ys)))
    specials = [("0", "0.01"), ("0.02", "0"), ("0.015", "0"), ("0.003", "0"), ("0", "0")]
    for xs, ys in specials:
        c = cell(mp.mpf(xs), mp.mpf(ys))
        if c not in cells:
            cells.append(c)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps({"digits": mp.mp.dps, "cells": cells}, indent=1) + "\n")
    print(f"wrote {len(cells)} cells to {OUT}")
    for c in cells:
        if (c["x"], c["y"]) in {(0.0, 0.01), (0.02, 0.0), (0.015, 0.0), (0.003, 0.0)}:
            print(c)


if __name__ == "__main__":
    main()
