"""Synthetic error study for the two triangulation methods.

A target seen from two camera centres gets an exact left ray and a right ray
whose direction is offset by (x, y) noise and renormalised. Sweeping (x, y)
over a grid gives per-cell range errors for both methods. Each cell is then
checked against the +/- e_max filter and labelled with its mismatch zone.
"""

from __future__ import annotations

import csv
import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import OmniStereoError
from .geometry import Ray, RigidTransform, norm3, unit
from .matching_io import DirectionNoise, PixelNoise, perturb_direction, synthesize_matches
from .pipeline import triangulate_matches
from .triangulation import (
    DEFAULT_TAU,
    MismatchZone,
    classify_mismatch,
    runtime_accept,
    triangulate_midpoint,
    triangulate_pseudo,
)

MONOTONE_TOL = 1e-9
FAR_DEPTH_MM = 5000.0
WORK_DTYPE = np.longdouble


@dataclass(frozen=True)
class BenchConfig:
    origin_left: tuple = (-75.0, 0.0, 0.0)
    origin_right: tuple = (75.0, 0.0, 0.0)
    target: tuple = (-3000.0, 2000.0, 5000.0)
    xmin: float = -0.02
    xmax: float = 0.02
    ymin: float = -0.02
    ymax: float = 0.02
    step: float = 0.0005
    e_max: float = 500.0
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.xmin > self.xmax or self.ymin > self.ymax:
            raise ValueError("grid bounds must be ordered")
        if not self.e_max > 0:
            raise ValueError("e_max must be positive")

    def _axis(self, lo, hi):
        n = int(math.floor((hi - lo) / self.step + 1e-9)) + 1
        # rounding keeps zone boundaries like 0.005 exact instead of 0.005000000000000001
        return np.round(lo + self.step * np.arange(n), 12) + 0.0

    @property
    def xs(self) -> np.ndarray:
        return self._axis(self.xmin, self.xmax)

    @property
    def ys(self) -> np.ndarray:
        return self._axis(self.ymin, self.ymax)


@dataclass(frozen=True)
class BenchCell:
    x: float
    y: float
    zone: MismatchZone
    err_pseudo: float  # signed range error, mm
    err_midpoint: float
    eucl_pseudo: float  # |estimate - target|, mm
    eucl_midpoint: float
    pass_pseudo: bool
    pass_midpoint: bool
    degenerate: bool
    skew_mm: float = math.nan
    runtime_accept_pseudo: bool = False


@dataclass
class BenchGrid:
    config: BenchConfig
    xs: np.ndarray
    ys: np.ndarray
    cells: list[BenchCell]  # sorted by (y, x)

    def array(self, attr: str) -> np.ndarray:
        """Cell attribute as an (ny, nx) array, row k <-> ys[k]."""
        return np.array([getattr(c, attr) for c in self.cells]).reshape(len(self.ys), len(self.xs))

    def cell(self, x: float, y: float) -> BenchCell:
        i = int(np.argmin(np.abs(self.ys - y)))
        j = int(np.argmin(np.abs(self.xs - x)))
        return self.cells[i * len(self.xs) + j]


def signed_range_error(point, truth, origin) -> float:
    return float(norm3(np.asarray(point) - origin) - norm3(np.asarray(truth) - origin))


def evaluate_cell(cfg: BenchConfig, x: float, y: float) -> BenchCell:
    # Large-noise cells intersect nearly parallel in-plane lines, where one ulp
    # of direction moves the point by ~1e-6 mm; extended precision keeps every
    # emitted value well inside that.
    X = WORK_DTYPE
    oL = np.asarray(cfg.origin_left, dtype=X)
    oR = np.asarray(cfg.origin_right, dtype=X)
    T = np.asarray(cfg.target, dtype=X)
    rayL = Ray.towards(oL, T)
    rayR = Ray(oR, perturb_direction(unit(T - oR), X(x), X(y)))
    zone = classify_mismatch(x, y)
    try:
        mid = triangulate_midpoint(rayL, rayR, tau=cfg.tau)
        pse = triangulate_pseudo(rayL, rayR, tau=cfg.tau)
    except OmniStereoError:
        nan = math.nan
        return BenchCell(x, y, zone, nan, nan, nan, nan, False, False, True)
    e_p = signed_range_error(pse.point, T, oL)
    e_m = signed_range_error(mid.point, T, oL)
    return BenchCell(
        x,
        y,
        zone,
        e_p,
        e_m,
        float(norm3(pse.point - T)),
        float(norm3(mid.point - T)),
        bool(abs(e_p) <= cfg.e_max and not pse.degenerate),
        bool(abs(e_m) <= cfg.e_max),
        pse.degenerate,
        pse.skew_distance,
        runtime_accept(pse, cfg.tau),
    )


def run_noise_grid(cfg: BenchConfig = BenchConfig(), threads: int = 1) -> BenchGrid:
    xs, ys = cfg.xs, cfg.ys

    def row(y):
        return [evaluate_cell(cfg, float(x), float(y)) for x in xs]

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, ys))
    else:
        rows = [row(y) for y in ys]
    return BenchGrid(cfg, xs, ys, [c for r in rows for c in r])


# ---------------------------------------------------------------------------
# summary
# ---------------------------------------------------------------------------


def _is_monotone(values) -> bool:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) < 2:
        return True
    d = np.diff(v)
    return bool(np.all(d >= -MONOTONE_TOL) or np.all(d <= MONOTONE_TOL))


@dataclass
class BenchSummary:
    n_cells: int
    zones: dict = field(default_factory=dict)
    monotone_pseudo: dict = field(default_factory=dict)  # y -> verdict
    comparison: list = field(default_factory=list)
    severe_runtime_accept_fraction: float = math.nan
    symmetry: dict = field(default_factory=dict)

    @property
    def all_monotone_pseudo(self) -> bool:
        return all(self.monotone_pseudo.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["monotone_pseudo"] = {repr(k): v for k, v in self.monotone_pseudo.items()}
        d["all_monotone_pseudo"] = self.all_monotone_pseudo
        return d


def _zone_stats(cells, method):
    errs = [getattr(c, f"err_{method}") for c in cells]
    passed = [abs(e) for c, e in zip(cells, errs) if getattr(c, f"pass_{method}")]
    finite = [abs(e) for e in errs if math.isfinite(e)]
    return {
        "n": len(cells),
        "pass_fraction": len(passed) / len(cells) if cells else math.nan,
        "max_abs_err_passing": max(passed) if passed else math.nan,
        "median_abs_err": statistics.median(finite) if finite else math.nan,
    }


def symmetry_report(grid: BenchGrid) -> dict:
    """Split the pseudo error into parts odd and even under (x, y) -> (-x, -y).

    The error is odd to first order in the noise; the even part grows
    quadratically. ``even_part_exponent`` is the median log2 ratio of the even
    part at (2x, 2y) versus (x, y).
    """
    E = grid.array("err_pseudo")
    xs, ys = grid.xs, grid.ys
    xi = {round(float(x), 12): j for j, x in enumerate(xs)}
    yi = {round(float(y), 12): i for i, y in enumerate(ys)}

    def at(x, y):
        i, j = yi.get(round(y, 12)), xi.get(round(x, 12))
        return None if i is None or j is None else float(E[i, j])

    even, odd, exps = [], [], []
    for y in ys:
        for x in xs:
            x, y = float(x), float(y)
            if x == 0.0 and y == 0.0:
                continue
            a, b = at(x, y), at(-x, -y)
            if a is None or b is None or not (math.isfinite(a) and math.isfinite(b)):
                continue
            if classify_mismatch(x, y) is MismatchZone.SLIGHT:
                even.append(abs(a + b) / 2)
                odd.append(abs(a - b) / 2)
            a2, b2 = at(2 * x, 2 * y), at(-2 * x, -2 * y)
            if a2 is None or b2 is None:
                continue
            e1, e2 = (a + b) / 2, (a2 + b2) / 2
            if e1 != 0.0 and e2 != 0.0 and max(abs(x), abs(y)) <= 0.0025:
                exps.append(math.log2(abs(e2 / e1)))
    return {
        "relation": "err(x,y) = -err(-x,-y) + O(|noise|^2)",
        "max_even_part_slight_mm": max(even) if even else math.nan,
        "max_odd_part_slight_mm": max(odd) if odd else math.nan,
        "even_part_exponent": statistics.median(exps) if exps else math.nan,
    }


def summarize(grid: BenchGrid) -> BenchSummary:
    cells = grid.cells
    if not cells:
        raise ValueError("empty grid")
    s = BenchSummary(n_cells=len(cells))
    for zone in MismatchZone:
        zc = [c for c in cells if c.zone is zone]
        s.zones[zone.value] = {m: _zone_stats(zc, m) for m in ("pseudo", "midpoint")}
        p, m = s.zones[zone.value]["pseudo"], s.zones[zone.value]["midpoint"]
        s.comparison.append(
            {
                "zone": zone.value,
                "n": len(zc),
                "pass_pseudo": p["pass_fraction"],
                "pass_midpoint": m["pass_fraction"],
                "median_abs_pseudo_mm": p["median_abs_err"],
                "median_abs_midpoint_mm": m["median_abs_err"],
            }
        )
    E = grid.array("err_pseudo")
    for k, y in enumerate(grid.ys):
        s.monotone_pseudo[float(y)] = _is_monotone(E[k])
    severe = [c for c in cells if c.zone is MismatchZone.SEVERE]
    if severe:
        s.severe_runtime_accept_fraction = sum(c.runtime_accept_pseudo for c in severe) / len(severe)
    s.symmetry = symmetry_report(grid)
    return s


# ---------------------------------------------------------------------------
# output formats
# ---------------------------------------------------------------------------

GRID_HEADER = [
    "x", "y", "zone", "err_pseudo_mm", "err_midpoint_mm", "eucl_pseudo_mm",
    "eucl_midpoint_mm", "pass_pseudo", "pass_midpoint", "degenerate",
]


def _num(v: float) -> str:
    return repr(float(v))


def write_grid_csv(grid: BenchGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_HEADER)
        for c in grid.cells:
            w.writerow(
                [
                    _num(c.x), _num(c.y), c.zone.value,
                    _num(c.err_pseudo), _num(c.err_midpoint),
                    _num(c.eucl_pseudo), _num(c.eucl_midpoint),
                    int(c.pass_pseudo), int(c.pass_midpoint), int(c.degenerate),
                ]
            )


def write_pgm(grid: BenchGrid, method: str, path) -> None:
    """Plain (P2) graymap of |error| clamped to [0, e_max]; first row is ymin."""
    E = np.abs(grid.array(f"err_{method}"))
    e_max = grid.config.e_max
    E = np.where(np.isfinite(E), np.minimum(E, e_max), e_max)
    G = np.rint(E / e_max * 255).astype(int)
    ny, nx = G.shape
    lines = ["P2", f"{nx} {ny}", "255"]
    lines += [" ".join(str(v) for v in row) for row in G]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# end-to-end scene simulation
# ---------------------------------------------------------------------------


@dataclass
class DepthReport:
    n_scene: int
    skipped: int
    points: list = field(default_factory=list)  # per triangulated pair
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def simulate_scene(
    scene,
    rig: RigidTransform,
    intrL,
    intrR,
    noise: PixelNoise | DirectionNoise | None = None,
    rng: np.random.Generator | None = None,
    tau: float = DEFAULT_TAU,
    far_depth: float = FAR_DEPTH_MM,
) -> DepthReport:
    """synthesize -> triangulate (pseudo) -> compare with ground truth.

    Depth is range from the left camera centre; points beyond ``far_depth``
    are flagged ``far`` but kept in the report.
    """
    scene = np.asarray(scene, dtype=float).reshape(-1, 3)
    ms = synthesize_matches(scene, rig, intrL, intrR, noise, rng)
    results = triangulate_matches(ms, intrL, intrR, rig, "pseudo", tau)
    rep = DepthReport(n_scene=len(scene), skipped=ms.skipped)
    errors = []
    for pair, truth, res in zip(ms.pairs, ms.truth, results):
        row = {
            "uL": pair.pixelL.u, "vL": pair.pixelL.v, "uR": pair.pixelR.u, "vR": pair.pixelR.v,
            "truth": [float(v) for v in truth],
        }
        if res is None:
            row.update(point=None, error_mm=None, depth_mm=None, far=False, accepted=False)
        else:
            err = float(np.linalg.norm(res.point - truth))
            depth = res.range
            errors.append(err)
            row.update(
                point=[float(v) for v in res.point],
                error_mm=err,
                depth_mm=depth,
                far=bool(depth > far_depth),
                accepted=res.accepted,
            )
        rep.points.append(row)
    rep.stats = {
        "n_triangulated": len(errors),
        "n_far": sum(1 for r in rep.points if r["far"]),
        "n_accepted": sum(1 for r in rep.points if r["accepted"]),
        "max_error_mm": max(errors) if errors else None,
        "mean_error_mm": statistics.fmean(errors) if errors else None,
        "median_error_mm": statistics.median(errors) if errors else None,
        "rmse_mm": math.sqrt(statistics.fmean(e * e for e in errors)) if errors else None,
    }
    return rep
