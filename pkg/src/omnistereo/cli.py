"""omnistereo command line: calibrate, triangulate, zones, bench, simulate.

Exit codes: 0 success, 2 bad input or flags, 3 optimisation failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import calibration, fov_zones, simbench
from .camera_model import load_intrinsics
from .errors import DivergedOptimization, OmniStereoError
from .geometry import load_rig
from .matching_io import DirectionNoise, PixelNoise, load_matches, load_scene
from .pipeline import triangulate_matches

log = logging.getLogger("omnistereo")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_OPTIM = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def thread_count() -> int:
    raw = os.environ.get("OMNISTEREO_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, allow_nan=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _require_files(*paths):
    for p in paths:
        if p is not None and not Path(p).is_file():
            raise FileNotFoundError(f"no such file: {p}")


def cmd_calibrate(args) -> int:
    _require_files(args.left, args.right, args.corners)
    intrL = load_intrinsics(args.left)
    intrR = load_intrinsics(args.right)
    spec = calibration.ChessboardSpec(args.rows, args.cols, args.square_size)
    views = calibration.load_corners(args.corners, spec)
    cal = calibration.calibrate_extrinsics(views, intrL, intrR, spec)
    _dump_json(cal.to_dict(), args.out)
    return EXIT_OK


def cmd_triangulate(args) -> int:
    _require_files(args.left, args.right, args.rig, args.matches)
    intrL = load_intrinsics(args.left)
    intrR = load_intrinsics(args.right)
    rig = load_rig(args.rig)
    image_size = tuple(args.image_size) if args.image_size else None
    ms = load_matches(args.matches, image_size, intrL, intrR)
    results = triangulate_matches(ms, intrL, intrR, rig, "pseudo", args.tau)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", newline="")
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["uL", "vL", "uR", "vR", "X", "Y", "Z", "skew_mm", "accepted"])
        for pair, res in zip(ms.pairs, results):
            pix = [repr(pair.pixelL.u), repr(pair.pixelL.v), repr(pair.pixelR.u), repr(pair.pixelR.v)]
            if res is None:
                w.writerow(pix + ["nan"] * 4 + [0])
            else:
                w.writerow(pix + [repr(float(v)) for v in res.point] + [repr(res.skew_distance), int(res.accepted)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_zones(args) -> int:
    if args.preset:
        if args.O is not None:
            raise ValueError("--preset and --O are mutually exclusive")
        mode = fov_zones.preset(args.preset, args.H if args.H is not None else fov_zones.DEFAULT_H)
    else:
        if args.O is None:
            raise ValueError("give --preset or --O (with optional --H)")
        H = args.H if args.H is not None else fov_zones.DEFAULT_H
        mode = fov_zones.VisionMode("custom", H, args.O)
    _dump_json(mode.to_dict(), args.out)
    return EXIT_OK


def _bench_config(args) -> simbench.BenchConfig:
    return simbench.BenchConfig(
        xmin=args.xmin, xmax=args.xmax, ymin=args.ymin, ymax=args.ymax,
        step=args.step, e_max=args.e_max,
    )


def cmd_bench(args) -> int:
    cfg = _bench_config(args)
    grid = simbench.run_noise_grid(cfg, threads=thread_count())
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    simbench.write_grid_csv(grid, out_dir / "grid.csv")
    _dump_json(simbench.summarize(grid).to_dict(), out_dir / "summary.json")
    if args.heatmaps:
        for method in ("pseudo", "midpoint"):
            simbench.write_pgm(grid, method, out_dir / f"heatmap_{method}.pgm")
    return EXIT_OK


def cmd_simulate(args) -> int:
    _require_files(args.scene, args.rig, args.left, args.right)
    intrL = load_intrinsics(args.left)
    intrR = load_intrinsics(args.right)
    rig = load_rig(args.rig)
    scene = load_scene(args.scene)
    if args.pixel_sigma and (args.noise_x or args.noise_y):
        raise ValueError("choose pixel noise or direction noise, not both")
    noise = None
    if args.pixel_sigma:
        noise = PixelNoise(args.pixel_sigma)
    elif args.noise_x or args.noise_y:
        noise = DirectionNoise(args.noise_x, args.noise_y)
    rng = np.random.default_rng(args.seed)
    rep = simbench.simulate_scene(scene, rig, intrL, intrR, noise, rng, tau=args.tau)
    _dump_json(rep.to_dict(), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="omnistereo", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("calibrate", help="stereo extrinsics from chessboard corners")
    c.add_argument("--left", required=True, help="left intrinsics JSON")
    c.add_argument("--right", required=True, help="right intrinsics JSON")
    c.add_argument("--corners", required=True, help="corner CSV (view,camera,i,j,u,v)")
    c.add_argument("--rows", type=int, required=True)
    c.add_argument("--cols", type=int, required=True)
    c.add_argument("--square-size", type=float, required=True, help="mm")
    c.add_argument("--out", default="-")
    c.set_defaults(func=cmd_calibrate)

    t = sub.add_parser("triangulate", help="point cloud from matched pixel pairs")
    t.add_argument("--left", required=True)
    t.add_argument("--right", required=True)
    t.add_argument("--rig", required=True, help="rig JSON (left->right rotation, translation)")
    t.add_argument("--matches", required=True, help="match CSV (uL,vL,uR,vR[,confidence])")
    t.add_argument("--image-size", type=float, nargs=2, metavar=("W", "H"))
    t.add_argument("--tau", type=float, default=simbench.DEFAULT_TAU)
    t.add_argument("--out", default="-")
    t.set_defaults(func=cmd_triangulate)

    z = sub.add_parser("zones", help="stereo/monocular/blind field angles")
    z.add_argument("--preset", choices=sorted(fov_zones.PRESET_OVERLAP))
    z.add_argument("--H", type=float, help="camera horizontal FOV, degrees (default 196)")
    z.add_argument("--O", type=float, help="overlap angle, degrees")
    z.add_argument("--out", default="-")
    z.set_defaults(func=cmd_zones)

    b = sub.add_parser("bench", help="noise-grid error study")
    d = simbench.BenchConfig()
    b.add_argument("--xmin", type=float, default=d.xmin)
    b.add_argument("--xmax", type=float, default=d.xmax)
    b.add_argument("--ymin", type=float, default=d.ymin)
    b.add_argument("--ymax", type=float, default=d.ymax)
    b.add_argument("--step", type=float, default=d.step)
    b.add_argument("--e-max", type=float, default=d.e_max, help="filter bound, mm")
    b.add_argument("--heatmaps", action="store_true", help="also write P2 graymaps")
    b.add_argument("--out-dir", default="bench_out")
    b.set_defaults(func=cmd_bench)

    s = sub.add_parser("simulate", help="synthetic scene through the full pipeline")
    s.add_argument("--scene", required=True, help="scene CSV (x,y,z) in the left frame, mm")
    s.add_argument("--rig", required=True)
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    s.add_argument("--pixel-sigma", type=float, default=0.0)
    s.add_argument("--noise-x", type=float, default=0.0)
    s.add_argument("--noise-y", type=float, default=0.0)
    s.add_argument("--tau", type=float, default=simbench.DEFAULT_TAU)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except DivergedOptimization as exc:
        print(f"omnistereo {args.command}: optimisation failed: {exc}", file=sys.stderr)
        return EXIT_OPTIM
    except (OmniStereoError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"omnistereo {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
