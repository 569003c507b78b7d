"""Command line entry point: ``hybrid-dof render`` and ``hybrid-dof compare``."""

import argparse
import csv
import os
import sys

from .config import MODES, ConfigError, load_config
from .imageio import read_image, read_pgm
from .metrics import compare
from .pipeline import run
from .scene import SceneError

OUT_ENV = "HYBRID_DOF_OUT"


def _render(args):
    cfg = load_config(args.config)
    cfg = cfg.with_overrides(mode=args.mode, frames=args.frames, seed=args.seed,
                             workers=args.workers)
    out = args.out or os.environ.get(OUT_ENV) or cfg.out_dir
    stats = run(cfg, out_dir=out, dump_dir=args.dump_intermediates)
    rays = sum(s.rays_traced for s in stats)
    print(f"rendered {len(stats)} frame(s) in mode {cfg.mode} to {out} ({rays} rays)")
    return 0


def _compare(args):
    a = read_image(args.a)
    b = read_image(args.b)
    region = None
    if args.region:
        region = read_pgm(args.region) > 0
        if region.shape != a.shape[:2]:
            raise ValueError(f"region mask {region.shape} does not match image {a.shape[:2]}")
    m = compare(a, b, region)
    if args.csv:
        w = csv.writer(sys.stdout)
        w.writerow(["mse", "psnr", "ssim"])
        w.writerow([f"{m['mse']:.8g}", f"{m['psnr']:.4f}", f"{m['ssim']:.6f}"])
    else:
        print(f"MSE  {m['mse']:.8g}")
        print(f"PSNR {m['psnr']:.4f} dB")
        print(f"SSIM {m['ssim']:.6f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="hybrid-dof",
                                     description="Hybrid ray-traced / post-process depth of field")
    sub = parser.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render frames from a JSON config")
    r.add_argument("config")
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--frames", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--workers", type=int)
    r.add_argument("--dump-intermediates", metavar="DIR")
    r.add_argument("--out", metavar="DIR")
    r.set_defaults(func=_render)

    c = sub.add_parser("compare", help="MSE / PSNR / SSIM between two images")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--region", metavar="MASK.pgm")
    c.add_argument("--csv", action="store_true")
    c.set_defaults(func=_compare)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SceneError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

