"""Command-line driver.

Exit codes: 0 success, 2 bad input, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import load_config
from .data_io import list_frames, read_frame, write_mask
from .exceptions import NumericalError
from .masks import PATTERNS, MaskSpec, gen_mask
from .metrics import psnr, subspace_diagnostic, write_diagnostic_csv
from .runner import run_image, run_video

EXIT_OK, EXIT_BAD_INPUT, EXIT_NUMERIC = 0, 2, 3

# (flag, config field, type)
CONFIG_FLAGS = [
    ("--patch-size", "patch_size", int),
    ("--overlap", "overlap", int),
    ("--border", "border", int),
    ("--interval-s", "interval", int),
    ("--search-size", "search_size", int),
    ("--k-new", "k_new", int),
    ("--k-track", "k_track", int),
    ("--tau-f", "tau_f", float),
    ("--tau-c", "tau_c", float),
    ("--gamma", "gamma", float),
    ("--max-iter", "max_iter", int),
    ("--tol", "tol", float),
    ("--c1", "C1", float),
    ("--c2", "C2", float),
    ("--r-o", "r_o", int),
    ("--rank-max", "rank_max", int),
    ("--threads", "threads", int),
]


def _add_config_flags(p):
    p.add_argument("--config", type=Path, help="flat key = value configuration file")
    g = p.add_argument_group("pipeline parameters (override the config file)")
    for flag, dest, typ in CONFIG_FLAGS:
        g.add_argument(flag, dest=dest, type=typ, default=None)


def _add_mask_flags(p, seed_help="seed for mask generation and core initialisation"):
    p.add_argument("--mask-pattern", choices=PATTERNS, default="random-pixel")
    p.add_argument("--p", type=float, default=0.2, help="observation ratio")
    p.add_argument("--seed", type=int, default=None, help=seed_help)


def _mask_spec(args):
    return MaskSpec(pattern=args.mask_pattern, p=args.p, seed=args.seed or 0)


def _config(args):
    overrides = {dest: getattr(args, dest) for _, dest, _ in CONFIG_FLAGS}
    overrides["seed"] = args.seed
    return load_config(args.config, **overrides)


def cmd_complete_video(args):
    cfg = _config(args)
    report = run_video(args.input, args.out, cfg, mask_spec=_mask_spec(args), mask_dir=args.mask_dir)
    print(f"{len(report)} frames, mean PSNR {report.mean_psnr:.2f} dB -> {Path(args.out) / 'report.csv'}")


def cmd_complete_image(args):
    cfg = _config(args)
    report = run_image(args.input, args.out, cfg, mask_spec=_mask_spec(args), mask_path=args.mask)
    print(f"PSNR {report.mean_psnr:.2f} dB -> {args.out}")


def cmd_gen_mask(args):
    if args.like is not None:
        like = Path(args.like)
        files = list_frames(like) if like.is_dir() else [like]
        h, w, n = read_frame(files[0]).shape
        shape, names = (h, w, n, len(files)), [f.stem for f in files]
    else:
        if not args.shape:
            raise ValueError("give --shape H W [n [T]] or --like PATH")
        shape = tuple(args.shape)
        if len(shape) == 2:
            shape = shape + (1,)
        if len(shape) == 3:
            shape = shape + (1,)
        names = [f"mask_{t:04d}" for t in range(shape[3])]
    mask = gen_mask(shape, _mask_spec(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t, name in enumerate(names):
        write_mask(out / f"{name}.pgm", mask[..., t])
    print(f"wrote {len(names)} mask(s), observed fraction {mask.mean():.4f} -> {out}")


def _load_any(path):
    path = Path(path)
    if path.is_dir():
        return np.stack([read_frame(f) for f in list_frames(path)], axis=-1)
    if not path.exists():
        raise FileNotFoundError(f"{path} does not exist")
    return read_frame(path)


def cmd_psnr(args):
    ref, test = _load_any(args.reference), _load_any(args.test)
    if ref.shape != test.shape:
        raise ValueError(f"shape mismatch: {ref.shape} vs {test.shape}")
    if ref.ndim == 4:
        values = [psnr(ref[..., t], test[..., t]) for t in range(ref.shape[-1])]
        for t, v in enumerate(values):
            print(f"{t},{v!r}")
        print(f"mean,{float(np.mean(values))!r}")
    else:
        print(repr(psnr(ref, test)))


def cmd_diagnose(args):
    stack = _load_any(args.input)
    if stack.ndim != 4:
        raise ValueError("diagnose-subspace needs a directory of frames")
    if args.patch:
        r, c, m = args.patch
        stack = stack[r:r + m, c:c + m]
    values = subspace_diagnostic(stack)
    if args.out:
        write_diagnostic_csv(values, args.out)
    else:
        print("index,normalized_singular_value")
        for i, v in enumerate(values, start=1):
            print(f"{i},{float(v)!r}")


def build_parser():
    parser = argparse.ArgumentParser(prog="trcomplete",
                                     description="Tensor-ring completion of images and video.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("complete-video", help="complete a directory of frames as a stream")
    p.add_argument("input", type=Path, help="directory of PGM/PPM/PNG frames (ground truth)")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mask-dir", type=Path, help="per-frame masks instead of a generated pattern")
    _add_mask_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_complete_video)

    p = sub.add_parser("complete-image", help="complete a single image")
    p.add_argument("input", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mask", type=Path, help="mask image instead of a generated pattern")
    _add_mask_flags(p)
    _add_config_flags(p)
    p.set_defaults(func=cmd_complete_image)

    p = sub.add_parser("gen-mask", help="write observation masks")
    p.add_argument("--shape", type=int, nargs="+", metavar="N")
    p.add_argument("--like", type=Path, help="frame file or directory to take the geometry from")
    p.add_argument("--out", type=Path, required=True)
    _add_mask_flags(p, seed_help="random seed")
    p.set_defaults(func=cmd_gen_mask)

    p = sub.add_parser("psnr", help="PSNR between two images or frame directories")
    p.add_argument("reference", type=Path)
    p.add_argument("test", type=Path)
    p.set_defaults(func=cmd_psnr)

    p = sub.add_parser("diagnose-subspace",
                       help="normalized singular values of the temporal unfolding")
    p.add_argument("input", type=Path, help="directory of frames")
    p.add_argument("--patch", type=int, nargs=3, metavar=("ROW", "COL", "SIZE"),
                   help="restrict to a fixed patch (tube)")
    p.add_argument("--out", type=Path, help="CSV output (stdout when omitted)")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_BAD_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
