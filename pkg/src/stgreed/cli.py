"""Command-line interface: features, score, train, eval, histdump."""

import argparse
import json
import os
import sys

import numpy as np

from . import evaluate, svr
from .bandpass import build_packet_filters, temporal_filter
from .features import (GreedConfig, append_cache_record, compute_features,
                       read_cache)
from .video import VideoFormatError, downsample, load_raw_yuv, load_y4m


class FingerprintMismatch(Exception):
    pass


def _add_config_args(p):
    p.add_argument("--wavelet", default="bior2.2", choices=["haar", "db2", "bior2.2"],
                   help="temporal wavelet filter")
    p.add_argument("--scales", default="4,5",
                   help="comma-separated spatial downsampling exponents")
    p.add_argument("--noise-var", type=float, default=0.1,
                   help="neural noise variance")
    p.add_argument("--patch", type=int, default=5, help="patch size in pixels")
    p.add_argument("--levels", type=int, default=3,
                   help="wavelet packet decomposition depth")


def _add_video_args(p):
    p.add_argument("--width", type=int, help="frame width (raw YUV inputs only)")
    p.add_argument("--height", type=int, help="frame height (raw YUV inputs only)")
    p.add_argument("--fps", help="frame rate, e.g. 120 or 30000/1001 (raw YUV inputs only)")
    p.add_argument("--pixel-format", default="yuv420p",
                   choices=["yuv420p", "yuv420p10le"],
                   help="raw YUV pixel format")


def _config(args):
    scales = tuple(int(s) for s in args.scales.split(","))
    return GreedConfig(wavelet=args.wavelet, scales=scales,
                       noise_var=args.noise_var, patch_size=args.patch,
                       levels=args.levels)


def _load_video(path, args, fps_override=None):
    if not os.path.exists(path):
        raise VideoFormatError(f"input file does not exist: {path}")
    if path.endswith(".y4m"):
        v = load_y4m(path)
        return v
    if args.width is None or args.height is None or (args.fps is None and fps_override is None):
        raise VideoFormatError(
            f"{path}: raw YUV input needs --width, --height and --fps")
    return load_raw_yuv(path, args.width, args.height,
                        fps_override or args.fps, args.pixel_format)


def _cache_path(arg_value):
    if arg_value:
        return arg_value
    cache_dir = os.environ.get("GREED_CACHE_DIR", ".")
    return os.path.join(cache_dir, "greed_features.jsonl")


def cmd_features(args):
    cfg = _config(args)
    ref = _load_video(args.ref, args)
    dist = _load_video(args.dist, args, fps_override=args.dist_fps)
    feats = compute_features(ref, dist, cfg, jobs=args.jobs)
    if args.format == "csv":
        print(",".join(repr(float(v)) for v in feats.values))
    else:
        print(f"# config {cfg.fingerprint()}")
        for v in feats.values:
            print(repr(float(v)))
    if args.cache:
        append_cache_record(args.cache, args.ref, args.dist,
                            args.content_id or args.ref, feats)
    return 0


def cmd_score(args):
    cfg = _config(args)
    model = svr.load_model(args.model)
    if model.fingerprint and model.fingerprint != cfg.fingerprint():
        raise FingerprintMismatch(
            f"model was trained with config {model.fingerprint}, "
            f"current config is {cfg.fingerprint()}")
    ref = _load_video(args.ref, args)
    dist = _load_video(args.dist, args, fps_override=args.dist_fps)
    feats = compute_features(ref, dist, cfg, jobs=args.jobs)
    print(repr(svr.predict(model, feats.values)))
    return 0


def _load_dataset(args, cfg):
    rows = evaluate.read_manifest(args.manifest)
    features = read_cache(args.cache, fingerprint=cfg.fingerprint())
    missing = [(r.ref, r.dist) for r in rows if (r.ref, r.dist) not in features]
    if missing:
        listing = "\n".join(f"  {ref} / {dist}" for ref, dist in missing)
        raise ValueError(f"cache is missing features for {len(missing)} pairs:\n{listing}")
    return rows, features


def cmd_train(args):
    cfg = _config(args)
    rows, features = _load_dataset(args, cfg)
    contents = sorted({r.content_id for r in rows})
    if len(contents) < 3:
        raise ValueError("need at least 3 contents to tune hyperparameters")
    rng = np.random.default_rng([args.seed, 0])
    train, val, test = evaluate.split_contents(contents, rng)
    train = train | test  # internal split only needs train/val
    X_tr, y_tr = evaluate._gather(rows, features, train)
    X_val, y_val = evaluate._gather(rows, features, val)
    hp = svr.grid_search((X_tr, y_tr), (X_val, y_val))
    X_all, y_all = evaluate._gather(rows, features, set(contents))
    model = svr.train_svr(X_all, y_all, hp, fingerprint=cfg.fingerprint())
    svr.save_model(model, args.out)
    print(f"trained on {len(y_all)} rows, hyperparams C={hp[0]} eps={hp[1]} gamma={hp[2]}")
    print(f"model written to {args.out}")
    return 0


def cmd_eval(args):
    cfg = _config(args)
    rows, features = _load_dataset(args, cfg)
    report = evaluate.run_protocol(rows, features, trials=args.trials, seed=args.seed)
    for name in ("srocc", "krocc", "plcc", "rmse"):
        value = getattr(report, name)
        print(f"{name.upper()}\t{'n/a' if value is None else f'{value:.4f}'}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump({"median": {n: getattr(report, n) for n in
                                  ("srocc", "krocc", "plcc", "rmse")},
                       "n_trials": report.n_trials,
                       "per_trial": report.per_trial}, f, indent=1)
        print(f"report written to {args.json}")
    return 0


def cmd_histdump(args):
    video = _load_video(args.input, args)
    video = downsample(video, args.scale)
    bank = build_packet_filters(args.wavelet, args.levels)
    if not 1 <= args.band <= bank.num_bands:
        raise ValueError(f"band must be in [1, {bank.num_bands}]")
    stack = temporal_filter(video, bank.filters[args.band - 1], args.band - 1)
    centers, density = evaluate.dump_histogram(stack, args.bins)
    sys.stdout.write(evaluate.format_histogram(centers, density))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="greed",
        description="Entropic-difference video quality assessment for videos "
                    "of possibly differing frame rates.")
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("features", formatter_class=fmt,
                       help="compute the 16-D feature vector for a video pair")
    p.add_argument("ref")
    p.add_argument("dist")
    p.add_argument("--dist-fps", help="frame rate of the distorted video (raw input)")
    p.add_argument("--jobs", type=int, default=1, help="worker count")
    p.add_argument("--format", default="text", choices=["text", "csv"])
    p.add_argument("--cache", help="append the result to this feature cache file")
    p.add_argument("--content-id", help="content id recorded in the cache")
    _add_config_args(p)
    _add_video_args(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("score", formatter_class=fmt,
                       help="score a video pair with a trained model")
    p.add_argument("ref")
    p.add_argument("dist")
    p.add_argument("--model", required=True)
    p.add_argument("--dist-fps", help="frame rate of the distorted video (raw input)")
    p.add_argument("--jobs", type=int, default=1, help="worker count")
    _add_config_args(p)
    _add_video_args(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("train", formatter_class=fmt,
                       help="train a regressor from a manifest and feature cache")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_config_args(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", formatter_class=fmt,
                       help="run the randomized split evaluation protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--cache", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write a machine-readable report here")
    _add_config_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("histdump", formatter_class=fmt,
                       help="dump a subband coefficient histogram as text")
    p.add_argument("input")
    p.add_argument("--band", type=int, default=4, help="subband index (1-based)")
    p.add_argument("--scale", type=int, default=4, help="spatial scale exponent")
    p.add_argument("--bins", type=int, default=101)
    p.add_argument("--wavelet", default="bior2.2", choices=["haar", "db2", "bior2.2"])
    p.add_argument("--levels", type=int, default=3)
    _add_video_args(p)
    p.set_defaults(func=cmd_histdump)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FingerprintMismatch as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (VideoFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
