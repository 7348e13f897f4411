"""Command-line entry point: ``dctlm {train,eval,count-params,inspect,codec-selftest}``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import checkpoint, codec, kernels
from .config import ConfigError, load_config
from .data import load_corpus
from .model import count_params, fast_param_count


def human(n: int) -> str:
    if n >= 1_000_000:
        return f"{n / 1e6:.1f}M"
    if n >= 1_000:
        return f"{n / 1e3:.0f}K"
    return str(n)


def cmd_train(args) -> int:
    from .train import train

    cfg = load_config(args.config)
    if args.run_dir:
        cfg.run.dir = args.run_dir
    result = train(cfg, resume=args.resume)
    print(f"step {result.step}: train {result.train_bpc:.4f} bpc, "
          f"valid {result.valid_bpc:.4f} bpc, best {result.best_valid_bpc:.4f}")
    print(f"metrics: {result.log_path}")
    return 0


def cmd_eval(args) -> int:
    from .train import evaluate, load_model

    _, meta, cfg = load_model(args.checkpoint)
    corpus = load_corpus(args.data, cfg.data.split, cfg.data.limit or None)
    bpc = evaluate(args.checkpoint, corpus, args.split, max_chars=args.max_chars)
    print(f"{args.split} bpc {bpc:.4f}")
    return 0


def cmd_count_params(args) -> int:
    cfg = load_config(args.config)
    spec = cfg.model_spec(args.vocab)
    total = count_params(spec)
    print(f"params {total} ({human(total)})")
    if spec.is_fast:
        print(f"fast params {fast_param_count(spec)}")
    return 0


def cmd_inspect(args) -> int:
    tensors, _, meta = checkpoint.load(args.checkpoint)
    if args.tensor not in tensors:
        print(f"no tensor named {args.tensor!r}; available:", file=sys.stderr)
        for name in sorted(tensors):
            print(f"  {name} {list(tensors[name].shape)}", file=sys.stderr)
        return 2
    arr = tensors[args.tensor]
    info = meta.get(args.tensor)
    if args.decompress:
        if not info or "c" not in info:
            print(f"{args.tensor} is not a coefficient vector", file=sys.stderr)
            return 2
        plan = codec.make_plan(info["n"], info["m"], info["c"], info["corner"])
        arr = codec.decompress_array(arr.astype(np.float64), plan)
    if info:
        print(" ".join(f"{k}={v}" for k, v in sorted(info.items())))
    print(f"shape {list(arr.shape)}")
    with np.printoptions(threshold=args.max_items, precision=6, suppress=True):
        print(arr)
    return 0


def cmd_codec_selftest(args) -> int:
    ok = True
    for name, passed, err in codec.selftest():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name:<24} max err {err:.3e}")
    print(f"kernel backend: {kernels.BACKEND}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dctlm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--resume", metavar="CKPT")
    p.add_argument("--run-dir", help="override run.dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="bits per character of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", choices=("train", "valid", "test"), default="valid")
    p.add_argument("--max-chars", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("count-params", help="exact trainable parameter count")
    p.add_argument("--config", required=True)
    p.add_argument("--vocab", type=int, default=205)
    p.set_defaults(func=cmd_count_params)

    p = sub.add_parser("inspect", help="print a stored tensor")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--decompress", action="store_true",
                   help="print the dense matrix of a coefficient vector")
    p.add_argument("--max-items", type=int, default=200)
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("codec-selftest", help="run the DCT codec invariants")
    p.set_defaults(func=cmd_codec_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, checkpoint.CheckpointError, ValueError, OSError) as exc:
        print(f"dctlm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
