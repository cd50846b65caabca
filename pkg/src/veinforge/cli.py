"""Command-line entry point.

    veinforge <synth|enhance|extract|train|evaluate|verify>
              [--config <path>] [--key=value ...]

Any --key=value after the recognized flags overrides that config key.
Exit codes: 0 success (or ACCEPT), 2 REJECT, 1 any error.
"""

from __future__ import annotations

import argparse
import sys

from .config import apply_overrides, default_config, load_config
from .errors import VeinforgeError
from .pipeline import (
    cmd_enhance,
    cmd_evaluate,
    cmd_extract,
    cmd_synth,
    cmd_train,
    cmd_verify,
)
from .report import render_summary

COMMANDS = ("synth", "enhance", "extract", "train", "evaluate", "verify")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veinforge",
        description="finger-vein verification pipeline: generate, enhance, "
        "extract, train, evaluate, verify",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="config file; defaults apply when omitted")
        if name == "verify":
            p.add_argument("--probe", required=True, help="probe image path")
            p.add_argument("--claim", required=True, help="claimed class label")
    return parser


def main(argv: list[str] | None = None) -> int:
    args, extras = _build_parser().parse_known_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        apply_overrides(cfg, extras)

        if args.command == "synth":
            manifest = cmd_synth(cfg)
            print(f"wrote {len(manifest.records)} images under {manifest.base_dir}")
        elif args.command == "enhance":
            manifest = cmd_enhance(cfg)
            print(f"enhanced {len(manifest.records)} images under {manifest.base_dir}")
        elif args.command == "extract":
            path = cmd_extract(cfg)
            print(f"wrote {path}")
        elif args.command == "train":
            forest, result = cmd_train(cfg)
            print(
                f"trained {forest.params.n_trees} trees on {len(result.train)} "
                f"samples ({len(forest.class_labels)} classes), "
                f"{len(result.test)} held out"
            )
        elif args.command == "evaluate":
            report = cmd_evaluate(cfg)
            print(render_summary(report), end="")
        else:
            accepted, line = cmd_verify(cfg, args.probe, args.claim)
            print(line)
            return 0 if accepted else 2
    except (VeinforgeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
