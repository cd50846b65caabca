"""fvexport command line: one job per invocation."""

from __future__ import annotations

import argparse
import sys

from .errors import ExportError
from .export import MODELS, ExportJob, export_embeddings


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fvexport",
        description="Export CNN embeddings for every manifest image as an FVF1 feature file.",
    )
    parser.add_argument("--manifest", required=True, help="dataset manifest CSV")
    parser.add_argument("--model", required=True, choices=MODELS)
    parser.add_argument("--out", required=True, help="output FVF1 path")
    parser.add_argument("--size", type=int, default=256, help="square input size (default 256)")
    parser.add_argument("--batch", type=int, default=16, help="inference batch size")
    parser.add_argument(
        "--weights",
        default="imagenet",
        help="'imagenet' (cached pretrained weights) or 'random:<seed>' (untrained, for plumbing tests)",
    )
    args = parser.parse_args(argv)
    try:
        job = ExportJob(
            manifest=args.manifest,
            model=args.model,
            out=args.out,
            size=args.size,
            batch_size=args.batch,
            weights=args.weights,
        )
        dimension = export_embeddings(job)
    except (ExportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out} ({args.model}, dimension {dimension})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
