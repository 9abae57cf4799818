"""score-headlines command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .backends import BUILTIN, ModelLoadError
from .scorer import DEFAULT_BATCH_SIZE, InputError, score_headlines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="score-headlines",
        description="Score line-delimited {id,headline} records with a binary "
                    "sentiment classifier, emitting {id,label,prob} records.",
    )
    parser.add_argument("--in", dest="input_path", required=True, help="input headlines file")
    parser.add_argument("--out", dest="output_path", required=True, help="output scores file")
    parser.add_argument("--batch", type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument("--model", default=BUILTIN,
                        help=f'"{BUILTIN}" or a HuggingFace model id/path')
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        count = score_headlines(args.input_path, args.output_path, args.batch, args.model)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ModelLoadError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 3
    print(f"scored {count} headlines -> {args.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
