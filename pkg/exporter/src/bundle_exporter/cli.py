"""Command line: export one model's quantized weights into a bundle directory.

Exit codes: 0 success, 1 invalid request or unquantized model, 3 checkpoint
download/read failure.
"""

from __future__ import annotations

import argparse
import sys

from .cnn import CNN_ZOO, export_cnn
from .format import ExportError
from .llm import export_llm_layers

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 3

CNN_FILTERS = ("all", "conv", "fc")
LLM_FILTERS = ("all", "attention-fc", "ffn", "qk-tokens")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bundle-export", description=__doc__)
    parser.add_argument(
        "--model", required=True,
        help="a CNN zoo name (%s) or an LLM checkpoint id containing '/'"
             % ", ".join(sorted(CNN_ZOO)),
    )
    parser.add_argument("--layers", default="all",
                        help="conv | fc for CNNs; attention-fc | ffn | qk-tokens for LLMs")
    parser.add_argument("--out", required=True, help="bundle directory to write")
    parser.add_argument("--block", type=int, default=0,
                        help="decoder block to export from an LLM (-1 for all)")
    parser.add_argument("--qk-input", help="text prompt for Q/K token capture")
    return parser


def _export_llm(args) -> None:
    qk_input = None
    layers = args.layers
    if args.layers == "qk-tokens" or args.qk_input is not None:
        from transformers import AutoTokenizer

        text = args.qk_input or "the quick brown fox"
        tokenizer = AutoTokenizer.from_pretrained(args.model)
        qk_input = tokenizer(text, return_tensors="pt").input_ids
        if args.layers == "qk-tokens":
            layers = "all"
    export_llm_layers(
        args.model, args.out, layers=layers,
        block=None if args.block < 0 else args.block, qk_input=qk_input,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    is_llm = "/" in args.model
    valid = LLM_FILTERS if is_llm else CNN_FILTERS
    if args.layers not in valid:
        sys.stderr.write(
            f"error: --layers {args.layers!r} does not apply; expected one of {valid}\n"
        )
        return EXIT_USAGE
    try:
        if is_llm:
            _export_llm(args)
        else:
            export_cnn(args.model, args.out, layers=args.layers)
    except ExportError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (OSError, RuntimeError, ValueError) as exc:
        # hub download failures surface as OSError/RuntimeError from the
        # framework loaders; treat them as I/O, not usage
        sys.stderr.write(f"error: could not load {args.model!r}: {exc}\n")
        return EXIT_IO
    print(f"wrote bundle to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
