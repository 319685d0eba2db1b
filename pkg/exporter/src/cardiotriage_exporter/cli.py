"""Command-line wrapper: one-shot corpus-to-store export."""

from __future__ import annotations

import argparse
import sys

from .exporter import DEFAULT_MODEL, ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cardiotriage-export",
        description="Export [CLS] embeddings from a frozen clinical transformer "
        "into a CVDE store the triage pipeline can read.",
    )
    parser.add_argument("--input", required=True, metavar="PATH", help="JSONL corpus (id/text per line)")
    parser.add_argument("--output", required=True, metavar="PATH", help="output store file (.cvde)")
    parser.add_argument("--model", default=DEFAULT_MODEL, metavar="ID",
                        help=f"checkpoint id or local path (default: {DEFAULT_MODEL})")
    parser.add_argument("--max-len", type=int, default=128, metavar="N",
                        help="token truncation length (default: 128)")
    parser.add_argument("--batch-size", type=int, default=8, metavar="N",
                        help="inference batch size; output bytes do not depend on it for a fixed value")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            input_path=args.input,
            output_path=args.output,
            model=args.model,
            max_len=args.max_len,
            batch_size=args.batch_size,
        )
        manifest = export(job)
    except (ExportError, ValueError, OSError) as exc:
        print(f"cardiotriage-export: error: {exc}", file=sys.stderr)
        return 1
    print(f"exported={manifest['count']} dim={manifest['dim']} model={manifest['model']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
