"""Command-line driver: ``grafcet-analyzer check|analyze FILE``.

Exit codes: 0 no findings, 1 diagnostics reported, 2 concurrency gate failed,
3 parse or model error, 4 internal limit (iteration budget) exceeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..analysis import IterationLimitError
from ..analysis.interpret import DEFAULT_MAX_VISITS, DEFAULT_WIDEN_DELAY
from ..model import errors_only, validate
from .parser import GrafcetParseError, parse
from .report import build_report, emit_report

EXIT_OK = 0
EXIT_DIAGNOSTICS = 1
EXIT_GATE = 2
EXIT_MODEL = 3
EXIT_LIMIT = 4


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must not be negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="grafcet-analyzer",
        description="Concurrency gate and interval analysis for GRAFCET specifications.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="GRAFCET text file")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--partial", metavar="NAME", help="restrict to one partial Grafcet")
    sub.add_parser("check", parents=[common], help="parse, validate and run the concurrency gate")
    an = sub.add_parser("analyze", parents=[common], help="full pipeline including interval analysis")
    an.add_argument("--allow-unsound", action="store_true", help="analyze partials that fail the gate")
    an.add_argument("--widen-delay", type=_non_negative, default=DEFAULT_WIDEN_DELAY, metavar="N")
    an.add_argument("--no-narrow", action="store_true", help="skip the narrowing pass")
    an.add_argument("--max-visits", type=_positive, default=DEFAULT_MAX_VISITS, metavar="N")
    an.add_argument("--jobs", type=_positive, default=1, metavar="N", help="analyze partials in parallel")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    path = Path(args.file)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as err:
        print(f"{path}: cannot read: {err}", file=sys.stderr)
        return EXIT_MODEL
    try:
        g = parse(text, str(path))
    except GrafcetParseError as err:
        for e in err.errors:
            print(e, file=sys.stderr)
        return EXIT_MODEL
    problems = validate(g)
    errors = errors_only(problems)
    if errors:
        for e in errors:
            print(f"{path}: model error: {e.rule} {e.element}: {e.message}", file=sys.stderr)
        return EXIT_MODEL
    if args.partial is not None and args.partial not in {p.name for p in g.partials}:
        print(f"{path}: no partial Grafcet named {args.partial!r}", file=sys.stderr)
        return EXIT_MODEL

    warnings = [w for w in problems if w.warning]
    analyze = args.command == "analyze"
    options = {}
    if analyze:
        options = dict(widen_delay=args.widen_delay, narrow=not args.no_narrow, max_visits=args.max_visits)
    try:
        report = build_report(
            g,
            str(path),
            analyze=analyze,
            only=args.partial,
            allow_unsound=analyze and args.allow_unsound,
            jobs=args.jobs if analyze else 1,
            warnings=warnings,
            **options,
        )
    except IterationLimitError as err:
        print(f"{path}: {err}", file=sys.stderr)
        return EXIT_LIMIT
    sys.stdout.write(emit_report(report, args.format))
    if not report.gate_passed:
        return EXIT_GATE
    if report.diagnostic_count:
        return EXIT_DIAGNOSTICS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
