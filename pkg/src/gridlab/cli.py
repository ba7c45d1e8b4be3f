"""``gridlab run | diff | analyze``.

Exit codes: 0 all green, 1 assertion failure or divergence, 2 input error.
"""

from __future__ import annotations

import argparse
import sys

from . import analysis, replay
from .depgraph import DepGraph
from .engine import Engine, PolicyProfile, shipped_profiles
from .errors import GridlabError, InputError
from .grid import parse_sheet_text

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridlab", description="Spreadsheet semantics lab.")
    sub = p.add_subparsers(dest="command", required=True)
    profiles = ", ".join(shipped_profiles())

    r = sub.add_parser("run", help="replay a script under one profile")
    r.add_argument("--sheet", required=True)
    r.add_argument("--script")
    r.add_argument("--profile", default="excel", help=f"profile file or one of: {profiles}")
    r.add_argument("--out")

    d = sub.add_parser("diff", help="replay a script under two profiles and compare")
    d.add_argument("--sheet", required=True)
    d.add_argument("--script")
    d.add_argument("--profile", action="append", required=True, help="given exactly twice")
    d.add_argument("--out")

    a = sub.add_parser("analyze", help="screen depth, spotlights and deviation score")
    a.add_argument("--sheet", required=True)
    a.add_argument("--order", choices=("row", "col"), default="row")
    a.add_argument("--dot", nargs="?", const="-", help="write the DDG as DOT (to a file, or stdout)")
    a.add_argument("--out")
    return p


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _analyze(args) -> int:
    with open(args.sheet, encoding="utf-8") as fh:
        entries = parse_sheet_text(fh.read(), args.sheet)
    engine = Engine.load(entries)
    graph = DepGraph.build(engine.sheet)
    report = analysis.analyze(engine.sheet, graph, args.order)
    _emit(analysis.render(report), args.out)
    if args.dot:
        dot = analysis.to_dot(engine.sheet, graph, report.depth)
        if args.dot == "-":
            sys.stdout.write(dot)
        else:
            _emit(dot, args.dot)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "run":
            trace = replay.run(args.sheet, args.script, PolicyProfile.load(args.profile))
            _emit(trace.render(), args.out)
            return EXIT_OK if trace.ok else EXIT_FAIL
        if args.command == "diff":
            if len(args.profile) != 2:
                raise InputError("diff needs --profile exactly twice", "<args>", 0, 0)
            pa, pb = (PolicyProfile.load(p) for p in args.profile)
            (ta, tb), found = replay.diff(args.sheet, args.script, pa, pb)
            _emit(replay.render_diff(ta, tb, found), args.out)
            return EXIT_OK if not found else EXIT_FAIL
        return _analyze(args)
    except (GridlabError, OSError, ValueError) as exc:
        print(f"gridlab: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
