"""Command-line surface: inspect options, generate scripts, run them, execute
the full combination matrix, and serve the render API.

Exit codes: 0 success, 2 usage/incompatible-selection/parse error, 3 runtime
failure during campaign execution."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import cdl
from .generator import GeneratorError, IncompatibleSelection, generate, script_digest
from .grid import GridError, default_selection, list_rows, list_rules, raw_options_text
from .matrix import format_report, run_matrix


def _cmd_options(args) -> int:
    if args.format == "structured":
        sys.stdout.write(raw_options_text())
        return 0
    for row in list_rows():
        marks = [f"{v}*" if v == row.default else v for v in row.values]
        print(f"{row.key} ({row.display}): {' | '.join(marks)}")
        print(f"    {row.tooltip}")
    print("rules:")
    for rule in list_rules():
        cond = " and ".join(f"{k}={v}" for k, v in rule.when)
        print(f"  {rule.id} [{rule.classification}] when {cond}: {rule.reason}")
    return 0


def _parse_sets(pairs: list[str]) -> dict[str, str]:
    selection = default_selection()
    valid_keys = {r.key for r in list_rows()}
    for pair in pairs:
        if "=" not in pair:
            raise GridError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        if key not in valid_keys:
            raise GridError(f"unknown option key {key!r}")
        selection[key] = value
    return selection


def _cmd_generate(args) -> int:
    try:
        selection = _parse_sets(args.set or [])
        result = generate(selection)
    except (GridError, GeneratorError) as err:
        print(str(err), file=sys.stderr)
        return 2
    if args.output:
        Path(args.output).write_text(result.script)
        print(f"wrote {args.output} (digest {result.digest})")
    else:
        sys.stdout.write(result.script)
    return 0


def _cmd_run(args) -> int:
    path = Path(args.script)
    if not path.exists():
        print(f"no such file: {path}", file=sys.stderr)
        return 2
    try:
        script = cdl.parse_script(path.read_text())
    except cdl.ScriptParseError as err:
        for e in err.errors:
            print(str(e), file=sys.stderr)
        return 2
    try:
        trace, summary = cdl.execute_script(script, budget=args.budget, seed=args.seed)
    except Exception as err:
        print(f"runtime failure: {err}", file=sys.stderr)
        return 3
    trace_path = path.with_suffix(".trace.csv")
    trace_path.write_text(summary["trace_text"])
    print(f"wrote {trace_path}")
    if summary["svg"] is not None:
        svg_path = path.with_suffix(".svg")
        svg_path.write_text(summary["svg"])
        print(f"wrote {svg_path}")
    print(f"completed trials: {summary['trials']}")
    print(f"wall time: {summary['wall_time']:.3f}s")
    print(f"best: {json.dumps(summary['best'], sort_keys=True)}")
    print(f"trace digest: {script_digest(summary['trace_text'])}")
    return 0


def _cmd_matrix(args) -> int:
    records, summary = run_matrix(budget=args.budget, jobs=args.jobs)
    report = format_report(records, summary)
    if args.report:
        Path(args.report).write_text(report)
        print(f"wrote {args.report}")
    print(
        f"selections: {summary['total']}  executed: {summary['executed']}  "
        f"incompatible: {summary['incompatible']}  failures: {summary['failures']}"
    )
    if not summary["ok"]:
        for digest in summary["failing_digests"]:
            print(f"failed: {digest}", file=sys.stderr)
        return 1
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boforge")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("options", help="list the selection grid rows and rules")
    p.add_argument("--format", choices=["text", "structured"], default="text")
    p.set_defaults(func=_cmd_options)

    p = sub.add_parser("generate", help="generate a campaign script")
    p.add_argument("--set", action="append", metavar="key=value")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="execute a campaign script")
    p.add_argument("script")
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("matrix", help="generate and execute every selection")
    p.add_argument("--budget", type=int, default=6)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report")
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser("serve", help="serve the render API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
