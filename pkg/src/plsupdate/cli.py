"""Command line entry point.

Exit codes: 0 clean and complete, 1 expectation not met (``--expect-incomplete``
on a run that completed), 2 safety violation, 3 quiescent but incomplete,
64 usage error or unreadable scenario.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .explore import ExplosionGuard, enumerate_interleavings, explore
from .metrics import RunReport, fit, speedup_curve
from .protocols import Scheme
from .scenario import ScenarioInvalid, SeededRandomJitter, parse_scenario
from .simulator import run

EXIT_OK = 0
EXIT_EXPECTATION = 1
EXIT_VIOLATION = 2
EXIT_INCOMPLETE = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="seed for jittered delivery")
    p.add_argument("--max-jitter", type=int, default=3, help="max extra delay when --seed turns on jitter")
    p.add_argument("--out", type=Path, default=None)
    p.add_argument("--emit", choices=["trace", "report", "both"], default="report")
    p.add_argument("--expect-incomplete", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="plsupdate", description="Locally verifiable network update simulator")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = sub.add_parser("run", help="simulate one scenario file")
    p.add_argument("file", type=Path)
    _common(p)
    p = sub.add_parser("enumerate", help="check every delivery order of a small scenario")
    p.add_argument("file", type=Path)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--merge-states", action="store_true", help="explore the state graph instead of every order")
    _common(p)
    p = sub.add_parser("sweep", help="ring-chain delay comparison over chain lengths")
    p.add_argument("--lengths", required=True)
    p.add_argument("--schemes", default="CENTRAL_BASELINE,DIST_FLOW")
    p.add_argument("--workers", type=int, default=1)
    _common(p)
    return parser


def _load(path: Path, args):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    try:
        sc = parse_scenario(text)
    except ScenarioInvalid as exc:
        raise UsageError(f"{path}: {type(exc).__name__}: {exc}") from exc
    if args.seed is not None:
        if isinstance(sc.policy, SeededRandomJitter):
            sc = replace(sc, policy=replace(sc.policy, seed=args.seed))
        else:
            sc = replace(sc, policy=SeededRandomJitter(args.seed, args.max_jitter))
    return sc


def _write(args, trace_text: str | None, report_text: str | None):
    if args.out is None:
        if trace_text is not None and args.emit in ("trace", "both"):
            sys.stdout.write(trace_text)
        if report_text is not None and args.emit in ("report", "both"):
            sys.stdout.write(report_text)
        return
    if args.emit == "trace":
        args.out.write_text(trace_text or "")
    elif args.emit == "report":
        args.out.write_text(report_text or "")
    else:
        args.out.write_text(trace_text or "")
        args.out.with_name(args.out.name + ".report").write_text(report_text or "")
        sys.stdout.write(report_text or "")


def _status_code(violations: int, complete: bool, expect_incomplete: bool) -> int:
    if violations:
        return EXIT_VIOLATION
    if expect_incomplete:
        return EXIT_OK if not complete else EXIT_EXPECTATION
    return EXIT_OK if complete else EXIT_INCOMPLETE


def cmd_run(args) -> int:
    sc = _load(args.file, args)
    trace = run(sc)
    report = RunReport.of(trace)
    _write(args, trace.to_jsonl(), report.table())
    return _status_code(report.violations, trace.complete, args.expect_incomplete)


def cmd_enumerate(args) -> int:
    sc = _load(args.file, args)
    if args.merge_states:
        rep = explore(sc, max_states=args.cap)
        lines = [f"states {rep.states}", f"transitions {rep.transitions}", f"terminal {rep.terminal}",
                 f"terminal_incomplete {rep.terminal_incomplete}", f"violations {rep.violations + rep.downgrades}"]
        complete = rep.terminal_incomplete == 0
        _write(args, None, "\n".join(lines) + "\n")
        return _status_code(rep.violations + rep.downgrades, complete, args.expect_incomplete)
    count = violations = incomplete = 0
    traces = []
    try:
        for tr in enumerate_interleavings(sc, cap=args.cap):
            count += 1
            violations += tr.violations > 0
            incomplete += not tr.complete
            if args.emit in ("trace", "both"):
                traces.append(tr.to_jsonl())
    except ExplosionGuard as exc:
        print(f"enumerate: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = (f"interleavings {count}\nviolating {violations}\nincomplete {incomplete}\n"
              f"status {'CLEAN' if not violations else 'VIOLATED'}\n")
    _write(args, "".join(traces), report)
    if violations:
        return EXIT_VIOLATION
    if args.expect_incomplete:
        return EXIT_OK if incomplete == count else EXIT_EXPECTATION
    return EXIT_OK if incomplete == 0 else EXIT_INCOMPLETE


def cmd_sweep(args) -> int:
    try:
        lengths = [int(x) for x in args.lengths.split(",") if x]
        schemes = [Scheme(s.strip().upper()) for s in args.schemes.split(",")]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if len(schemes) != 2 or not lengths or min(lengths) < 4:
        raise UsageError("sweep needs two schemes and lengths >= 4")
    for s in schemes:
        if s not in (Scheme.CENTRAL_BASELINE, Scheme.DIST_FLOW):
            raise UsageError(f"sweep compares CENTRAL_BASELINE and DIST_FLOW, not {s.value}")
    table = speedup_curve(lengths, schemes, workers=args.workers)
    text = table.text()
    if len(lengths) >= 3 and all(r[1] is not None and r[2] is not None for r in table.rows):
        xs = [r[0] for r in table.rows]
        qa = fit(xs, [r[1] for r in table.rows], 2)
        lb = fit(xs, [r[2] for r in table.rows], 1)
        text += f"# {schemes[0].value} quadratic R^2={qa['r2']:.4f}; {schemes[1].value} linear R^2={lb['r2']:.4f}\n"
    _write(args, None, text)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handler = {"run": cmd_run, "enumerate": cmd_enumerate, "sweep": cmd_sweep}[args.cmd]
    try:
        return handler(args)
    except UsageError as exc:
        print(f"plsupdate: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
