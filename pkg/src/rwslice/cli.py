"""Command-line interface.

    rwslice --theory th.rwt --init "g(f(a))" --end "m(a)" --criterion "^"
    rwslice --theory th.rwt --init "t" --steps 5 --criterion "1.2,2" --format structured
    rwslice --theory th.rwt --init "t" --trace run.rwtrace --criterion "1"

The end state is searched along the engine's deterministic run only;
externally produced traces must be supplied as a trace file.
"""

from __future__ import annotations

import argparse
import os
import sys

from .engine import (
    DEFAULT_STEP_BUDGET,
    NoRuleApplicable,
    StepBudgetExceeded,
    run,
    run_until,
)
from .report import SliceReport
from .slicer import trace_slice
from .terms import Position, pretty
from .theoryfile import parse_term, parse_theory
from .tracefile import load_trace

ENV_MAX_STEPS = "RWSLICE_MAX_STEPS"


class CliError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwslice", description="Backward slicing of instrumented rewrite traces")
    p.add_argument("--theory", required=True, help="theory file")
    p.add_argument("--init", required=True, help="initial term")
    end = p.add_mutually_exclusive_group(required=True)
    end.add_argument("--end", help="final term to search for along the deterministic run")
    end.add_argument("--steps", type=int, help="number of rule applications to run")
    end.add_argument("--trace", help="pre-recorded trace file")
    p.add_argument("--criterion", required=True, help="observed positions of the final term, e.g. \"1.2,2\" (^ is the root)")
    p.add_argument("--format", choices=["pretty", "structured"], default="pretty")
    p.add_argument("--full-expansion", action="store_true", help="show equational and AC steps in the pretty output")
    p.add_argument("--max-steps", type=int, default=None, help="elementary step budget")
    p.add_argument("--seed", type=int, default=0, help="label supply seed")
    return p


def _budget(args) -> int:
    if args.max_steps is not None:
        return args.max_steps
    env = os.environ.get(ENV_MAX_STEPS)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"{ENV_MAX_STEPS} must be an integer, got {env!r}")
    return DEFAULT_STEP_BUDGET


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        theory_text = _read(args.theory)
        th = parse_theory(theory_text, name=os.path.basename(args.theory))
        init = parse_term(args.init, th.signature)
        budget = _budget(args)
        if args.trace is not None:
            trace = load_trace(args.trace, th)
            if trace.initial != init:
                raise CliError(
                    f"--init {pretty(init)} does not match the trace's initial term "
                    f"{pretty(trace.initial)}"
                )
        elif args.steps is not None:
            if args.steps < 0:
                raise CliError("--steps must be nonnegative")
            trace = run(init, th, args.steps, max_steps=budget)
        else:
            end = parse_term(args.end, th.signature)
            trace = run_until(init, end, th, max_steps=budget)
        criterion = _parse_criterion(args.criterion)
        ts = trace_slice(trace, criterion, seed=args.seed)
        report = SliceReport(ts, theory_name=th.name, seed=args.seed)
        if args.format == "structured":
            sys.stdout.write(report.render_structured())
        else:
            sys.stdout.write(report.render_pretty(full_expansion=args.full_expansion))
        return 0
    except (CliError, NoRuleApplicable, StepBudgetExceeded) as exc:
        print(f"rwslice: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # parse errors, invalid criteria, bad traces
        print(f"rwslice: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(str(exc))


def _parse_criterion(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise CliError("empty criterion")
    try:
        return frozenset(Position.parse(p) for p in parts)
    except ValueError as exc:
        raise CliError(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
