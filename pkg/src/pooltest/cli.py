"""Command-line entry points.

Subcommands: plan, value, table, simulate, oracle, fib-check, serve,
session. The data directory (plan-table cache, session logs) comes from
--data-dir or the POOLTEST_DATA_DIR environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import fibonacci, oracle, optimizer, simulator
from .executor import Mode
from .structure import notation, parse, structure_value


def _data_dir(args) -> Path:
    raw = args.data_dir or os.environ.get("POOLTEST_DATA_DIR", "./pooltest-data")
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _cached_table(n: int, q: float, args) -> optimizer.PlanTable:
    cache = _data_dir(args) / "plans"
    cache.mkdir(parents=True, exist_ok=True)
    path = cache / f"plan_q{q!r}_n{n}.npz"
    if path.exists():
        try:
            table = optimizer.PlanTable.load(path)
            if table.q == q and table.size >= n:
                return table
        except Exception:
            pass  # stale or corrupt cache entry: rebuild
    table = optimizer.build_table(n, q)
    table.save(path)
    return table


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--q", type=float, required=True, help="probability a sample is negative")
    parser.add_argument("--out", choices=("text", "csv", "json"), default="text")
    parser.add_argument("--data-dir", default=None)
    parser.add_argument("--precision", type=int, default=9)


def cmd_plan(args) -> int:
    table = _cached_table(args.n, args.q, args)
    s = table.structure(args.n)
    expected = table.expected_tests(args.n)
    if args.out == "json":
        print(json.dumps({"n": args.n, "q": args.q, "plan": notation(s),
                          "expected_tests": expected}))
    else:
        print(notation(s))
        print(f"expected tests: {expected:.{args.precision}f}")
    return 0


def cmd_value(args) -> int:
    s = parse(args.structure)
    breakdown = structure_value(s, args.q)
    if args.out == "json":
        print(json.dumps({
            "structure": notation(s),
            "n": s.n,
            "q": args.q,
            "total_value": breakdown.total_value,
            "expected_tests": breakdown.expected_tests,
            "per_test": [
                {"start": span[0], "end": span[1], "value": value}
                for span, value in breakdown.per_test_value
            ],
        }))
    else:
        for span, value in breakdown.per_test_value:
            print(f"test[{span[0]},{span[1]}): {value:.{args.precision}f}")
        print(f"total value: {breakdown.total_value:.{args.precision}f}")
        print(f"expected tests: {breakdown.expected_tests:.{args.precision}f}")
    return 0


def cmd_table(args) -> int:
    table = _cached_table(args.n_hi, args.q, args)
    rows = optimizer.division_table(args.n_lo, args.n_hi, args.q, table)
    if args.out == "json":
        print(json.dumps([
            {"n": r.n, "expected_tests": r.expected_tests, "split": r.split}
            for r in rows
        ]))
    else:
        sys.stdout.write(optimizer.division_csv(rows, args.precision))
    return 0


def cmd_simulate(args) -> int:
    mode = "restructuring" if args.mode in ("restructure", "restructuring") else "fixed"
    run = (simulator.run_restructuring_mc if mode == "restructuring"
           else simulator.run_fixed_mc)
    stats = run(args.n, args.q, args.trials, args.seed)
    if args.out == "csv":
        sys.stdout.write(stats.to_csv())
    else:
        print(json.dumps(stats.to_dict()))
    return 0


def cmd_oracle(args) -> int:
    result = oracle.brute_optimal(args.n, args.q)
    table = optimizer.build_table(args.n, args.q)
    payload = {
        "n": args.n,
        "q": args.q,
        "brute_structure": notation(result.structure),
        "brute_value": result.value,
        "ties": [notation(t) for t in result.ties],
        "optimizer_value": table.value(args.n),
        "agree": abs(result.value - table.value(args.n)) <= 1e-12 * max(1.0, abs(result.value)),
    }
    if args.nonnested:
        payload["nonnested_expected_tests"] = oracle.nonnested_optimal(args.n, args.q)
        payload["nested_expected_tests"] = args.n + table.value(args.n)
    print(json.dumps(payload))
    return 0


def cmd_fib_check(args) -> int:
    report = fibonacci.check_conjecture(args.q, args.n_hi)
    if args.out == "csv":
        sys.stdout.write(report.to_csv())
    else:
        for line in report.to_lines():
            print(line)
        print("conforms" if report.conforms else "VIOLATIONS FOUND")
    return 0 if report.conforms else 1


def cmd_serve(args) -> int:
    from .service import serve

    serve(args.host, args.port, str(_data_dir(args)))
    return 0


def cmd_session(args) -> int:
    from .sessions import SessionStore

    store = SessionStore(_data_dir(args))
    if args.resume:
        session = store.get(args.resume)
    else:
        session = store.create(args.n, args.q, args.mode)
        print(f"session {session.id} plan {session.plan_notation}")
    while True:
        action = session.next_action()
        if "done" in action:
            print(f"done: positives {action['done']['positives']} "
                  f"after {session.engine.performed_count} tests")
            return 0
        span = action["test"]
        answer = input(f"test samples [{span['start']},{span['end']}) positive? [y/n/q] ").strip().lower()
        if answer in ("q", "quit"):
            print(f"paused; resume with --resume {session.id}")
            return 0
        if answer not in ("y", "n", "yes", "no"):
            print("please answer y or n (q quits)")
            continue
        event = session.apply_result(answer.startswith("y"))
        store.record(session, event)
        for note in event.deduced:
            print(f"  deduced: {note}")
        if event.replan:
            print(f"  replanned from {event.replan['from']}: {event.replan['plan']}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pooltest",
                                     description="Nested pooled-testing planner and tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="optimal plan for n samples")
    p.add_argument("--n", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("value", help="expected tests of a given plan")
    p.add_argument("--structure", required=True, help='plan notation, e.g. "[x[xx]]"')
    _common(p)
    p.set_defaults(func=cmd_value)

    p = sub.add_parser("table", help="per-size expected tests and divisions")
    p.add_argument("--n-lo", type=int, default=1)
    p.add_argument("--n-hi", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_table, out="csv")

    p = sub.add_parser("simulate", help="Monte Carlo expected tests")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("fixed", "restructure", "restructuring"),
                   default="fixed")
    _common(p)
    p.set_defaults(func=cmd_simulate, out="json")

    p = sub.add_parser("oracle", help="brute-force check against the optimizer")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--nonnested", action="store_true",
                   help="also report the unrestricted adaptive optimum (n <= 3)")
    _common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fib-check", help="check the Fibonacci splitting pattern")
    p.add_argument("--n-hi", type=int, required=True)
    _common(p)
    p.set_defaults(func=cmd_fib_check)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8123)
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("session", help="drive a session from the terminal")
    p.add_argument("--n", type=int)
    p.add_argument("--q", type=float)
    p.add_argument("--mode", choices=("fixed", "restructuring"), default="fixed")
    p.add_argument("--resume", default=None, help="resume an existing session id")
    p.add_argument("--data-dir", default=None)
    p.set_defaults(func=cmd_session)

    args = parser.parse_args(argv)
    if args.command == "session" and not args.resume and (args.n is None or args.q is None):
        parser.error("session needs --n and --q (or --resume ID)")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
