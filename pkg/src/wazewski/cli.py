"""Command-line front end.

    wazewski verify      --scenario s.toml
    wazewski exit        --scenario s.toml --y 0.5 [--horizon 50] [--trace]
    wazewski search      --scenario s.toml [--out DIR]
    wazewski sweep       --scenario s.toml [--horizon 20]
    wazewski asymptotics --scenario s.toml

Exit codes: 0 success, 1 configuration or precondition error, 2 hypothesis
(or asymptotic validation) failure, 3 survivor search failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import commands
from .errors import IntegrationBreakdown, PreconditionError
from .scenario import load_scenario


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wazewski", description="Bounded solutions of x'' = f(t, x, x') by exit-side analysis")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify", "check the boundary hypotheses"),
        ("exit", "first-exit time from one initial condition"),
        ("search", "bisect for a never-escaping initial condition"),
        ("sweep", "exit outcome over a grid of initial conditions"),
        ("asymptotics", "near-boundary exit-time asymptotics"),
    ):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--scenario", required=True, type=Path)
        s.add_argument("--out", type=Path, help="directory for report.json and data files")
        if name in ("exit", "sweep"):
            s.add_argument("--horizon", type=float)
        if name == "exit":
            s.add_argument("--y", type=float)
            s.add_argument("--trace", action="store_true", help="write trajectory.csv")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    started = time.perf_counter()
    try:
        sc = load_scenario(args.scenario)
        if args.command == "verify":
            payload, code, files = commands.run_verify(sc)
        elif args.command == "exit":
            payload, code, files = commands.run_exit(sc, args.y, args.horizon, args.trace)
        elif args.command == "search":
            payload, code, files = commands.run_search(sc)
        elif args.command == "sweep":
            payload, code, files = commands.run_sweep(sc, args.horizon)
        else:
            payload, code, files = commands.run_asymptotics(sc)
    except (PreconditionError, IntegrationBreakdown) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return commands.EXIT_CONFIG
    report = commands.run_report(args.command, sc, payload, code,
                                 {"wall_seconds": time.perf_counter() - started})
    text = commands.to_json(report)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "report.json").write_text(text + "\n")
        for name, content in files.items():
            (args.out / name).write_text(content)
    elif files and args.command != "exit":
        print(f"note: {', '.join(sorted(files))} not written (no --out)", file=sys.stderr)
    if args.command == "exit" and files and args.out is None:
        Path("trajectory.csv").write_text(files["trajectory.csv"])
    print(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
