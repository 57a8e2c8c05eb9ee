"""Command line front end.

  cascade run     simulate a scenario and write a trace
  cascade bench   scaling sweep: directive/evaluation counts vs town size
  cascade report  cost summary and final-tick action table from a trace

Exit codes: 0 success, 2 bad input or validation failure, 3 internal
invariant violation, 4 benchmark assertion failure.
"""

from __future__ import annotations

import argparse
import sys
import time
from typing import Optional

from .core import InvariantViolation
from .engine import Simulation
from .scenario import Scenario, ScenarioError, load_scenario_file
from .trace import DEFAULT_TOKENS_PER_CALL, TraceError, build_cost_report, read_trace_file

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_BENCH = 4

MAX_SEED = 2**64 - 1


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _load(path: str) -> Scenario:
    return load_scenario_file(path)


def _seed_for(scenario: Scenario, seed: Optional[int]) -> int:
    if seed is None:
        return scenario.seed_default
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return seed


def cmd_run(args: argparse.Namespace) -> int:
    try:
        scenario = _load(args.scenario)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"scenario error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        return _fail(f"cannot read scenario: {exc}", EXIT_INPUT)
    try:
        seed = _seed_for(scenario, args.seed)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)

    try:
        stream = open(args.trace, "w", encoding="utf-8")
    except OSError as exc:
        return _fail(f"cannot open trace for writing: {exc}", EXIT_INVARIANT)
    try:
        sim = Simulation(
            scenario,
            seed=seed,
            npc_count=args.npcs,
            baseline_mode=args.baseline,
            trace_stream=stream,
        )
        summary = sim.run(args.ticks)
    except InvariantViolation as exc:
        return _fail(f"invariant violation: {exc}", EXIT_INVARIANT)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except OSError as exc:
        return _fail(f"trace write failed: {exc}", EXIT_INVARIANT)
    finally:
        stream.close()
    print(summary.line())
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    try:
        scales = [int(x) for x in args.npcs.split(",") if x.strip()]
    except ValueError:
        return _fail(f"--npcs expects a comma-separated list of integers, got {args.npcs!r}", EXIT_INPUT)
    if not scales or any(n < 1 for n in scales):
        return _fail("--npcs needs at least one positive town size", EXIT_INPUT)
    try:
        scenario = _load(args.scenario)
        seed = _seed_for(scenario, args.seed)
    except ScenarioError as exc:
        for line in exc.errors:
            print(f"scenario error: {line}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)

    rows = []
    for n in scales:
        try:
            sim = Simulation(scenario, seed=seed, npc_count=n)
            started = time.perf_counter()
            sim.run(args.ticks)
            elapsed = time.perf_counter() - started
        except InvariantViolation as exc:
            return _fail(f"invariant violation: {exc}", EXIT_INVARIANT)
        collector = sim.trace
        rows.append({
            "npcs": n,
            "directives": collector.count("DirectiveIssued"),
            "utility_evals": collector.count("UtilityEvaluated"),
            "ms_per_tick": 1000.0 * elapsed / max(args.ticks, 1),
        })

    print(f"{'npcs':>8}  {'ticks':>6}  {'directives':>10}  {'utility_evals':>13}  {'ms_per_tick':>11}")
    for row in rows:
        print(
            f"{row['npcs']:>8}  {args.ticks:>6}  {row['directives']:>10}  "
            f"{row['utility_evals']:>13}  {row['ms_per_tick']:>11.3f}"
        )

    counts = {row["directives"] for row in rows}
    if len(counts) > 1:
        detail = ", ".join(f"{row['npcs']} npcs -> {row['directives']}" for row in rows)
        return _fail(f"bench assertion failed: directive count varies with town size ({detail})", EXIT_BENCH)
    print("directive count constant across scales: ok")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    try:
        meta, events = read_trace_file(args.trace)
    except TraceError as exc:
        return _fail(str(exc), EXIT_INPUT)
    except OSError as exc:
        return _fail(f"cannot read trace: {exc}", EXIT_INPUT)

    npc_count = meta.get("npc_count", 0)
    ticks = max((e.tick for e in events), default=0)
    report = build_cost_report(events, npc_count, ticks, args.tokens_per_call)

    print(f"scenario:           {meta.get('scenario', '?')}")
    print(f"seed:               {meta.get('seed', '?')}")
    print(f"ticks:              {report.ticks}")
    print(f"npcs:               {report.npc_count}")
    print(f"llm calls:          {report.cascade_llm_calls}")
    print(f"baseline llm calls: {report.baseline_llm_calls}")
    print(f"tokens:             {report.cascade_tokens}")
    print(f"baseline tokens:    {report.baseline_tokens}")
    print(f"reduction ratio:    {report.reduction_ratio:.4f}")

    final_actions: dict[str, tuple[str, list[str]]] = {}
    for event in events:
        if event.kind == "ActionExecuted" and event.tick == ticks:
            final_actions[event.payload["npc"]] = (
                event.payload["action"],
                list(event.payload.get("tags", [])),
            )
    if final_actions:
        print()
        rows = [
            (npc, "".join(f"[{t}]" for t in tags), action)
            for npc, (action, tags) in sorted(final_actions.items())
        ]
        header = ("npc", "tags", "action")
        widths = [max(len(r[i]) for r in rows + [header]) for i in range(3)]
        print(f"{header[0]:<{widths[0]}}  {header[1]:<{widths[1]}}  {header[2]}")
        for npc, tags, action in rows:
            print(f"{npc:<{widths[0]}}  {tags:<{widths[1]}}  {action}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate a scenario and write a trace")
    run.add_argument("--scenario", required=True, help="path to a scenario JSON file")
    run.add_argument("--ticks", type=int, required=True, help="how many ticks to simulate")
    run.add_argument("--seed", type=int, default=None, help="64-bit run seed (default: scenario's)")
    run.add_argument("--trace", required=True, help="where to write the JSONL trace")
    run.add_argument("--baseline", choices=["full-generative"], default="off",
                     help="also prompt every NPC every tick, as a naive baseline would")
    run.add_argument("--npcs", type=int, default=None,
                     help="replicate the roster to this many NPCs")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="compare directive and scoring counts across town sizes")
    bench.add_argument("--npcs", required=True, help="comma-separated town sizes, e.g. 10,100,1000")
    bench.add_argument("--ticks", type=int, required=True)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--scenario", required=True)
    bench.set_defaults(func=cmd_bench)

    report = sub.add_parser("report", help="summarize a trace: cost model plus final actions")
    report.add_argument("--trace", required=True, help="path to a trace written by `cascade run`")
    report.add_argument("--tokens-per-call", type=int, default=DEFAULT_TOKENS_PER_CALL,
                        help="token estimate per model call")
    report.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "ticks", None) is not None and args.ticks < 0:
        return _fail("--ticks must be >= 0", EXIT_INPUT)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
