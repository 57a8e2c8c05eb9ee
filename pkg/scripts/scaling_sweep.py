#!/usr/bin/env python3
"""Sweep town size and watch what scales. Directive traffic is driven by
the event script, so it should stay flat; per-NPC scoring grows linearly
with the population that matches each directive's tags."""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from cascade.engine import Simulation
from cascade.scenario import load_scenario_file

DEFAULT_SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "drought_town.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default=str(DEFAULT_SCENARIO))
    parser.add_argument("--ticks", type=int, default=30)
    parser.add_argument("--sizes", default="10,100,1000")
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    scenario = load_scenario_file(args.scenario)
    sizes = [int(s) for s in args.sizes.split(",")]

    print(f"{'npcs':>8}  {'directives':>10}  {'utility_evals':>13}  {'actions':>9}  {'ms_per_tick':>11}")
    directive_counts = set()
    for size in sizes:
        sim = Simulation(scenario, seed=args.seed, npc_count=size)
        started = time.perf_counter()
        sim.run(args.ticks)
        elapsed = time.perf_counter() - started
        directives = sim.trace.count("DirectiveIssued")
        directive_counts.add(directives)
        print(
            f"{size:>8}  {directives:>10}  {sim.trace.count('UtilityEvaluated'):>13}  "
            f"{sim.trace.count('ActionExecuted'):>9}  {1000.0 * elapsed / max(args.ticks, 1):>11.3f}"
        )

    if len(directive_counts) == 1:
        print("directive count is independent of town size")
    else:
        print(f"warning: directive count varied across sizes: {sorted(directive_counts)}")


if __name__ == "__main__":
    main()
