#!/usr/bin/env python3
"""Put a number on the architecture's cost claim: run the same town once
with the cascade loop and once under a full-generative policy that prompts
every NPC every tick, and compare the model-call and token estimates."""

from __future__ import annotations

import argparse
from pathlib import Path

from cascade.engine import Simulation
from cascade.scenario import load_scenario_file
from cascade.trace import build_cost_report

DEFAULT_SCENARIO = Path(__file__).resolve().parent.parent / "scenarios" / "drought_town.json"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", default=str(DEFAULT_SCENARIO))
    parser.add_argument("--ticks", type=int, default=30)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--tokens-per-call", type=int, default=500)
    args = parser.parse_args()

    scenario = load_scenario_file(args.scenario)
    reports = {}
    for mode, label in (("off", "cascade"), ("full-generative", "full-generative")):
        sim = Simulation(scenario, seed=args.seed, baseline_mode=mode)
        summary = sim.run(args.ticks)
        reports[label] = build_cost_report(
            sim.trace.events, summary.npc_count, summary.ticks, args.tokens_per_call
        )

    print(f"{'policy':<16}  {'model_calls':>11}  {'est_tokens':>10}")
    for label, report in reports.items():
        print(f"{label:<16}  {report.cascade_llm_calls:>11}  {report.cascade_tokens:>10}")

    cascade = reports["cascade"]
    print(
        f"\ncascade made {cascade.cascade_llm_calls} calls where prompting all "
        f"{cascade.npc_count} NPCs for {cascade.ticks} ticks makes {cascade.baseline_llm_calls}; "
        f"reduction ratio {cascade.reduction_ratio:.4f}, "
        f"about {cascade.baseline_tokens - cascade.cascade_tokens} tokens saved"
    )


if __name__ == "__main__":
    main()
