"""The tick pipeline: macro layer, coordination layer, NPC layer, in a
fixed phase order every tick:

  Clock -> MacroEval -> Critic -> Activation -> Compile -> Deliver
        -> Score -> Act -> Migrate

Dialogue never runs inside the pipeline; it is requested between ticks
through `Simulation.request_dialogue`. All iteration is over sorted ids
and the only randomness is the run's single seeded generator, so a
scenario plus a seed fully determines the trace, byte for byte.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Any, Optional, TextIO, Union

from .core import Directive, MacroEvent, NpcProfile, directive_to_packet, selector_matches
from .director import advance_clock, apply_event, critic_check, evaluate_rules
from .hub import DirectiveIdSource, broadcast, compile_directives, expire_directives, route_activation
from .npc import (
    LlmCallCounter,
    TemplateDialogueProvider,
    UtilityBreakdown,
    best_breakdown,
    execute_action,
    migrate_tags,
    request_dialogue as npc_request_dialogue,
    score_directive,
    select_action,
)
from .scenario import Scenario, initial_ledger
from .trace import TraceCollector, TraceEvent, TraceWriter


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str
    ticks: int
    seed: Optional[int] = None  # None -> scenario seed_default
    trace_path: Optional[str] = None
    baseline_mode: str = "off"  # "off" | "full-generative"
    npc_scale_override: Optional[int] = None


@dataclass
class RunSummary:
    ticks: int = 0
    npc_count: int = 0
    events_fired: int = 0
    events_rejected: int = 0
    directives_issued: int = 0
    actions_executed: int = 0
    migrations: int = 0
    llm_calls: int = 0

    def line(self) -> str:
        return (
            f"ticks={self.ticks} npcs={self.npc_count} "
            f"events_fired={self.events_fired} directives_issued={self.directives_issued} "
            f"actions_executed={self.actions_executed} llm_calls={self.llm_calls}"
        )


def replicate_roster(npcs: tuple[NpcProfile, ...], target: int) -> tuple[NpcProfile, ...]:
    """Scale the roster to `target` NPCs by cycling copies with id suffixes,
    which keeps the tag distribution intact at whole multiples."""
    if target < 1:
        raise ValueError("npc count must be at least 1")
    if not npcs:
        raise ValueError("cannot replicate an empty roster")
    out: list[NpcProfile] = []
    copy = 0
    while len(out) < target:
        for npc in npcs:
            if len(out) >= target:
                break
            out.append(npc if copy == 0 else replace(npc, id=f"{npc.id}_x{copy}"))
        copy += 1
    return tuple(out)


def run_meta(scenario: Scenario, seed: int, npc_count: int) -> dict[str, Any]:
    return {
        "scenario": scenario.name,
        "seed": seed,
        "schema_version": scenario.schema_version,
        "npc_count": npc_count,
    }


class Simulation:
    """One run: owns the ledger, the roster, live directives, the trace sink,
    the RNG and the model-call counter."""

    def __init__(
        self,
        scenario: Scenario,
        seed: Optional[int] = None,
        npc_count: Optional[int] = None,
        baseline_mode: str = "off",
        trace_stream: Optional[TextIO] = None,
    ) -> None:
        if baseline_mode not in ("off", "full-generative"):
            raise ValueError(f"unknown baseline mode {baseline_mode!r}")
        self.scenario = scenario
        self.seed = scenario.seed_default if seed is None else seed
        roster = scenario.npcs
        if npc_count is not None:
            roster = replicate_roster(roster, npc_count)
        self.npcs: dict[str, NpcProfile] = {n.id: n for n in roster}
        self._order = sorted(self.npcs)
        self.meta = run_meta(scenario, self.seed, len(roster))
        self.trace: Union[TraceWriter, TraceCollector]
        if trace_stream is not None:
            self.trace = TraceWriter(trace_stream, self.meta)
        else:
            self.trace = TraceCollector(self.meta)
        self.baseline_mode = baseline_mode
        self.rng = random.Random(self.seed)
        self.ledger = initial_ledger(scenario)
        self.active_directives: list[Directive] = []
        self.directive_index: dict[str, Directive] = {}
        self.id_source = DirectiveIdSource()
        self.rules_by_id = {r.id: r for r in scenario.rules}
        self.provider = TemplateDialogueProvider()
        self.counter = LlmCallCounter()
        self.last_action: dict[str, Optional[str]] = {nid: None for nid in self._order}
        self.summary = RunSummary(npc_count=len(roster))

    # -- pipeline ------------------------------------------------------------

    def step(self) -> None:
        # Clock: advance time, drift variables, tick down event effects,
        # drop directives past their time-to-live.
        self.ledger = advance_clock(self.ledger, self.scenario.drifts, self.rng)
        tick = self.ledger.tick
        self.active_directives = expire_directives(self.active_directives, tick)

        # MacroEval: collect trigger-satisfying candidates.
        candidates = evaluate_rules(self.ledger, self.scenario.rules)

        # Critic: gate each candidate; accepted ones commit to the ledger.
        accepted_events: list[MacroEvent] = []
        for candidate in candidates:
            rule = self.rules_by_id[candidate.rule_id]
            verdict = critic_check(candidate, rule, self.ledger)
            if verdict.accepted:
                event = replace(candidate, critic_verdict=verdict)
                self.ledger = apply_event(self.ledger, event, rule)
                accepted_events.append(event)
                self.summary.events_fired += 1
                self._emit(tick, "Critic", "EventFired", {
                    "event": event.instance_id,
                    "rule": event.rule_id,
                    "name": rule.name,
                    "trigger_snapshot": dict(sorted(event.trigger_snapshot.items())),
                })
            else:
                self.summary.events_rejected += 1
                self._emit(tick, "Critic", "EventRejected", {
                    "event": candidate.instance_id,
                    "rule": candidate.rule_id,
                    "reason": verdict.reason,
                    "violated_requirement": verdict.violated_requirement,
                })

        # Activation: wake only the modules that recognise each event.
        activated: list[tuple[str, MacroEvent]] = []
        for event in accepted_events:
            for module_id in route_activation(event, self.ledger, self.scenario.modules):
                activated.append((module_id, event))
        for module_id, event in sorted(activated, key=lambda p: (p[0], p[1].instance_id)):
            self._emit(tick, "Activation", "ModuleActivated", {
                "module": module_id,
                "event": event.instance_id,
            })

        # Compile: awake modules turn templates into directives.
        awake = {(module_id, event.instance_id) for module_id, event in activated}
        fresh: list[Directive] = []
        for event in accepted_events:
            for module in self.scenario.modules:
                if (module.id, event.instance_id) not in awake:
                    continue
                for directive in compile_directives(module, event, self.ledger, self.id_source):
                    fresh.append(directive)
                    self.directive_index[directive.id] = directive
                    self.summary.directives_issued += 1
                    self._emit(tick, "Compile", "DirectiveIssued", {
                        "directive": directive_to_packet(directive),
                    })

        # Deliver: one-shot tag-routed notification at the issue tick. The
        # directive stays in the active set until expiry so NPCs that
        # migrate into a matching tag later still see it when scoring.
        roster = [self.npcs[nid] for nid in self._order]
        for record in broadcast(fresh, roster):
            self._emit(tick, "Deliver", "DirectiveDelivered", {
                "directive": record.directive_id,
                "npcs": list(record.npc_ids),
                "count": len(record.npc_ids),
            })
        self.active_directives.extend(fresh)

        # Score: every NPC judges every live directive matching its tags.
        live = sorted(self.active_directives, key=lambda d: d.id)
        accepted_by_npc: dict[str, list[UtilityBreakdown]] = {}
        for npc_id in self._order:
            npc = self.npcs[npc_id]
            for directive in live:
                if not selector_matches(directive.selector, npc.tags):
                    continue
                binding = self.scenario.catalog[directive.action_id]
                breakdown = score_directive(npc, directive, binding, self.scenario.weights)
                self._emit(tick, "Score", "UtilityEvaluated", {
                    "npc": npc_id,
                    "directive": directive.id,
                    "action": directive.action_id,
                    "base_term": breakdown.base_term,
                    "trait_term": breakdown.trait_term,
                    "need_term": breakdown.need_term,
                    "risk_term": breakdown.risk_term,
                    "total": breakdown.total,
                    "threshold": breakdown.threshold,
                    "accepted": breakdown.accepted,
                })
                if breakdown.accepted:
                    accepted_by_npc.setdefault(npc_id, []).append(breakdown)

        # Act: exactly one action per NPC per tick.
        for npc_id in self._order:
            npc = self.npcs[npc_id]
            accepted = accepted_by_npc.get(npc_id, [])
            action_id = select_action(npc, accepted, self.scenario.tree, self.ledger, self.directive_index)
            best = best_breakdown(accepted)
            directive = self.directive_index[best.directive_id] if best is not None else None
            updated, events = execute_action(npc, self.scenario.catalog[action_id], tick, directive)
            self.npcs[npc_id] = updated
            self.last_action[npc_id] = action_id
            self.summary.actions_executed += 1
            for event in events:
                self.trace.emit(event)

        # Migrate: role FSM, at most one hop per NPC per tick.
        for npc_id in self._order:
            updated, events = migrate_tags(self.npcs[npc_id], self.scenario.migration_rules, tick)
            self.npcs[npc_id] = updated
            self.summary.migrations += len(events)
            for event in events:
                self.trace.emit(event)

        # A full-generative baseline prompts every NPC every tick; modeled
        # here by routing each NPC through the dialogue seam so the counter
        # and trace show what constant per-agent prompting would cost.
        if self.baseline_mode == "full-generative":
            for npc_id in self._order:
                self.request_dialogue(npc_id, "")

        self.summary.ticks = tick
        self.summary.llm_calls = self.counter.count

    def run(self, ticks: int) -> RunSummary:
        for _ in range(ticks):
            self.step()
        self.trace.close()
        return self.summary

    # -- dialogue seam -------------------------------------------------------

    def request_dialogue(self, npc_id: str, player_utterance: str, provider=None) -> str:
        """On-demand conversation with one NPC. Reads a snapshot, never
        writes simulation state; each call is counted and traced."""
        npc = self.npcs[npc_id]
        active_actions = tuple(
            d.action_id
            for d in sorted(self.active_directives, key=lambda d: d.id)
            if selector_matches(d.selector, npc.tags)
        )
        text, event = npc_request_dialogue(
            npc,
            player_utterance,
            provider or self.provider,
            self.counter,
            tick=self.ledger.tick,
            last_action=self.last_action.get(npc_id),
            active_events=tuple(ae.rule_id for ae in self.ledger.active_events),
            active_actions=active_actions,
        )
        self.trace.emit(event)
        self.summary.llm_calls = self.counter.count
        return text

    # -- helpers -------------------------------------------------------------

    def _emit(self, tick: int, phase: str, kind: str, payload: dict[str, Any]) -> None:
        self.trace.emit(TraceEvent(tick=tick, phase=phase, kind=kind, payload=payload))
