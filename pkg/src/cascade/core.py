"""Shared value types for the simulation.

Everything here is an immutable record: updates go through
``dataclasses.replace`` or the pure functions in the layer modules.
Dict-valued fields are treated as frozen by convention; no code in this
package mutates one after construction.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Optional, Union

Scalar = Union[int, float, str]

TAG_PATTERN = re.compile(r"[A-Za-z][A-Za-z0-9_-]*\Z")

SEASONS = ("Dry", "Temperate", "Rainy")

COMPARATORS = (">=", "<=")


class InvariantViolation(RuntimeError):
    """An internal contract was broken; the run must abort."""


def clamp(value: float, lo: float, hi: float) -> float:
    return max(lo, min(hi, value))


def is_valid_tag(name: str) -> bool:
    return bool(TAG_PATTERN.match(name))


class Level(IntEnum):
    """Coarse ordinal reading of a causal variable's intensity."""

    NORMAL = 0
    ELEVATED = 1
    CRITICAL = 2

    @property
    def label(self) -> str:
        return self.name.capitalize()


LEVEL_BY_LABEL = {lv.label: lv for lv in Level}


@dataclass(frozen=True, slots=True)
class LevelThresholds:
    # Normal below `elevated`, Critical at or above `critical`.
    elevated: float = 0.4
    critical: float = 0.8


def level_for(intensity: float, thresholds: LevelThresholds) -> Level:
    if intensity >= thresholds.critical:
        return Level.CRITICAL
    if intensity >= thresholds.elevated:
        return Level.ELEVATED
    return Level.NORMAL


@dataclass(frozen=True, slots=True)
class CausalVariable:
    """A world-scale pressure tracked by the ledger, e.g. water scarcity."""

    name: str
    intensity: float  # always in [0, 1]
    history: tuple[tuple[int, float], ...] = ()

    def level(self, thresholds: LevelThresholds) -> Level:
        return level_for(self.intensity, thresholds)


@dataclass(frozen=True, slots=True)
class VariablePredicate:
    """Atomic trigger condition: compare a variable against a level or a raw
    intensity bound. Exactly one of `level` / `intensity` is set."""

    variable: str
    op: str  # ">=" or "<="
    level: Optional[Level] = None
    intensity: Optional[float] = None

    def describe(self) -> str:
        bound = self.level.label if self.level is not None else self.intensity
        return f"{self.variable} {self.op} {bound}"


@dataclass(frozen=True, slots=True)
class LedgerRequirement:
    """Consistency condition the critic checks before an event may fire."""

    field: str  # "season", "tick", or a variable name
    op: str  # "eq", "ne", "ge", "le"
    value: Scalar

    def describe(self) -> str:
        sym = {"eq": "==", "ne": "!=", "ge": ">=", "le": "<="}[self.op]
        return f"{self.field} {sym} {self.value}"


@dataclass(frozen=True, slots=True)
class Effect:
    variable: str
    delta_per_tick: float
    duration_ticks: int  # >= 1


@dataclass(frozen=True, slots=True)
class MacroEventRule:
    id: str
    name: str
    trigger: tuple[VariablePredicate, ...]
    consistency_requirements: tuple[LedgerRequirement, ...] = ()
    effects: tuple[Effect, ...] = ()
    cooldown_ticks: int = 0


@dataclass(frozen=True, slots=True)
class CriticVerdict:
    accepted: bool
    reason: str = ""  # empty iff accepted
    violated_requirement: Optional[str] = None

    @staticmethod
    def accept() -> "CriticVerdict":
        return CriticVerdict(accepted=True)

    @staticmethod
    def reject(reason: str, requirement: str) -> "CriticVerdict":
        return CriticVerdict(accepted=False, reason=reason, violated_requirement=requirement)


@dataclass(frozen=True, slots=True)
class MacroEvent:
    """One firing (or attempted firing) of a macro rule."""

    rule_id: str
    instance_id: str
    fired_tick: int
    trigger_snapshot: dict[str, float] = field(default_factory=dict)
    critic_verdict: Optional[CriticVerdict] = None


@dataclass(frozen=True, slots=True)
class ActiveEffect:
    variable: str
    delta_per_tick: float
    remaining_ticks: int


@dataclass(frozen=True, slots=True)
class ActiveEvent:
    instance_id: str
    rule_id: str
    effects: tuple[ActiveEffect, ...]

    def expired(self) -> bool:
        return all(e.remaining_ticks <= 0 for e in self.effects)


@dataclass(frozen=True, slots=True)
class WorldLedger:
    """Objective world state. Holds causal variables and the macro event log;
    never tracks individual NPC behaviour."""

    tick: int
    variables: dict[str, CausalVariable]
    season: str
    active_events: tuple[ActiveEvent, ...] = ()
    fired_log: tuple[MacroEvent, ...] = ()
    # Carried here so ledger-in/ledger-out operations can derive levels
    # without extra plumbing.
    thresholds: LevelThresholds = LevelThresholds()

    def intensity(self, variable: str) -> float:
        return self.variables[variable].intensity

    def level(self, variable: str) -> Level:
        return self.variables[variable].level(self.thresholds)


@dataclass(frozen=True, slots=True)
class TagSelector:
    mode: str  # "any" or "all"
    tags: tuple[str, ...]  # non-empty


def selector_matches(selector: TagSelector, npc_tags: tuple[str, ...]) -> bool:
    tag_set = set(npc_tags)
    if selector.mode == "any":
        return any(t in tag_set for t in selector.tags)
    return all(t in tag_set for t in selector.tags)


@dataclass(frozen=True, slots=True)
class Directive:
    """Group-level instruction compiled by a domain module, addressed to a
    tag population rather than to individual NPCs."""

    id: str
    source_module: str
    cause_event: str
    selector: TagSelector
    action_id: str
    parameters: dict[str, Scalar]
    base_priority: float  # in [0, 1]
    risk: float  # in [0, 1]
    issued_tick: int
    ttl_ticks: int  # >= 1


PACKET_FIELDS = (
    "id",
    "source_module",
    "cause_event",
    "selector_mode",
    "selector_tags",
    "action_id",
    "parameters",
    "base_priority",
    "risk",
    "issued_tick",
    "ttl_ticks",
)


def directive_to_packet(d: Directive) -> dict[str, Any]:
    """Wire form of a directive: the flat JSON object recorded in traces."""
    return {
        "id": d.id,
        "source_module": d.source_module,
        "cause_event": d.cause_event,
        "selector_mode": d.selector.mode,
        "selector_tags": sorted(d.selector.tags),
        "action_id": d.action_id,
        "parameters": dict(d.parameters),
        "base_priority": d.base_priority,
        "risk": d.risk,
        "issued_tick": d.issued_tick,
        "ttl_ticks": d.ttl_ticks,
    }


def directive_from_packet(packet: dict[str, Any]) -> Directive:
    return Directive(
        id=packet["id"],
        source_module=packet["source_module"],
        cause_event=packet["cause_event"],
        selector=TagSelector(packet["selector_mode"], tuple(packet["selector_tags"])),
        action_id=packet["action_id"],
        parameters=dict(packet["parameters"]),
        base_priority=packet["base_priority"],
        risk=packet["risk"],
        issued_tick=packet["issued_tick"],
        ttl_ticks=packet["ttl_ticks"],
    )


@dataclass(frozen=True, slots=True)
class NpcProfile:
    """One inhabitant. `tags` keeps authoring order but is treated as a set
    for matching; `role_tag` is the single tag the migration machinery owns."""

    id: str
    tags: tuple[str, ...]
    role_tag: str
    personality: dict[str, float] = field(default_factory=dict)  # values in [-1, 1]
    needs: dict[str, float] = field(default_factory=dict)  # values in [0, 1]
    local_state: dict[str, float] = field(default_factory=dict)  # must carry wealth >= 0
    # (from_tag, to_tag) of the most recent migration; hysteresis needs it.
    last_migration: Optional[tuple[str, str]] = None


def validate_profile(npc: NpcProfile) -> list[str]:
    """Check profile invariants. Returns violation messages with field paths;
    an empty list means the profile is valid."""
    problems: list[str] = []
    if not is_valid_tag(npc.id):
        problems.append(f"id: invalid identifier {npc.id!r}")
    if not npc.tags:
        problems.append("tags: non-empty set required")
    seen: set[str] = set()
    for i, tag in enumerate(npc.tags):
        if not is_valid_tag(tag):
            problems.append(f"tags[{i}]: invalid tag {tag!r}")
        if tag in seen:
            problems.append(f"tags[{i}]: duplicate tag {tag!r}")
        seen.add(tag)
    if npc.tags and npc.role_tag not in npc.tags:
        problems.append(f"role_tag: {npc.role_tag!r} not in tags")
    for trait, value in npc.personality.items():
        if not -1.0 <= value <= 1.0:
            problems.append(f"personality.{trait}: {value} out of [-1, 1]")
    for need, value in npc.needs.items():
        if not 0.0 <= value <= 1.0:
            problems.append(f"needs.{need}: {value} out of [0, 1]")
    if "wealth" not in npc.local_state:
        problems.append("local_state.wealth: required")
    elif npc.local_state["wealth"] < 0:
        problems.append(f"local_state.wealth: {npc.local_state['wealth']} must be >= 0")
    return problems


# --- serialization -----------------------------------------------------------
# Round-trip helpers for the record types that cross process boundaries
# (trace payloads, tests, tooling). from_dict(to_dict(x)) == x.


def variable_to_dict(v: CausalVariable) -> dict[str, Any]:
    return {
        "name": v.name,
        "intensity": v.intensity,
        "history": [[t, x] for t, x in v.history],
    }


def variable_from_dict(d: dict[str, Any]) -> CausalVariable:
    return CausalVariable(
        name=d["name"],
        intensity=d["intensity"],
        history=tuple((t, x) for t, x in d["history"]),
    )


def _predicate_to_dict(p: VariablePredicate) -> dict[str, Any]:
    out: dict[str, Any] = {"variable": p.variable, "op": p.op}
    if p.level is not None:
        out["level"] = p.level.label
    else:
        out["intensity"] = p.intensity
    return out


def _predicate_from_dict(d: dict[str, Any]) -> VariablePredicate:
    return VariablePredicate(
        variable=d["variable"],
        op=d["op"],
        level=LEVEL_BY_LABEL[d["level"]] if "level" in d else None,
        intensity=d.get("intensity"),
    )


def rule_to_dict(r: MacroEventRule) -> dict[str, Any]:
    return {
        "id": r.id,
        "name": r.name,
        "trigger": [_predicate_to_dict(p) for p in r.trigger],
        "consistency_requirements": [
            {"field": q.field, "op": q.op, "value": q.value}
            for q in r.consistency_requirements
        ],
        "effects": [
            {"variable": e.variable, "delta_per_tick": e.delta_per_tick, "duration_ticks": e.duration_ticks}
            for e in r.effects
        ],
        "cooldown_ticks": r.cooldown_ticks,
    }


def rule_from_dict(d: dict[str, Any]) -> MacroEventRule:
    return MacroEventRule(
        id=d["id"],
        name=d["name"],
        trigger=tuple(_predicate_from_dict(p) for p in d["trigger"]),
        consistency_requirements=tuple(
            LedgerRequirement(q["field"], q["op"], q["value"])
            for q in d["consistency_requirements"]
        ),
        effects=tuple(
            Effect(e["variable"], e["delta_per_tick"], e["duration_ticks"])
            for e in d["effects"]
        ),
        cooldown_ticks=d["cooldown_ticks"],
    )


def event_to_dict(ev: MacroEvent) -> dict[str, Any]:
    out: dict[str, Any] = {
        "rule_id": ev.rule_id,
        "instance_id": ev.instance_id,
        "fired_tick": ev.fired_tick,
        "trigger_snapshot": dict(ev.trigger_snapshot),
    }
    if ev.critic_verdict is not None:
        out["critic_verdict"] = {
            "accepted": ev.critic_verdict.accepted,
            "reason": ev.critic_verdict.reason,
            "violated_requirement": ev.critic_verdict.violated_requirement,
        }
    return out


def event_from_dict(d: dict[str, Any]) -> MacroEvent:
    verdict = None
    if "critic_verdict" in d:
        v = d["critic_verdict"]
        verdict = CriticVerdict(v["accepted"], v["reason"], v["violated_requirement"])
    return MacroEvent(
        rule_id=d["rule_id"],
        instance_id=d["instance_id"],
        fired_tick=d["fired_tick"],
        trigger_snapshot=dict(d["trigger_snapshot"]),
        critic_verdict=verdict,
    )


def ledger_to_dict(ledger: WorldLedger) -> dict[str, Any]:
    return {
        "tick": ledger.tick,
        "season": ledger.season,
        "variables": {name: variable_to_dict(v) for name, v in sorted(ledger.variables.items())},
        "active_events": [
            {
                "instance_id": ae.instance_id,
                "rule_id": ae.rule_id,
                "effects": [
                    {"variable": e.variable, "delta_per_tick": e.delta_per_tick, "remaining_ticks": e.remaining_ticks}
                    for e in ae.effects
                ],
            }
            for ae in ledger.active_events
        ],
        "fired_log": [event_to_dict(ev) for ev in ledger.fired_log],
        "thresholds": {"elevated": ledger.thresholds.elevated, "critical": ledger.thresholds.critical},
    }


def ledger_from_dict(d: dict[str, Any]) -> WorldLedger:
    return WorldLedger(
        tick=d["tick"],
        season=d["season"],
        variables={name: variable_from_dict(v) for name, v in d["variables"].items()},
        active_events=tuple(
            ActiveEvent(
                instance_id=ae["instance_id"],
                rule_id=ae["rule_id"],
                effects=tuple(
                    ActiveEffect(e["variable"], e["delta_per_tick"], e["remaining_ticks"])
                    for e in ae["effects"]
                ),
            )
            for ae in d["active_events"]
        ),
        fired_log=tuple(event_from_dict(ev) for ev in d["fired_log"]),
        thresholds=LevelThresholds(d["thresholds"]["elevated"], d["thresholds"]["critical"]),
    )


def profile_to_dict(npc: NpcProfile) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": npc.id,
        "tags": list(npc.tags),
        "role_tag": npc.role_tag,
        "personality": dict(npc.personality),
        "needs": dict(npc.needs),
        "local_state": dict(npc.local_state),
    }
    if npc.last_migration is not None:
        out["last_migration"] = list(npc.last_migration)
    return out


def profile_from_dict(d: dict[str, Any]) -> NpcProfile:
    last = d.get("last_migration")
    return NpcProfile(
        id=d["id"],
        tags=tuple(d["tags"]),
        role_tag=d["role_tag"],
        personality=dict(d["personality"]),
        needs=dict(d["needs"]),
        local_state=dict(d["local_state"]),
        last_migration=(last[0], last[1]) if last is not None else None,
    )


