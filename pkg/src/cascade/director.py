"""Macro layer: narrative clock, threshold rules, causal critic.

Every operation is a pure ledger-in/ledger-out transformation. Per tick the
order is fixed: drift -> active-event effects -> rule evaluation -> critic
-> apply. Randomness enters only through optional drift noise, drawn from
the run's single generator.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Optional

from .core import (
    ActiveEffect,
    ActiveEvent,
    CriticVerdict,
    InvariantViolation,
    LEVEL_BY_LABEL,
    Level,
    MacroEvent,
    MacroEventRule,
    WorldLedger,
    clamp,
)


@dataclass(frozen=True, slots=True)
class DriftEntry:
    variable: str
    delta_per_tick: float
    start_tick: int
    end_tick: int  # inclusive; start_tick <= end_tick
    noise: float = 0.0  # uniform +/- amplitude added to the delta when > 0


@dataclass(frozen=True, slots=True)
class DriftSchedule:
    entries: tuple[DriftEntry, ...] = ()


def advance_clock(
    ledger: WorldLedger,
    drifts: DriftSchedule,
    rng: Optional[random.Random] = None,
) -> WorldLedger:
    """Advance one tick: apply in-window drifts, then active-event effects,
    clamping intensity to [0, 1]. One history entry per changed variable.
    Active events whose effect counters are exhausted drop out."""
    tick = ledger.tick + 1
    intensities = {name: v.intensity for name, v in ledger.variables.items()}
    start = dict(intensities)

    # Drift window test uses the tick being entered.
    for entry in drifts.entries:
        if entry.start_tick <= tick <= entry.end_tick:
            delta = entry.delta_per_tick
            if entry.noise > 0.0 and rng is not None:
                delta += rng.uniform(-entry.noise, entry.noise)
            if entry.variable not in intensities:
                raise KeyError(f"drift references unknown variable {entry.variable!r}")
            intensities[entry.variable] = clamp(intensities[entry.variable] + delta, 0.0, 1.0)

    remaining_events: list[ActiveEvent] = []
    for active in ledger.active_events:
        new_effects: list[ActiveEffect] = []
        for eff in active.effects:
            if eff.remaining_ticks > 0:
                if eff.variable not in intensities:
                    raise KeyError(f"effect references unknown variable {eff.variable!r}")
                intensities[eff.variable] = clamp(
                    intensities[eff.variable] + eff.delta_per_tick, 0.0, 1.0
                )
                new_effects.append(replace(eff, remaining_ticks=eff.remaining_ticks - 1))
            else:
                new_effects.append(eff)
        updated = ActiveEvent(active.instance_id, active.rule_id, tuple(new_effects))
        if not updated.expired():
            remaining_events.append(updated)

    variables = {}
    for name, var in ledger.variables.items():
        value = intensities[name]
        if value != start[name]:
            variables[name] = replace(var, intensity=value, history=var.history + ((tick, value),))
        else:
            variables[name] = var

    return replace(
        ledger,
        tick=tick,
        variables=variables,
        active_events=tuple(remaining_events),
    )


def _predicate_holds(pred, ledger: WorldLedger) -> bool:
    if pred.level is not None:
        actual, bound = ledger.level(pred.variable), pred.level
    else:
        actual, bound = ledger.intensity(pred.variable), pred.intensity
    return actual >= bound if pred.op == ">=" else actual <= bound


def evaluate_rules(ledger: WorldLedger, rules: tuple[MacroEventRule, ...]) -> list[MacroEvent]:
    """Return candidate events for rules whose full trigger conjunction holds,
    which are not currently active, and whose cooldown has elapsed. Candidates
    come back ordered by rule id; each carries a snapshot of the trigger
    variables' intensities."""
    active_rule_ids = {ae.rule_id for ae in ledger.active_events}
    last_fired: dict[str, int] = {}
    for ev in ledger.fired_log:
        last_fired[ev.rule_id] = ev.fired_tick

    candidates: list[MacroEvent] = []
    for rule in sorted(rules, key=lambda r: r.id):
        if not rule.trigger:
            continue  # a rule with no trigger never fires
        if rule.id in active_rule_ids:
            continue
        if rule.id in last_fired and ledger.tick - last_fired[rule.id] <= rule.cooldown_ticks:
            continue
        if all(_predicate_holds(p, ledger) for p in rule.trigger):
            snapshot = {p.variable: ledger.intensity(p.variable) for p in rule.trigger}
            candidates.append(
                MacroEvent(
                    rule_id=rule.id,
                    instance_id=f"{rule.id}@{ledger.tick}",
                    fired_tick=ledger.tick,
                    trigger_snapshot=snapshot,
                )
            )
    return candidates


_REQ_OPS = {
    "eq": lambda a, b: a == b,
    "ne": lambda a, b: a != b,
    "ge": lambda a, b: a >= b,
    "le": lambda a, b: a <= b,
}


def _requirement_holds(req, ledger: WorldLedger) -> tuple[bool, str]:
    """Evaluate one consistency requirement; returns (holds, actual shown)."""
    if req.field == "season":
        actual: object = ledger.season
        display = ledger.season
    elif req.field == "tick":
        actual = ledger.tick
        display = str(ledger.tick)
    elif req.field in ledger.variables:
        if isinstance(req.value, str):  # compare at level granularity
            actual = ledger.level(req.field)
            display = ledger.level(req.field).label
        else:
            actual = ledger.intensity(req.field)
            display = str(actual)
    else:
        # Unknown fields never hold; the scenario validator rejects them first.
        return False, f"<unknown field {req.field!r}>"
    value = LEVEL_BY_LABEL[req.value] if isinstance(actual, Level) else req.value
    return _REQ_OPS[req.op](actual, value), display


def critic_check(candidate: MacroEvent, rule: MacroEventRule, ledger: WorldLedger) -> CriticVerdict:
    """Gate a candidate against the rule's consistency requirements. The first
    violated requirement (declaration order) becomes the rejection reason."""
    for req in rule.consistency_requirements:
        holds, actual = _requirement_holds(req, ledger)
        if not holds:
            return CriticVerdict.reject(
                reason=f"{req.field} is {actual}",
                requirement=req.describe(),
            )
    return CriticVerdict.accept()


def apply_event(ledger: WorldLedger, event: MacroEvent, rule: MacroEventRule) -> WorldLedger:
    """Commit an accepted event: append to the fired log and register its
    effects for their durations. Applying a rejected event is a fault."""
    if event.critic_verdict is None or not event.critic_verdict.accepted:
        raise InvariantViolation(
            f"apply_event: event {event.instance_id!r} was not accepted by the critic"
        )
    active = ActiveEvent(
        instance_id=event.instance_id,
        rule_id=event.rule_id,
        effects=tuple(
            ActiveEffect(e.variable, e.delta_per_tick, e.duration_ticks) for e in rule.effects
        ),
    )
    return replace(
        ledger,
        active_events=ledger.active_events + (active,),
        fired_log=ledger.fired_log + (event,),
    )
