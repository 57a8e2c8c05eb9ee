"""Coordination layer: sparse module activation and directive compilation.

A domain module wakes only when one of its activation matchers recognises
the fired event or the current variable levels. An awake module compiles
its directive templates into group-level packets routed by tag selector.
Nothing here reads NPC state, so directive counts are independent of town
size by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from .core import (
    Directive,
    MacroEvent,
    NpcProfile,
    Scalar,
    TagSelector,
    VariablePredicate,
    WorldLedger,
    selector_matches,
)


@dataclass(frozen=True, slots=True)
class ActivationMatcher:
    """One way to wake a module: by the fired rule's id, by a variable level
    test, or both (conjunction when both are present)."""

    rule_id: Optional[str] = None
    condition: Optional[VariablePredicate] = None

    def matches(self, event: MacroEvent, ledger: WorldLedger) -> bool:
        if self.rule_id is not None and event.rule_id != self.rule_id:
            return False
        if self.condition is not None:
            pred = self.condition
            if pred.level is not None:
                actual, bound = ledger.level(pred.variable), pred.level
            else:
                actual, bound = ledger.intensity(pred.variable), pred.intensity
            if not (actual >= bound if pred.op == ">=" else actual <= bound):
                return False
        return self.rule_id is not None or self.condition is not None


@dataclass(frozen=True, slots=True)
class ParameterExpr:
    """Affine parameter: variable intensity * scale + offset."""

    variable: str
    scale: float = 1.0
    offset: float = 0.0

    def evaluate(self, ledger: WorldLedger) -> float:
        return ledger.intensity(self.variable) * self.scale + self.offset


@dataclass(frozen=True, slots=True)
class DirectiveTemplate:
    selector: TagSelector
    action_id: str
    parameters: dict[str, Union[Scalar, ParameterExpr]]
    base_priority: float
    risk: float
    ttl_ticks: int
    condition: Optional[VariablePredicate] = None  # compiled only when it holds


@dataclass(frozen=True, slots=True)
class DomainModuleSpec:
    id: str
    activation: tuple[ActivationMatcher, ...]  # any-of
    templates: tuple[DirectiveTemplate, ...]


@dataclass(frozen=True, slots=True)
class DeliveryRecord:
    directive_id: str
    npc_ids: tuple[str, ...]  # sorted
    tick: int


class DirectiveIdSource:
    """Monotonic counter; zero-padded so lexicographic order is issue order."""

    def __init__(self) -> None:
        self._next = 0

    def take(self) -> str:
        self._next += 1
        return f"d{self._next:06d}"


def route_activation(
    event: MacroEvent, ledger: WorldLedger, modules: tuple[DomainModuleSpec, ...]
) -> list[str]:
    """Ids of modules woken by this event, in module declaration order."""
    awake = []
    for module in modules:
        if any(m.matches(event, ledger) for m in module.activation):
            awake.append(module.id)
    return awake


def _template_applies(template: DirectiveTemplate, ledger: WorldLedger) -> bool:
    if template.condition is None:
        return True
    pred = template.condition
    if pred.level is not None:
        actual, bound = ledger.level(pred.variable), pred.level
    else:
        actual, bound = ledger.intensity(pred.variable), pred.intensity
    return actual >= bound if pred.op == ">=" else actual <= bound


def compile_directives(
    module: DomainModuleSpec,
    event: MacroEvent,
    ledger: WorldLedger,
    id_source: DirectiveIdSource,
) -> list[Directive]:
    """Instantiate the module's templates against the current ledger. One
    directive per template whose condition holds; ids are drawn in template
    order so issue order is reproducible."""
    issued: list[Directive] = []
    for template in module.templates:
        if not _template_applies(template, ledger):
            continue
        parameters: dict[str, Scalar] = {}
        for name, expr in template.parameters.items():
            if isinstance(expr, ParameterExpr):
                parameters[name] = expr.evaluate(ledger)
            else:
                parameters[name] = expr
        issued.append(
            Directive(
                id=id_source.take(),
                source_module=module.id,
                cause_event=event.instance_id,
                selector=template.selector,
                action_id=template.action_id,
                parameters=parameters,
                base_priority=template.base_priority,
                risk=template.risk,
                issued_tick=ledger.tick,
                ttl_ticks=template.ttl_ticks,
            )
        )
    return issued


def broadcast(directives: list[Directive], npcs: list[NpcProfile]) -> list[DeliveryRecord]:
    """Resolve each directive's tag selector against the roster. Any-mode
    matches on a non-empty intersection, all-mode on selector containment.
    Matched ids come back sorted; delivery happens at the issue tick."""
    records = []
    for directive in directives:
        matched = sorted(
            npc.id for npc in npcs if selector_matches(directive.selector, npc.tags)
        )
        records.append(DeliveryRecord(directive.id, tuple(matched), directive.issued_tick))
    return records


def expire_directives(active: list[Directive], tick: int) -> list[Directive]:
    """Keep directives still within their time-to-live at `tick`."""
    return [d for d in active if d.issued_tick + d.ttl_ticks > tick]
