"""Behavior trees: evaluation semantics, static guarantees, leaf listing."""

from __future__ import annotations

import pytest

from cascade.behavior import (
    ActionLeaf,
    Condition,
    Selector,
    Sequence,
    evaluate,
    guarantees_action,
    leaf_action_ids,
)
from cascade.core import CausalVariable, NpcProfile, WorldLedger

LEDGER = WorldLedger(
    tick=0,
    variables={"water_scarcity": CausalVariable("water_scarcity", 0.85)},
    season="Dry",
)


def npc(**overrides) -> NpcProfile:
    base = dict(
        id="solo",
        tags=("Villager",),
        role_tag="Villager",
        personality={"diligence": 0.5},
        needs={"hunger": 0.3},
        local_state={"wealth": 10.0},
    )
    base.update(overrides)
    return NpcProfile(**base)


def test_leaf_always_yields_its_action():
    assert evaluate(ActionLeaf("idle"), npc(), LEDGER) == "idle"


def test_bare_condition_yields_nothing():
    node = Condition("needs.hunger", ">", 0.1)
    assert node.holds(npc(), LEDGER)
    assert evaluate(node, npc(), LEDGER) is None


def test_selector_takes_first_child_that_yields():
    tree = Selector((
        Sequence((Condition("needs.hunger", ">", 0.7), ActionLeaf("eat"))),
        ActionLeaf("idle"),
    ))
    assert evaluate(tree, npc(needs={"hunger": 0.8}), LEDGER) == "eat"
    assert evaluate(tree, npc(needs={"hunger": 0.3}), LEDGER) == "idle"


def test_sequence_fails_when_a_condition_fails():
    tree = Sequence((Condition("state.wealth", "<", 5), ActionLeaf("beg")))
    assert evaluate(tree, npc(local_state={"wealth": 10.0}), LEDGER) is None
    assert evaluate(tree, npc(local_state={"wealth": 3.0}), LEDGER) == "beg"


def test_sequence_fails_when_a_child_node_fails():
    failing_child = Sequence((Condition("needs.hunger", ">", 0.9),))
    tree = Sequence((failing_child, ActionLeaf("eat")))
    assert evaluate(tree, npc(), LEDGER) is None


def test_sequence_yields_the_last_produced_action():
    tree = Sequence((ActionLeaf("wash"), ActionLeaf("eat")))
    assert evaluate(tree, npc(), LEDGER) == "eat"


def test_sequence_of_passing_conditions_produces_nothing():
    tree = Sequence((Condition("needs.hunger", ">", 0.1), Condition("state.wealth", ">", 1)))
    assert evaluate(tree, npc(), LEDGER) is None


def test_condition_namespaces():
    subject = npc(personality={"greed": -0.2}, needs={"hunger": 0.6}, local_state={"wealth": 4.0})
    assert Condition("needs.hunger", ">=", 0.6).holds(subject, LEDGER)
    assert Condition("state.wealth", "<=", 4).holds(subject, LEDGER)
    assert Condition("personality.greed", "<", 0).holds(subject, LEDGER)
    assert Condition("var.water_scarcity", ">", 0.8).holds(subject, LEDGER)


def test_condition_missing_keys_read_as_zero():
    subject = npc(personality={}, needs={}, local_state={"wealth": 1.0})
    assert Condition("needs.hunger", "<=", 0).holds(subject, LEDGER)
    assert not Condition("personality.greed", ">", 0).holds(subject, LEDGER)


def test_condition_unknown_namespace_raises():
    with pytest.raises(KeyError):
        Condition("mood.happy", ">", 0).holds(npc(), LEDGER)


def test_guarantees_action_shapes():
    assert guarantees_action(ActionLeaf("idle"))
    assert not guarantees_action(Condition("needs.hunger", ">", 0.5))
    assert guarantees_action(Sequence((ActionLeaf("wash"), ActionLeaf("eat"))))
    assert not guarantees_action(Sequence(()))
    assert not guarantees_action(Sequence((Condition("needs.hunger", ">", 0.5), ActionLeaf("eat"))))
    assert guarantees_action(Selector((
        Sequence((Condition("needs.hunger", ">", 0.5), ActionLeaf("eat"))),
        ActionLeaf("idle"),
    )))
    assert not guarantees_action(Selector((Condition("needs.hunger", ">", 0.5),)))


def test_leaf_action_ids_depth_first():
    tree = Selector((
        Sequence((Condition("needs.hunger", ">", 0.7), ActionLeaf("eat"))),
        Selector((ActionLeaf("stroll"), ActionLeaf("idle"))),
    ))
    assert leaf_action_ids(tree) == ["eat", "stroll", "idle"]


def test_golden_tree_matches_the_hunger_fallback(golden):
    assert isinstance(golden.tree, Selector)
    assert leaf_action_ids(golden.tree) == ["eat", "idle"]
    hungry = npc(needs={"hunger": 0.9})
    sated = npc(needs={"hunger": 0.2})
    assert evaluate(golden.tree, hungry, LEDGER) == "eat"
    assert evaluate(golden.tree, sated, LEDGER) == "idle"
