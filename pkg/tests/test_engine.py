import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from _oracles import flood_cap_run, inertia_run
from ecexpect.engine import (
    Engine,
    QueryError,
    RuleError,
    load_default_rules,
    parse_rules,
)
from ecexpect.terms import Atom, Num, ParseError, parse_term

T = parse_term
CONSTANTS = {"initial_house_on_plain_value": 300, "flood_causes_damage": 100}


def fl(*texts):
    return frozenset(T(x) for x in texts)


def default_engine(**constants):
    return Engine(load_default_rules(), constants={**CONSTANTS, **constants})


# -- rule files ------------------------------------------------------------


def test_default_rules_load():
    rules = load_default_rules()
    kinds = {r.kind for r in rules}
    assert kinds == {"initiates", "terminates"}
    heads = {str(r.event).split("(")[0] for r in rules}
    for event in ("join", "receive_income", "change_role", "flood", "taxed", "compensate", "consumed", "repair"):
        assert event in heads


def test_rule_text_round_trip():
    rules = load_default_rules()
    again = parse_rules("\n".join(str(r) for r in rules))
    assert [(r.kind, r.event, r.fluent, r.body) for r in again] == [(r.kind, r.event, r.fluent, r.body) for r in rules]


def test_unsafe_rule_rejected_at_load():
    with pytest.raises(RuleError, match="never bound"):
        parse_rules("initiates(e(A), f(A, B)).")
    with pytest.raises(RuleError):
        parse_rules("initiates(e, f(_)).")
    # variables under exp_rule belong to the stored rule
    parse_rules("initiates(e, exp_rule(p(A), q(A))).")


def test_bad_rule_syntax():
    with pytest.raises(ParseError):
        parse_rules("happens(e, f).")
    with pytest.raises(ParseError):
        parse_rules("initiates(e, f) :- maybe(x).")
    with pytest.raises(ParseError):
        parse_rules("initiates(e, f)")


def test_terminates_with_unbound_variable_rejected():
    with pytest.raises(RuleError):
        parse_rules("terminates(e, f(X)).")


# -- initially / queries ---------------------------------------------------


def test_initially():
    e = Engine([])
    e.initially([T("wealth(c1, 0)")])
    assert e.holds_at(T("wealth(c1, 0)"), 0) == [{}]
    e = Engine([]).initially([])
    assert e.state(0).fluents == frozenset()
    e = Engine([]).initially(fl("member(c1, citizens)", "location(c1, plateau)"))
    assert e.holds_at(T("member(c1, citizens)"), 0) and e.holds_at(T("location(c1, plateau)"), 0)


def test_initially_rejects_non_ground():
    with pytest.raises(ValueError):
        Engine([]).initially([T("wealth(c1, W)")])


def test_initially_only_before_stepping():
    e = Engine([])
    e.step([], "init")
    with pytest.raises(RuntimeError):
        e.initially([])


def test_holds_at_queries():
    e = Engine([]).initially(fl("damage(c1, 100)", "location(c1, plateau)", "location(c2, plateau)"))
    assert e.holds_at(T("damage(A, D)"), 0) == [{"A": Atom("c1"), "D": Num(100)}]
    assert e.holds_at(T("location(c9, plain)"), 0) == []
    assert len(e.holds_at(T("location(A, plateau)"), 0)) == 2
    with pytest.raises(QueryError):
        e.holds_at(T("x"), 3)


def test_happened_queries():
    e = Engine([])
    e.step(fl("flood", "compensate(c1, 100)"), "init")
    assert e.happened(T("flood"), 0) == [{}]
    assert e.happened(T("compensate(A, _)"), 0) == [{"A": Atom("c1")}]
    assert e.happened(T("punish(c1)"), 0) == []
    assert e.happened(T("flood"), 1) == []
    with pytest.raises(QueryError):
        e.happened(T("flood"), 2)


def test_labels_are_checked():
    e = Engine([], labels=frozenset({"init", "a"}))
    e.step([], "a")
    with pytest.raises(ValueError):
        e.step([], "b")


def test_events_must_be_ground():
    with pytest.raises(ValueError):
        Engine([]).step([T("flood(X)")], "init")


# -- effect examples -------------------------------------------------------


def test_receive_income():
    e = default_engine().initially(fl("wealth(c1, 300)"))
    e.step(fl("receive_income(c1, 100)"), "init")
    assert T("wealth(c1, 400)") in e.current
    assert T("wealth(c1, 300)") not in e.current


def test_flood_accumulates_up_to_house_value():
    e = default_engine().initially(fl("damage(c1, 250)", "location(c1, plain)"))
    e.step(fl("flood"), "init")
    assert e.holds_at(T("damage(c1, D)")) == [{"D": Num(300)}]


def test_first_flood_capped_when_damage_exceeds_value():
    e = default_engine(flood_causes_damage=500).initially(fl("location(c1, plain)"))
    e.step(fl("flood"), "init")
    assert e.holds_at(T("damage(c1, D)")) == [{"D": Num(300)}]


def test_flood_spares_the_plateau():
    e = default_engine().initially(fl("location(c1, plateau)"))
    e.step(fl("flood"), "init")
    assert e.holds_at(T("damage(_, _)")) == []


def test_no_events_keeps_state():
    e = default_engine().initially(fl("wealth(c1, 3)", "location(c1, plain)"))
    e.step([], "init")
    assert e.state(1).fluents == e.state(0).fluents


def test_initiation_wins_over_termination():
    rules = parse_rules("initiates(e, f). terminates(e, f).")
    e = Engine(rules).initially(fl("f"))
    e.step(fl("e"), "init")
    assert T("f") in e.current


def test_multiple_body_solutions_fire_once_each():
    rules = parse_rules("initiates(go, seen(X)) :- holds_at(item(X)).")
    e = Engine(rules).initially(fl("item(a)", "item(b)"))
    e.step(fl("go"), "init")
    assert e.holds_at(T("seen(X)")) == [{"X": Atom("a")}, {"X": Atom("b")}]


def test_unknown_constant_is_a_rule_error():
    rules = parse_rules("initiates(go, v(X)) :- const(missing, X).")
    with pytest.raises(RuleError):
        Engine(rules).step(fl("go"), "init")


def test_government_join_installs_the_promise():
    e = default_engine()
    e.step(fl("join(government_agent, government, rulesbasedregimerole)"), "init")
    assert e.holds_at(T("exp_rule(damage(A, _), not(happ(compensate(A, _))))"))
    e = default_engine()
    e.step(fl("join(government_agent, government, discretionarybasedregimerole)"), "init")
    assert not e.holds_at(T("exp_rule(_, _)"))


def test_change_role_requires_membership():
    e = default_engine().initially(fl("location(c1, plateau)"))
    e.step(fl("change_role(c1, citizens, citizens_plateaudwellerrole, citizens_plaindwellerrole)"), "init")
    # not a member: the old location is dropped but no new one is initiated
    assert e.holds_at(T("location(c1, L)")) == []


def test_repair_partial_and_exact():
    e = default_engine().initially(fl("wealth(c1, 500)", "damage(c1, 120)", "wealth(c2, 40)", "damage(c2, 40)"))
    e.step(fl("repair(c1, 100)", "repair(c2, 40)"), "init")
    assert e.holds_at(T("damage(A, D)")) == [{"A": Atom("c1"), "D": Num(20)}]
    assert set(map(str, e.current.fluents)) == {"wealth(c1, 400)", "wealth(c2, 0)", "damage(c1, 20)"}


def test_determinism():
    events = [fl("receive_income(c1, 400)"), fl("flood"), fl("consumed(c1)")]

    def replay():
        e = default_engine().initially(fl("wealth(c1, 0)", "location(c1, plain)"))
        for ev in events:
            e.step(ev, "init")
        return e.states

    assert replay() == replay()


# -- hand-computed two-round table -----------------------------------------
#
# Discretionary regime, c1 on the plain and c2 on the plateau. Round 1 floods
# and the government compensates c1 from a tax on c2. In round 2 c2 moves to
# the plain, the flood hits both and nobody can be taxed; c1 only half repairs.

JOINS = fl(
    "join(government_agent, government, discretionarybasedregimerole)",
    "join(c1, citizens, citizens_plaindwellerrole)",
    "join(c2, citizens, citizens_plateaudwellerrole)",
)
TABLE = [
    # (label, events, expected dynamic fluents after the tick)
    ("init", JOINS, {"wealth(c1, 0)", "wealth(c2, 0)", "location(c1, plain)", "location(c2, plateau)"}),
    ("receive_income", fl("receive_income(c1, 400)", "receive_income(c2, 400)"), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plateau)"}),
    ("choose_location", fl(), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plateau)"}),
    ("flood", fl("flood"), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plateau)", "damage(c1, 100)"}),
    ("tax_compensate", fl("compensate(c1, 100)", "taxed(c2, 100)"), {"wealth(c1, 500)", "wealth(c2, 300)", "location(c1, plain)", "location(c2, plateau)", "damage(c1, 100)"}),
    ("repair", fl("repair(c1, 100)"), {"wealth(c1, 400)", "wealth(c2, 300)", "location(c1, plain)", "location(c2, plateau)"}),
    ("consume", fl("consumed(c1)", "consumed(c2)"), {"wealth(c1, 0)", "wealth(c2, 0)", "location(c1, plain)", "location(c2, plateau)"}),
    ("receive_income", fl("receive_income(c1, 400)", "receive_income(c2, 400)"), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plateau)"}),
    ("choose_location", fl("change_role(c2, citizens, citizens_plateaudwellerrole, citizens_plaindwellerrole)"), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plain)"}),
    ("flood", fl("flood"), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plain)", "damage(c1, 100)", "damage(c2, 100)"}),
    ("tax_compensate", fl(), {"wealth(c1, 400)", "wealth(c2, 400)", "location(c1, plain)", "location(c2, plain)", "damage(c1, 100)", "damage(c2, 100)"}),
    ("repair", fl("repair(c1, 50)", "repair(c2, 100)"), {"wealth(c1, 350)", "wealth(c2, 300)", "location(c1, plain)", "location(c2, plain)", "damage(c1, 50)"}),
    ("consume", fl("consumed(c1)", "consumed(c2)"), {"wealth(c1, 0)", "wealth(c2, 0)", "location(c1, plain)", "location(c2, plain)", "damage(c1, 50)"}),
]
DYNAMIC = ("wealth", "location", "damage")


def test_two_round_table():
    e = default_engine().initially(fl("wealth(c1, 0)", "wealth(c2, 0)"))
    labels = [row[0] for row in TABLE[1:]] + ["receive_income"]
    for (label, events, expected), nxt in zip(TABLE, labels):
        assert e.current.label == label
        e.step(events, nxt)
        got = {str(f) for f in e.current.fluents if f.functor in DYNAMIC}
        assert got == expected, f"after {label} at tick {e.time - 1}"
    roles = {str(f) for f in e.current.fluents if f.functor == "role"}
    assert roles == {
        "role(government_agent, government, discretionarybasedregimerole)",
        "role(c1, citizens, citizens_plaindwellerrole)",
        "role(c2, citizens, citizens_plaindwellerrole)",
    }
    assert len(e.states) == len(TABLE) + 1


# -- randomized properties ---------------------------------------------------


def test_inertia_random_runs():
    rng = random.Random(2024)
    assert sum(not inertia_run(rng) for _ in range(1000)) == 0


@given(st.lists(st.sampled_from(["receive_income(c1, 10)", "flood", "taxed(c1, 3)", "compensate(c1, 5)", "consumed(c1)"]), max_size=12))
def test_wealth_is_functional(events):
    # exactly one wealth fluent per citizen whatever happens
    e = default_engine().initially(fl("wealth(c1, 0)", "location(c1, plain)"))
    for ev in events:
        e.step(fl(ev), "init")
        assert len(e.holds_at(T("wealth(c1, W)"))) == 1


def test_flood_cap_random_runs():
    rng = random.Random(11)
    assert sum(not flood_cap_run(rng) for _ in range(1000)) == 0
