from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempora.errors import IllegalStep, InvalidConfiguration, NegativeEpsilon, UnboundVariable
from tempora.lang import SpecError, parse, parse_configuration as cfg
from tempora.semantics import (
    Configuration,
    apply_instance,
    applicable_instances,
    classify_facts,
    constraint_profile,
    equivalence_key,
    equivalent,
    eval_constraint,
    immediate_successor_reps,
    is_immediate_successor,
    matches_spec,
    smallest_dmax,
    steps_for_delay,
    tick,
    tick_positions,
    time_events,
)
from tempora.terms import Constraint, Nonce, Substitution

F = Fraction


def test_eval_constraint():
    assert eval_constraint(Constraint("T", ">", "T1", 2), {"T": F(9, 2), "T1": F(1)})
    assert eval_constraint(Constraint("T", "=", "T1", -1), {"T": F(2), "T1": F(3)})
    assert eval_constraint(Constraint("T", ">=", "T1"), {"T": F(1), "T1": F(1)})
    with pytest.raises(UnboundVariable):
        eval_constraint(Constraint("T", ">", "T1"), {"T": F(1)})


def test_configuration_needs_one_time():
    with pytest.raises(InvalidConfiguration):
        Configuration.of()
    with pytest.raises(SpecError):
        cfg("{Time@0, Time@1}")
    with pytest.raises(SpecError):
        cfg("{F@1}")


def test_tick():
    s = cfg("{Time@1.5, F@3.5}")
    assert tick(s, 3) == cfg("{Time@4.5, F@3.5}")
    assert tick(s, 0) == s
    with pytest.raises(NegativeEpsilon):
        tick(s, -1)


@pytest.mark.parametrize("numbers, expected", [([3.5, 2, 1], 5), ([0], 2), ([3], 5)])
def test_smallest_dmax(numbers, expected):
    assert smallest_dmax(numbers) == expected


AGE = parse("""
init { Time@2, F(a)@0.4 }
rule age: Time@T, F(X)@T1 | T >= T1 + 1 -o Time@T, G(X)@(T+2)
rule mint: Time@T, F(X)@T1 -o exists N. Time@T, S(N)@(T+1)
""")


def test_rule_application_examples():
    age = AGE.rule("age")
    [(sub, res)] = applicable_instances(age, cfg("{Time@2, F(a)@0.4}"))
    assert res == cfg("{Time@2, G(a)@4}")
    assert applicable_instances(age, cfg("{Time@1, F(a)@0.4}")) == []
    [(sub, res)] = applicable_instances(AGE.rule("mint"), cfg("{Time@0, F(a)@0}"))
    assert res == cfg("{Time@0, S(n1)@1}")
    assert sub.terms["N"] == Nonce("n1")


def test_fresh_nonce_avoids_live_names():
    [(sub, res)] = applicable_instances(AGE.rule("mint"), cfg("{Time@0, F(n1)@0, S(n1)@0}"))
    assert sub.terms["N"] == Nonce("n2")


def test_apply_instance_rejects_bad_substitutions():
    age = AGE.rule("age")
    s = cfg("{Time@2, F(a)@0.4}")
    [(sub, res)] = applicable_instances(age, s)
    assert apply_instance(age, s, sub) == res
    late = Substitution(sub.terms, {**sub.times, "T": F(3)})
    with pytest.raises(IllegalStep):
        apply_instance(age, s, late)
    with pytest.raises(IllegalStep):
        apply_instance(age, cfg("{Time@1, F(a)@0.4}"),
                       Substitution(sub.terms, {"T": F(1), "T1": F(2, 5)}))


def test_equivalence_examples():
    assert equivalent(cfg("{Time@1, Q@1.54, S@2.4}"), cfg("{Time@1.12, Q@1.66, S@2.52}"), 3)
    assert equivalent(cfg("{Time@0}"), cfg("{Time@5}"), 1)
    assert not equivalent(cfg("{Time@2, F@0.4}"), cfg("{Time@2.4, F@0.4}"), 3)
    assert equivalent(cfg("{Time@0, P(n1)@1}"), cfg("{Time@0, P(n5)@1}"), 2)


def test_matches_spec_examples():
    spec = parse("init {Time@0} critical { Time@T, F@T1 | T1 = T }").critical
    assert matches_spec(cfg("{Time@3.5, F@3.5}"), spec)
    assert not matches_spec(cfg("{Time@4.5, F@3.5}"), spec)
    renamed = parse("init {Time@0} goal { P(n2)@T }").goal
    assert matches_spec(cfg("{Time@1, P(n1)@1}"), renamed)


def test_constraint_profile_examples():
    p = constraint_profile(cfg("{Time@2, H@1}"), 2)
    assert ("Time", "=", "H", 1) in p.constraints()
    q = constraint_profile(cfg("{Time@2.05, H@1}"), 2)
    assert ("Time", ">", "H", 1) in q.constraints()
    assert ("Time", "=", "H", 1) not in q.constraints()
    s = cfg("{Time@2, F@0.4}")
    assert constraint_profile(s, 3) == constraint_profile(tick(s, 0), 3)


def test_classify_facts():
    kinds = dict((str(tf.fact), k) for tf, k in classify_facts(cfg("{Time@1, A@0, B@1, C@2}")))
    assert kinds == {"A": "past", "B": "present", "C": "future"}


RUNNING = cfg("{Time@2, F@0.4, G@2.5, H@1}")


def test_immediate_successor_examples():
    r = immediate_successor_reps(RUNNING, 4)
    assert r.kind == "boundary" and r.epsilon == F(2, 5)
    assert equivalent(r.representative, cfg("{Time@2.05, F@0.4, G@2.5, H@1}"), 4)
    r2 = immediate_successor_reps(cfg("{Time@2.15, F@0.4, G@2.5, H@1}"), 4)
    assert r2.kind == "open"
    assert r2.representative == cfg("{Time@2.4, F@0.4, G@2.5, H@1}")
    # both 2.05 and 2.15 are immediate successors of Time@2; 2.4 is not
    assert is_immediate_successor(RUNNING, tick(RUNNING, F(1, 20)), 4)
    assert is_immediate_successor(RUNNING, tick(RUNNING, F(3, 20)), 4)
    assert not is_immediate_successor(RUNNING, tick(RUNNING, F(2, 5)), 4)


def test_lonely_time_has_no_events():
    s = cfg("{Time@3}")
    r = immediate_successor_reps(s, 2)
    assert r.epsilon is None and r.kind == "open" and r.representative is None
    assert equivalent(s, tick(s, 7), 2)


def test_tick_positions_and_inverse():
    assert [tick_positions(RUNNING, n) for n in (1, 2, 3, 4)] == [F(1, 5), F(2, 5), F(9, 20), F(1, 2)]
    for n in range(1, 12):
        assert steps_for_delay(RUNNING, tick_positions(RUNNING, n)) == n


# -- properties --------------------------------------------------------------------

stamps = st.fractions(min_value=0, max_value=6, max_denominator=4)
names = st.sampled_from(["P", "Q", "P(n1)", "P(n2)"])


@st.composite
def configurations(draw, max_facts=4):
    items = draw(st.lists(st.tuples(names, stamps), max_size=max_facts - 1))
    t = draw(stamps)
    body = ", ".join(f"{n}@{q}" for n, q in items + [("Time", t)])
    return cfg("{" + body + "}")


@settings(max_examples=300, deadline=None)
@given(configurations(), st.fractions(0, 3, max_denominator=6), st.fractions(0, 3, max_denominator=6))
def test_tick_composition(s, e1, e2):
    assert tick(tick(s, e1), e2) == tick(s, e1 + e2)


@settings(max_examples=200, deadline=None)
@given(configurations(), configurations(), configurations(), st.integers(1, 3))
def test_equivalence_is_an_equivalence(s1, s2, s3, d):
    assert equivalent(s1, s1, d)
    assert equivalent(s1, s2, d) == equivalent(s2, s1, d)
    if equivalent(s1, s2, d) and equivalent(s2, s3, d):
        assert equivalent(s1, s3, d)


@settings(max_examples=400, deadline=None)
@given(configurations(), st.data(), st.integers(1, 3))
def test_equivalence_key_is_complete(s1, data, d):
    # compare against shifted or perturbed variants to get both outcomes
    shift = data.draw(st.fractions(0, 2, max_denominator=8))
    s2 = tick(s1, shift) if data.draw(st.booleans()) else data.draw(configurations())
    assert (equivalence_key(s1, d) == equivalence_key(s2, d)) == equivalent(s1, s2, d)


def _grid(s, d, step):
    events = [e for e in time_events(s, change_only=True, d=d)]
    horizon = (events[1] if len(events) > 1 else (events[0] if events else 1)) + 1
    n = int(horizon / step)
    return [step * i for i in range(1, n + 1)]


@settings(max_examples=150, deadline=None)
@given(configurations(), st.integers(1, 3))
def test_immediate_successor_conditions(s, d):
    """The profile changes, and no third profile appears on a fine rational grid."""
    r = immediate_successor_reps(s, d)
    if r.representative is None:
        return
    p0 = constraint_profile(s, d)
    p1 = constraint_profile(r.representative, d)
    assert p0 != p1                                          # the profile changes
    assert is_immediate_successor(s, r.representative, d)
    eps = r.representative.time - s.time
    step = F(1, 240)
    for e in _grid(s, d, step):
        if e >= eps:
            break
        assert constraint_profile(tick(s, e), d) in (p0, p1)  # nothing in between


@settings(max_examples=150, deadline=None)
@given(configurations(), st.integers(1, 3))
def test_no_skipping_between_successors(s, d):
    """Any split of an immediate-successor tick only meets the two end classes."""
    spec = parse("init {Time@0} critical { Time@T, P@T1 | T = T1 + 1 }").critical
    r = immediate_successor_reps(s, d)
    if r.representative is None or matches_spec(s, spec) or matches_spec(r.representative, spec):
        return
    eps = r.representative.time - s.time
    for i in range(1, 40):
        assert not matches_spec(tick(s, eps * F(i, 40)), spec)
