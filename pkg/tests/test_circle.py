import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    all_circle_configurations,
    group_by_parts,
    random_circle_configuration,
    random_configuration,
)
from tempora.circle import (
    INF,
    CircleConfiguration,
    abstract,
    apply_symbolic,
    canonical,
    canonicalize,
    cc_matches_spec,
    concretize,
    from_classes,
    from_key,
    next_circle,
    truncate,
)
from tempora.errors import InconsistentCircleConfiguration, NotBalanced, OffsetExceedsDmax
from tempora.lang import parse, parse_configuration as cfg, parse_fact
from tempora.semantics import (
    Configuration,
    PairSpec,
    TimestampedFact,
    applicable_instances,
    equivalence_key,
    equivalent,
    immediate_successor_reps,
    matches_spec,
    tick,
)
from tempora.terms import TIME_FACT, Substitution, apply_substitution

F = Fraction


def circle(delta, gaps, zero, rest, dmax):
    def facts(names):
        return [parse_fact(n) for n in names]
    return from_classes([facts(c) for c in delta], gaps, facts(zero),
                        [facts(c) for c in rest], dmax)


def test_worked_abstraction():
    s = cfg("{M@3.01, R@3.11, P@4.12, Time@11.12, Q@12.58, S@14}")
    a = abstract(s, 3)
    assert a.render() == "<{M,R},1,{P},inf,{Time},1,{Q},2,{S}> / [{S}_Z,{M},{R},{P,Time},{Q}]"
    assert a == circle([["M", "R"], ["P"], ["Time"], ["Q"], ["S"]], [1, "inf", 1, 2],
                       ["S"], [["M"], ["R"], ["P", "Time"], ["Q"]], 3)


def test_equivalent_pair_differs_only_at_zero_point():
    a1 = abstract(cfg("{Time@1, Q@1.54, S@2.4}"), 3)
    a2 = abstract(cfg("{Time@1.12, Q@1.66, S@2.52}"), 3)
    assert a1.delta_classes() == a2.delta_classes() and a1.gaps == a2.gaps
    assert a1.render().split(" / ")[1] == "[{Time}_Z,{S},{Q}]"
    assert a2.render().split(" / ")[1] == "[{}_Z,{Time},{S},{Q}]"


def test_concretize_is_the_canonical_representative():
    a = circle([["F"], ["Time"]], ["inf"], [], [["F"], ["Time"]], 2)
    assert concretize(a) == cfg("{F@1/3, Time@11/3}")


def test_truncate():
    assert truncate(3, 3) == 3 and truncate(4, 3) == INF and truncate(INF, 3) == INF


def test_inconsistent_partitions():
    with pytest.raises(InconsistentCircleConfiguration):
        circle([["F"], ["Time"]], [1], [], [["G", "Time"]], 2)
    with pytest.raises(InconsistentCircleConfiguration):
        CircleConfiguration(((TIME_FACT, 0, 0),), (1,), 2)   # gap without a second class
    with pytest.raises(InconsistentCircleConfiguration):
        CircleConfiguration(((TIME_FACT, 0, 0), (parse_fact("F"), 1, 0)), (3,), 2)


@pytest.mark.parametrize("m, dmax", [(1, 0), (2, 1), (3, 2)])
def test_round_trip_exhaustive(m, dmax):
    n = 0
    for a in all_circle_configurations(m, dmax):
        assert abstract(concretize(a), dmax) == a
        n += 1
    assert n > 0


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip_random(seed):
    a = random_circle_configuration(random.Random(seed))
    assert abstract(concretize(a), a.dmax) == a


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 4))
def test_abstract_agrees_with_reference(seed, dmax):
    s = random_configuration(random.Random(seed))
    a = abstract(s, dmax)
    delta, zero, rest = group_by_parts(s, dmax)
    got = []
    for i, c in enumerate(a.delta_classes()):
        if i:
            g = a.gaps[i - 1]
            got.append("inf" if g == INF else str(g))
        got.append(sorted(f.text for f in c))
    assert got == delta
    circ = a.circle_classes()
    assert sorted(f.text for f in circ[0]) == zero
    assert [sorted(f.text for f in c) for c in circ[1:]] == rest


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9), st.integers(1, 4))
def test_abstraction_respects_equivalence(seed, dmax):
    """Configurations with the same abstraction are equivalent."""
    s = random_configuration(random.Random(seed))
    assert equivalent(s, concretize(abstract(s, dmax)), dmax)


# -- next --------------------------------------------------------------------------

RUNNING = cfg("{Time@2, F@0.4, G@2.5, H@1}")


def test_next_examples():
    a = abstract(RUNNING, 4)
    assert a.render() == "<{F},1,{H},1,{G,Time}> / [{H,Time}_Z,{F},{G}]"
    b = next_circle(a)
    assert b.render() == "<{F},1,{H},1,{G,Time}> / [{H}_Z,{Time},{F},{G}]"
    assert equivalent(concretize(b), cfg("{Time@2.05, F@0.4, G@2.5, H@1}"), 4)
    c = next_circle(b)
    assert c.render() == "<{F},1,{H},1,{G,Time}> / [{H}_Z,{F,Time},{G}]"
    assert equivalent(concretize(c), cfg("{Time@2.4, F@0.4, G@2.5, H@1}"), 4)


def test_next_wraps_lonely_time_with_empty_zero_point():
    a = circle([["Time"], ["F"]], [2], [], [["F", "Time"]], 4)
    b = next_circle(a)
    assert b.render() == "<{Time},2,{F}> / [{}_Z,{F},{Time}]"
    w = next_circle(b)
    assert w.render() == "<{Time},1,{F}> / [{Time}_Z,{F}]"
    assert equivalent(concretize(b), concretize(w), 4)


@pytest.mark.parametrize("delta, gaps, zero, rest, dmax, expected", [
    # Time shares its delta class: a new class one unit later
    ([["F", "Time"]], [], [], [["F"], ["Time"]], 2, "<{F},1,{Time}> / [{Time}_Z,{F}]"),
    # ... that joins the next class when the gap is one
    ([["F", "Time"], ["G"]], [1], ["G"], [["F"], ["Time"]], 2,
     "<{F},1,{G,Time}> / [{G,Time}_Z,{F}]"),
    # ... or splits a larger gap
    ([["F", "Time"], ["G"]], [3], ["G"], [["F"], ["Time"]], 3,
     "<{F},1,{Time},2,{G}> / [{G,Time}_Z,{F}]"),
    ([["F", "Time"], ["G"]], ["inf"], ["G"], [["F"], ["Time"]], 3,
     "<{F},1,{Time},inf,{G}> / [{G,Time}_Z,{F}]"),
    # Time alone: the gap behind it grows, saturating at inf
    ([["F"], ["Time"]], [3], [], [["F"], ["Time"]], 3, "<{F},inf,{Time}> / [{Time}_Z,{F}]"),
    # ... and the gap ahead shrinks, merging at zero
    ([["F"], ["Time"], ["G"]], [1, 1], ["G"], [["F"], ["Time"]], 3,
     "<{F},2,{G,Time}> / [{G,Time}_Z,{F}]"),
    ([["Time"], ["G"]], [2], ["G"], [["Time"]], 3, "<{Time},1,{G}> / [{G,Time}_Z]"),
])
def test_next_wrap_cases(delta, gaps, zero, rest, dmax, expected):
    a = circle(delta, gaps, zero, rest, dmax)
    b = next_circle(a)
    assert b.render() == expected
    s = concretize(a)
    r = immediate_successor_reps(s, dmax).representative
    if not _far_future(s, dmax):
        assert r is None or equivalent(concretize(b), r, dmax) or equivalent(concretize(b), s, dmax)


def _far_future(s, dmax):
    return any(tf.time - s.time > dmax for tf in s)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9))
def test_next_matches_immediate_successor(seed):
    """Without facts more than dmax ahead of Time, next either stays in the
    class of the source or moves to its immediate successor, and repeated
    next steps reach the successor class within 2m steps."""
    a = random_circle_configuration(random.Random(seed))
    s = concretize(a)
    if _far_future(s, a.dmax):
        return
    rep = immediate_successor_reps(s, a.dmax).representative
    s2 = concretize(next_circle(a))
    assert equivalent(s2, s, a.dmax) or (rep is not None and equivalent(s2, rep, a.dmax))
    if rep is None:
        return
    c = a
    for _ in range(2 * a.m):
        c = next_circle(c)
        if equivalent(concretize(c), rep, a.dmax):
            break
    else:
        pytest.fail(f"next chain from {a} misses the successor class")


# -- rules on circle-configurations ------------------------------------------------

AGE = parse("""
init { Time@2, F(a)@0.4 }
rule age: Time@T, F(X)@T1 | T >= T1 + 1 -o Time@T, G(X)@(T+2)
rule stay: Time@T, F(X)@T1 | T1 > T -o Time@T, F(X)@T1
rule mint: Time@T, F(X)@T1 -o exists N. Time@T, F(N)@(T+1)
dmax 5
""")


def test_apply_symbolic_examples():
    a = abstract(cfg("{Time@2, F(a)@0.4}"), 5)
    [(sub, b)] = apply_symbolic(AGE.rule("age"), a)
    assert b == abstract(cfg("{Time@2, G(a)@4}"), 5)
    assert apply_symbolic(AGE.rule("stay"), a) == []


def test_apply_symbolic_refuses_unbalanced_rules():
    p = parse("init {Time@0} rule r: Time@T -o Time@T, F@(T+1)", allow_unbalanced=True)
    with pytest.raises(NotBalanced):
        apply_symbolic(p.rule("r"), abstract(p.initial, 2))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from(["age", "stay", "mint"]))
def test_apply_symbolic_is_representative_independent(seed, name):
    rng = random.Random(seed)
    s = random_configuration(rng, max_m=4, top=4)
    s = cfg("{" + ", ".join(f"{'F(a)' if tf.fact.text in ('P(a)', 'Q(a)') else tf.fact.text}"
                            f"@{tf.time}" for tf in s) + "}")
    shifted = tick(s, F(rng.randint(0, 8), 16))
    if not equivalent(s, shifted, 5):
        return
    rule = AGE.rule(name)
    via_rep = apply_symbolic(rule, abstract(s, 5))
    direct = [r for _, r in applicable_instances(rule, shifted)]
    if abstract(s, 5) == abstract(shifted, 5):
        assert ({canonicalize(b) for _, b in via_rep}
                == {canonicalize(abstract(r, 5)) for r in direct})
    # with the zero point rotated the abstractions differ, the classes do not
    assert ({equivalence_key(concretize(b), 5) for _, b in via_rep}
            == {equivalence_key(r, 5) for r in direct})


CRIT = parse("init {Time@0} critical { Time@T, F@T1 | T1 = T }").critical


def test_cc_matches_spec_examples():
    assert cc_matches_spec(abstract(cfg("{Time@3.5, F@3.5}"), 5), CRIT)
    assert not cc_matches_spec(abstract(cfg("{Time@4.5, F@3.5}"), 5), CRIT)
    assert not cc_matches_spec(abstract(cfg("{Time@3.5, F@3.5}"), 5), PairSpec())
    far = parse("init {Time@0} critical { Time@T, F@T1 | T > T1 + 4 } dmax 6").critical
    with pytest.raises(OffsetExceedsDmax):
        cc_matches_spec(abstract(cfg("{Time@0}"), 3), far)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.integers(2, 4))
def test_cc_matches_spec_agrees_on_every_member(seed, dmax):
    spec = parse("init {Time@0} critical { Time@T, P(a)@T1 | T >= T1 + 2 }"
                 " critical { Time@T, R@T1, R@T2 | T2 > T1 }").critical
    s = random_configuration(random.Random(seed), top=5)
    assert cc_matches_spec(abstract(s, dmax), spec) == matches_spec(s, spec)


# -- canonical keys ----------------------------------------------------------------


def test_key_format_and_round_trip():
    a = abstract(cfg("{Time@2, F(a)@0.4, G@2.5}"), 3)
    key = canonicalize(a)
    assert key == "cc1:3|2|F(a):0.1;Time:1.0;G:1.2"
    assert from_key(key) == a


def test_keys_forget_nonce_names():
    a = abstract(cfg("{Time@0, P(n4)@1.5, Q(n4, n7)@1}"), 3)
    b = abstract(cfg("{Time@0, P(n2)@1.5, Q(n2, n1)@1}"), 3)
    c = abstract(cfg("{Time@0, P(n2)@1.5, Q(n1, n2)@1}"), 3)
    assert canonicalize(a) == canonicalize(b) != canonicalize(c)
    key, renamed = canonical(a)
    assert sorted(str(f) for f, _, _ in renamed.entries) == ["P(n1)", "Q(n1,n2)", "Time"]
    assert from_key(key) == renamed


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**9), st.permutations(["n1", "n2", "n3"]))
def test_keys_decide_equivalence_up_to_nonce_renaming(seed, perm):
    rng = random.Random(seed)
    names = ["n1", "n2", "n3"]
    facts = [parse_fact(f"P({n})") for n in names] + [parse_fact(f"Q({n})") for n in names[:2]]
    s = random_configuration(rng, facts=facts)
    ren = Substitution(nonces=dict(zip(names, perm)))
    t = Configuration.of(*(TimestampedFact(apply_substitution(tf.fact, ren), tf.time) for tf in s))
    dmax = rng.randint(1, 3)
    assert canonicalize(abstract(s, dmax)) == canonicalize(abstract(t, dmax))
    other = random_configuration(rng, facts=facts)
    same = canonicalize(abstract(s, dmax)) == canonicalize(abstract(other, dmax))
    if same:
        assert equivalent(s, other, dmax)

