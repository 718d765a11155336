from pathlib import Path
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempora.fuzz import random_problem_text
from tempora.lang import (
    SpecError,
    load,
    parse,
    parse_configuration,
    parse_source,
    parse_term,
    serialize,
    tokenize,
    validate,
)
from tempora.terms import App, Const, Nonce, Var

SPECS = Path(__file__).resolve().parent.parent / "specs"


def test_parse_skipping_problem():
    p = parse("init { Time@1.5, F@3.5 } critical { Time@T, F@T1 | T1 = T }"
              " goal { Time@T, F@T1 | T = T1 + 1 } dmax auto")
    assert p.m == 2
    assert p.dmax == 5  # 3.5 is the largest number; the least natural above 4.5


def test_unbalanced_rule_is_an_error_by_default():
    text = "init {Time@0} rule r: Time@T, F(X)@T1 -o Time@T, G(X)@(T+2), H@(T+0)"
    src = parse_source(text)
    assert src.problem is None
    assert "consumes 1 creates 2" in src.errors[0].message
    relaxed = parse_source(text, allow_unbalanced=True)
    assert relaxed.problem is not None
    assert "completeness not guaranteed" in relaxed.warnings[0].message


def test_missing_time_in_rule():
    src = parse_source("init {Time@0} rule r: F(X)@T1 -o F(X)@T1")
    assert src.problem is None
    assert "Time" in src.errors[0].message


def test_guard_variable_must_occur_in_pre():
    src = parse_source("init {Time@0, F@0} rule r: Time@T, F@T1 | T > T2 -o Time@T, F@T1")
    [d] = src.errors
    assert "T2" in d.message and (d.line, d.col) == (1, 43)


def test_balanced_rules_have_no_diagnostics():
    src = parse_source("init {Time@0, F@0} rule r: Time@T, F@T1 -o Time@T, G@(T+1)")
    assert src.diagnostics == []
    assert validate(src.problem) == []


@pytest.mark.parametrize("text, fragment", [
    ("init {Time@0} rule r: Time@T, F@T1 -o exists N. Time@T, F@(T+1)", "existential N"),
    ("init {Time@0} rule r: Time@T, F@T1 -o Time@T, F(Y)@(T+1)", "variable Y"),
    ("init {Time@0} rule r: Time@T, F@T1 -o Time@T, F@T2", "not in the pre-condition"),
    ("init {Time@0} rule r: Time@T, F@T1 -o Time@T, F@(T1+1)", "stamped"),
    ("init {Time@0} rule r: Time@T, F(n1)@T1 -o Time@T, F(n1)@T1", "nonce literals"),
    ("init {Time@0, F(X)@1}", "variables"),
    ("init {F@0}", "Time exactly once"),
    ("init {Time@0, F@0, F(a)@1}", "arities"),
    ("dmax 2 init {Time@3}", "below the required bound 5"),
    ("init {Time@0} critical { F@T1 | T1 > T }", "constraint variable T"),
    ("init {Time@0} rule r: Time@T -o Time@T rule r: Time@T -o Time@T", "duplicate rule"),
])
def test_semantic_errors(text, fragment):
    src = parse_source(text)
    assert src.problem is None
    assert any(fragment in d.message for d in src.errors), src.errors


def test_syntax_error_location():
    src = parse_source("init { Time@0, F@1 }\nrule r: Time@T, F@T1 -o Time@T F@(T+1)\n")
    [d] = src.diagnostics
    assert (d.line, d.col) == (2, 32)
    with pytest.raises(SpecError):
        parse(src.text)


def test_comments_and_whitespace():
    p = parse("# header\ninit {\n  Time@0,   # clock\n  F@7/2\n}\n")
    assert str(p.initial) == "{Time@0, F@7/2}"


def test_terms():
    assert parse_term("f(a, X, n3, 2)") == App("f", (Const("a"), Var("X"), Nonce("n3"), Const("2")))


def test_tokens_keep_negative_offsets_apart_from_arrow():
    kinds = [t.text for t in tokenize("T = T1 - 1 -o")]
    assert kinds == ["T", "=", "T1", "-", "1", "-o", ""]


def test_serialize_is_canonical():
    p = parse("init { Time@3.5, F@7/2 }")
    assert "init { F@7/2, Time@7/2 }" in serialize(p)
    q = parse("init { Time@0 }")
    assert "goal" not in serialize(q)
    assert not parse(serialize(q)).goal


def test_persistent_and_consumed_facts():
    p = parse("init {Time@0, F@0} rule r: Time@T, F@T1, F@T1, G@T2"
              " -o Time@T, F@T1, H@(T+0), H@(T+1)")
    r = p.rule("r")
    assert [str(x) for x in r.persistent] == ["F@T1"]
    assert r.consumed == (2, 3)


def test_parse_configuration():
    s = parse_configuration("Time@0, F@1.25")
    assert str(s) == "{Time@0, F@5/4}"


@pytest.mark.parametrize("path", sorted(SPECS.glob("*.tmsr")), ids=lambda p: p.name)
def test_example_specs_round_trip(path):
    src = load(path, allow_unbalanced=True)
    if path.name == "broken.tmsr":
        assert src.problem is None and src.errors
        return
    p = src.problem
    assert parse(serialize(p), allow_unbalanced=True) == p


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_round_trip_generated(seed, tiny):
    p = parse(random_problem_text(random.Random(seed), tiny))
    text = serialize(p)
    assert parse(text) == p
    assert serialize(parse(text)) == text
    assert validate(p) == []
