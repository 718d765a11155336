"""The ``.tmsr`` specification language: lexer, parser, validator, serializer.

A small example::

    dmax auto
    init { Time@0, R@0 }
    rule mint: Time@T, R@T1 -o exists N. Time@T, S(N)@(T+1)
    critical { Time@T, S(X)@T1 | T > T1 + 1 }
    goal { Time@T, S(X)@T1 | T = T1 }

Predicates start with an uppercase letter.  Inside arguments, lowercase
names are constants or function symbols, uppercase names are variables,
integers are constants and ``n1, n2, ...`` are nonce literals.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .semantics import (
    Configuration,
    Created,
    PairSpec,
    Pattern,
    Problem,
    Rule,
    SpecPair,
    TimestampedFact,
    problem_numbers,
    smallest_dmax,
)
from .terms import (
    NONCE_RE,
    TIME,
    Alphabet,
    App,
    Const,
    Constraint,
    Fact,
    Nonce,
    Var,
    fact_nonces,
    fact_size,
    fact_vars,
)

KEYWORDS = {"dmax", "init", "rule", "critical", "goal"}

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<arrow>-o(?![A-Za-z0-9_']))
  | (?P<number>[0-9]+(?:\.[0-9]+)?(?:/[0-9]+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*'*)
  | (?P<op>>=|[{}(),@|:.+\->=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" or "warning"
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"


class SpecError(Exception):
    """Raised by :func:`parse` when the text has error diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(map(str, diagnostics)))


@dataclass
class SourceSpec:
    text: str
    problem: Problem | None
    diagnostics: list[Diagnostic] = field(default_factory=list)

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    @property
    def warnings(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "warning"]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


class _SyntaxError(Exception):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(message)
        self.line, self.col = line, col


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise _SyntaxError(line, pos - start + 1, f"unexpected character {text[pos]!r}")
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - start + 1))
    return out


def parse_rational(s: str) -> Fraction:
    if "." in s and "/" in s:
        raise ValueError(f"bad rational {s!r}")
    return Fraction(s)


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind != "eof"

    def take(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str, what: str | None = None) -> Token:
        if not self.at(text):
            self.fail(f"expected {what or repr(text)}")
        return self.take()

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def fail(self, message: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise _SyntaxError(t.line, t.col, f"{message}, found {found}")

    def ident(self, what: str) -> Token:
        if self.tok.kind != "ident":
            self.fail(f"expected {what}")
        return self.take()

    def upper_ident(self, what: str) -> Token:
        t = self.ident(what)
        if not t.text[0].isupper():
            raise _SyntaxError(t.line, t.col, f"expected {what}, found {t.text!r}")
        return t

    def nat(self, what: str = "a natural number") -> int:
        t = self.tok
        if t.kind != "number" or not t.text.isdigit():
            self.fail(f"expected {what}")
        self.take()
        return int(t.text)

    # -- grammar

    def term(self):
        t = self.tok
        if t.kind == "number":
            if not t.text.isdigit():
                self.fail("expected a term")
            self.take()
            return Const(t.text)
        name = self.ident("a term").text
        if name[0].isupper():
            return Var(name)
        if self.accept("("):
            args = [self.term()]
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
            return App(name, tuple(args))
        if NONCE_RE.match(name):
            return Nonce(name)
        return Const(name)

    def fact(self) -> Fact:
        name = self.upper_ident("a predicate").text
        args = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        return Fact(name, tuple(args))

    def tvar(self) -> str:
        return self.upper_ident("a time variable").text

    def pattern(self):
        t = self.tok
        f = self.fact()
        self.expect("@")
        return Pattern(f, self.tvar()), (t.line, t.col)

    def atom(self) -> tuple[Constraint, tuple[int, int]]:
        t = self.tok
        left = self.tvar()
        if self.tok.text not in (">", ">=", "="):
            self.fail("expected one of >, >=, =")
        rel = self.take().text
        right = self.tvar()
        offset = 0
        if self.at("+") or self.at("-"):
            sign = 1 if self.take().text == "+" else -1
            offset = sign * self.nat("a natural offset")
        return Constraint(left, rel, right, offset), (t.line, t.col)

    def guard(self):
        atoms = [self.atom()]
        while self.accept(","):
            atoms.append(self.atom())
        return atoms

    def rational(self) -> Fraction:
        t = self.tok
        if t.kind != "number":
            self.fail("expected a non-negative rational timestamp")
        self.take()
        try:
            return parse_rational(t.text)
        except (ValueError, ZeroDivisionError):
            raise _SyntaxError(t.line, t.col, f"bad rational {t.text!r}") from None

    def tsfact(self):
        t = self.tok
        f = self.fact()
        self.expect("@")
        return TimestampedFact(f, self.rational()), (t.line, t.col)

    def configuration(self, braces: bool = True):
        if braces:
            self.expect("{")
        items = [self.tsfact()]
        while self.accept(","):
            items.append(self.tsfact())
        if braces:
            self.expect("}")
        return items

    def spec_body(self):
        self.expect("{")
        pats = [self.pattern()]
        while self.accept(","):
            pats.append(self.pattern())
        guard = self.guard() if self.accept("|") else []
        self.expect("}")
        return pats, guard

    def post_item(self):
        t = self.tok
        f = self.fact()
        self.expect("@")
        if self.accept("("):
            tv = self.tvar()
            self.expect("+")
            d = self.nat("a natural delay")
            self.expect(")")
            return ("created", f, tv, d, (t.line, t.col))
        return ("same", f, self.tvar(), None, (t.line, t.col))

    def rule(self):
        start = self.expect("rule")
        name = self.ident("a rule name").text
        self.expect(":")
        pre = [self.pattern()]
        while self.accept(","):
            pre.append(self.pattern())
        guard = self.guard() if self.accept("|") else []
        if self.tok.kind != "arrow":
            self.fail("expected '-o'")
        self.take()
        exists = []
        if self.at("exists"):
            self.take()
            exists.append(self.upper_ident("an existential variable"))
            while self.tok.kind == "ident" or self.at(","):
                self.accept(",")
                exists.append(self.upper_ident("an existential variable"))
            self.expect(".")
        post = [self.post_item()]
        while self.accept(","):
            post.append(self.post_item())
        return dict(name=name, pre=pre, guard=guard, exists=exists, post=post,
                    loc=(start.line, start.col))

    def problem(self) -> dict:
        out = dict(dmax=[], init=[], rules=[], critical=[], goal=[])
        while self.tok.kind != "eof":
            t = self.tok
            if t.text == "dmax":
                self.take()
                if self.accept("auto"):
                    out["dmax"].append((None, (t.line, t.col)))
                else:
                    out["dmax"].append((self.nat("a natural or 'auto'"), (t.line, t.col)))
            elif t.text == "init":
                self.take()
                out["init"].append((self.configuration(), (t.line, t.col)))
            elif t.text == "rule":
                out["rules"].append(self.rule())
            elif t.text in ("critical", "goal"):
                self.take()
                pats, guard = self.spec_body()
                out[t.text].append((pats, guard, (t.line, t.col)))
            else:
                self.fail("expected dmax, init, rule, critical or goal")
        return out


class _Builder:
    """Turns the raw parse into a :class:`Problem`, collecting diagnostics."""

    def __init__(self, allow_unbalanced: bool):
        self.allow_unbalanced = allow_unbalanced
        self.diags: list[Diagnostic] = []

    def error(self, loc, msg: str) -> None:
        self.diags.append(Diagnostic("error", loc[0], loc[1], msg))

    def warn(self, loc, msg: str) -> None:
        self.diags.append(Diagnostic("warning", loc[0], loc[1], msg))

    def check_fact(self, f: Fact, loc) -> None:
        if f.pred == TIME and f.args:
            self.error(loc, "Time takes no arguments")

    def rule(self, raw) -> Rule | None:
        name, loc = raw["name"], raw["loc"]
        n_err = len(self.diags)
        pre = [p for p, _ in raw["pre"]]
        for p, ploc in raw["pre"]:
            self.check_fact(p.fact, ploc)
            if fact_nonces(p.fact):
                self.error(ploc, f"rule {name}: nonce literals are not allowed in rules")
        times = [p for p in pre if p.fact.pred == TIME]
        if len(times) != 1:
            self.error(loc, f"rule {name}: pre-condition must contain Time exactly once"
                       f" (found {len(times)})")
            return None
        tvar = times[0].tvar
        pre_tvars = {p.tvar for p in pre}
        for c, cloc in raw["guard"]:
            for v in c.variables:
                if v not in pre_tvars:
                    self.error(cloc, f"rule {name}: guard variable {v} does not occur"
                               " in the pre-condition")
        pre_vars = set()
        for p in pre:
            pre_vars |= fact_vars(p.fact)
        exists = []
        for t in raw["exists"]:
            if t.text in exists:
                self.error((t.line, t.col), f"rule {name}: {t.text} is quantified twice")
            elif t.text in pre_vars:
                self.error((t.line, t.col), f"rule {name}: existential {t.text} also"
                           " occurs in the pre-condition")
            exists.append(t.text)

        remaining = list(range(len(pre)))
        created = []
        seen_time = 0
        for kind, f, tv, d, iloc in raw["post"]:
            self.check_fact(f, iloc)
            if fact_nonces(f):
                self.error(iloc, f"rule {name}: nonce literals are not allowed in rules")
            if f.pred == TIME:
                seen_time += 1
                if kind != "same" or tv != tvar:
                    self.error(iloc, f"rule {name}: post-condition must keep Time@{tvar}")
                continue
            if kind == "created":
                if tv != tvar:
                    self.error(iloc, f"rule {name}: created facts must be stamped"
                               f" ({tvar}+D), not ({tv}+D)")
                for v in sorted(fact_vars(f) - pre_vars - set(exists)):
                    self.error(iloc, f"rule {name}: variable {v} is not bound by the"
                               " pre-condition or an existential")
                created.append(Created(f, d))
                continue
            for i in remaining:
                if pre[i] == Pattern(f, tv):
                    remaining.remove(i)
                    break
            else:
                self.error(iloc, f"rule {name}: {f}@{tv} is not in the pre-condition;"
                           f" created facts must be stamped ({tvar}+D)")
        if seen_time != 1:
            self.error(loc, f"rule {name}: post-condition must contain Time exactly once"
                       f" (found {seen_time})")
        consumed = tuple(i for i in remaining if pre[i].fact.pred != TIME)
        used_ex = set()
        for c in created:
            used_ex |= fact_vars(c.fact)
        for x in exists:
            if x not in used_ex:
                self.error(loc, f"rule {name}: existential {x} does not occur in a created fact")
        if len(consumed) != len(created):
            msg = (f"rule {name} is not balanced: consumes {len(consumed)}"
                   f" creates {len(created)}")
            if self.allow_unbalanced:
                self.warn(loc, msg + "; completeness not guaranteed")
            else:
                self.error(loc, msg)
        if len(self.diags) > n_err and any(
                d.severity == "error" for d in self.diags[n_err:]):
            return None
        return Rule(name, tuple(pre), tuple(c for c, _ in raw["guard"]), tuple(exists),
                    tuple(created), consumed, loc=loc)

    def pair(self, raw, what: str) -> SpecPair:
        pats, guard, loc = raw
        tvars = {p.tvar for p, _ in pats}
        for p, ploc in pats:
            self.check_fact(p.fact, ploc)
        for c, cloc in guard:
            for v in c.variables:
                if v not in tvars:
                    self.error(cloc, f"{what}: constraint variable {v} does not occur"
                               " among the patterns")
        return SpecPair(tuple(p for p, _ in pats), tuple(c for c, _ in guard), loc=loc)

    def build(self, raw: dict) -> Problem | None:
        if not raw["init"]:
            self.error((1, 1), "missing init declaration")
            return None
        for _, loc in raw["init"][1:]:
            self.error(loc, "duplicate init declaration")
        items, iloc = raw["init"][0]
        for tf, loc in items:
            self.check_fact(tf.fact, loc)
            if not tf.fact.ground:
                self.error(loc, f"initial fact {tf.fact} contains variables")
        n_time = sum(1 for tf, _ in items if tf.fact.pred == TIME)
        if n_time != 1:
            self.error(iloc, f"initial configuration must contain Time exactly once"
                       f" (found {n_time})")
        rules = []
        names = set()
        for r in raw["rules"]:
            if r["name"] in names:
                self.error(r["loc"], f"duplicate rule name {r['name']}")
            names.add(r["name"])
            built = self.rule(r)
            if built is not None:
                rules.append(built)
        critical = PairSpec(tuple(self.pair(p, "critical") for p in raw["critical"]))
        goal = PairSpec(tuple(self.pair(p, "goal") for p in raw["goal"]))
        if any(d.severity == "error" for d in self.diags):
            return None
        initial = Configuration(tuple(tf for tf, _ in items))

        alphabet = Alphabet.of_facts(_problem_facts(initial, rules, critical, goal))
        for msg in alphabet.problems():
            self.error(iloc, msg)

        auto = smallest_dmax(problem_numbers(initial, rules, critical, goal))
        dmax = auto
        for value, loc in raw["dmax"][1:]:
            self.error(loc, "duplicate dmax declaration")
        if raw["dmax"]:
            value, loc = raw["dmax"][0]
            if value is not None:
                if value < auto:
                    self.error(loc, f"dmax {value} is below the required bound {auto}"
                               " (it must exceed every number in the problem plus one)")
                dmax = value
        if any(d.severity == "error" for d in self.diags):
            return None
        return Problem(initial, tuple(rules), critical, goal, dmax=dmax)


def _problem_facts(initial, rules, critical, goal):
    for tf in initial:
        yield tf.fact
    for r in rules:
        yield from r.facts()
    for spec in (critical, goal):
        for pair in spec.pairs:
            for p in pair.patterns:
                yield p.fact


def parse_source(text: str, allow_unbalanced: bool = False) -> SourceSpec:
    """Parse and validate ``text``; never raises on bad input."""
    try:
        raw = _Parser(text).problem()
    except _SyntaxError as e:
        return SourceSpec(text, None, [Diagnostic("error", e.line, e.col, str(e))])
    b = _Builder(allow_unbalanced)
    problem = b.build(raw)
    if problem is not None:
        b.diags.extend(validate(problem))
    if any(d.severity == "error" for d in b.diags):
        problem = None
    return SourceSpec(text, problem, b.diags)


def parse(text: str, allow_unbalanced: bool = False) -> Problem:
    src = parse_source(text, allow_unbalanced)
    if src.problem is None:
        raise SpecError(src.errors)
    return src.problem


def load(path, allow_unbalanced: bool = False) -> SourceSpec:
    return parse_source(Path(path).read_text(encoding="utf-8"), allow_unbalanced)


def validate(p: Problem) -> list[Diagnostic]:
    """Semantic checks on an already built problem.

    Problems produced by :func:`parse` pass these by construction; the
    function is exposed for problems assembled in code.
    """
    diags = []

    def err(loc, msg):
        diags.append(Diagnostic("error", loc[0], loc[1], msg))

    for msg in p.alphabet.problems():
        err((1, 1), msg)
    for tf in p.initial:
        if fact_size(tf.fact) > p.k:
            err((1, 1), f"fact {tf.fact} exceeds the size bound k={p.k}")
    auto = smallest_dmax(problem_numbers(p.initial, p.rules, p.critical, p.goal))
    if p.dmax < auto:
        err((1, 1), f"dmax {p.dmax} is below the required bound {auto}")
    for r in p.rules:
        tv = r.time_var
        if tv is None or sum(1 for q in r.pre if q.fact.pred == TIME) != 1:
            err(r.loc, f"rule {r.name}: pre-condition must contain Time exactly once")
            continue
        pre_tvars = {q.tvar for q in r.pre}
        for c in r.guard:
            for v in c.variables:
                if v not in pre_tvars:
                    err(r.loc, f"rule {r.name}: guard variable {v} does not occur"
                        " in the pre-condition")
        pre_vars = set()
        for q in r.pre:
            pre_vars |= fact_vars(q.fact)
        for x in r.exists:
            if x in pre_vars:
                err(r.loc, f"rule {r.name}: existential {x} also occurs in the pre-condition")
        for c in r.created:
            if c.delay < 0:
                err(r.loc, f"rule {r.name}: delay {c.delay} is not a natural number")
            if c.fact.pred == TIME:
                err(r.loc, f"rule {r.name}: Time cannot be created")
            for v in sorted(fact_vars(c.fact) - pre_vars - set(r.exists)):
                err(r.loc, f"rule {r.name}: variable {v} is unbound")
        for i in r.consumed:
            if r.pre[i].fact.pred == TIME:
                err(r.loc, f"rule {r.name}: Time cannot be consumed")
        # balance is reported by the parser, whose severity depends on the caller
    for what, spec in (("critical", p.critical), ("goal", p.goal)):
        for pair in spec.pairs:
            tvars = {q.tvar for q in pair.patterns}
            for c in pair.constraints:
                if c.left not in tvars or c.right not in tvars:
                    err(pair.loc, f"{what}: constraint {c} uses a variable not among"
                        " the patterns")
                if abs(c.offset) > p.dmax:
                    err(pair.loc, f"{what}: offset {c.offset} exceeds dmax {p.dmax}")
    return diags


# -- standalone fragments ----------------------------------------------------------


def _fragment(text: str, fn):
    p = _Parser(text)
    try:
        out = fn(p)
        if p.tok.kind != "eof":
            p.fail("unexpected trailing input")
    except _SyntaxError as e:
        raise SpecError([Diagnostic("error", e.line, e.col, str(e))]) from None
    return out


def parse_term(text: str):
    return _fragment(text, _Parser.term)


def parse_fact(text: str) -> Fact:
    return _fragment(text, _Parser.fact)


def parse_configuration(text: str) -> Configuration:
    """Parse ``{F@1, Time@0}`` (braces optional) into a configuration."""
    braces = text.strip().startswith("{")
    items = _fragment(text, lambda p: p.configuration(braces))
    try:
        return Configuration(tuple(tf for tf, _ in items))
    except Exception as e:
        raise SpecError([Diagnostic("error", 1, 1, str(e))]) from None


# -- serializer --------------------------------------------------------------------


def format_rational(q: Fraction) -> str:
    return str(Fraction(q))


def _pattern(p: Pattern) -> str:
    return f"{p.fact}@{p.tvar}"


def _constraints(cs) -> str:
    return ", ".join(map(str, cs))


def serialize_rule(r: Rule) -> str:
    tv = r.time_var
    head = ", ".join(_pattern(p) for p in r.pre)
    if r.guard:
        head += " | " + _constraints(r.guard)
    post = [f"{TIME}@{tv}"]
    post += [_pattern(p) for p in r.persistent]
    post += [f"{c.fact}@({tv}+{c.delay})" for c in r.created]
    ex = f"exists {' '.join(r.exists)}. " if r.exists else ""
    return f"rule {r.name}: {head} -o {ex}{', '.join(post)}"


def _pair(kind: str, pair: SpecPair) -> str:
    body = ", ".join(_pattern(p) for p in pair.patterns)
    if pair.constraints:
        body += " | " + _constraints(pair.constraints)
    return f"{kind} {{ {body} }}"


def serialize(p: Problem) -> str:
    """Canonical text for ``p``; ``parse(serialize(p)) == p``."""
    lines = [f"dmax {p.dmax}"]
    init = ", ".join(f"{tf.fact}@{format_rational(tf.time)}" for tf in p.initial)
    lines.append(f"init {{ {init} }}")
    lines += [serialize_rule(r) for r in p.rules]
    lines += [_pair("critical", pair) for pair in p.critical.pairs]
    lines += [_pair("goal", pair) for pair in p.goal.pairs]
    return "\n".join(lines) + "\n"
