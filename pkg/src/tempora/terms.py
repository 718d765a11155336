"""Untimed substrate: terms, facts, substitutions, nonces and multiset matching.

Everything here is immutable except :class:`NoncePool`.  Timestamps never
appear inside terms; they live next to facts (``F@t``) and in substitutions'
``times`` map.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

from .errors import ArityMismatch, PoolExhausted, UnboundVariable

TIME = "Time"
NONCE_RE = re.compile(r"n[0-9]+\Z")


@dataclass(frozen=True, slots=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Nonce:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class App:
    fn: str
    args: tuple

    def __str__(self) -> str:
        return f"{self.fn}({','.join(map(str, self.args))})"


Term = Union[Const, Nonce, Var, App]


@dataclass(frozen=True, slots=True)
class Fact:
    pred: str
    args: tuple = ()
    text: str = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if self.args:
            text = f"{self.pred}({','.join(map(str, self.args))})"
        else:
            text = self.pred
        object.__setattr__(self, "text", text)

    def __str__(self) -> str:
        return self.text

    @property
    def is_time(self) -> bool:
        return self.pred == TIME

    @property
    def ground(self) -> bool:
        return not any(term_vars(a) for a in self.args)


TIME_FACT = Fact(TIME)


def iter_subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from iter_subterms(a)


def term_vars(t: Term) -> set[str]:
    return {s.name for s in iter_subterms(t) if isinstance(s, Var)}


def fact_vars(f: Fact) -> set[str]:
    out: set[str] = set()
    for a in f.args:
        out |= term_vars(a)
    return out


def fact_nonces(f: Fact) -> list[str]:
    """Nonce names of ``f`` in left-to-right, depth-first order (with repeats)."""
    return [s.name for a in f.args for s in iter_subterms(a) if isinstance(s, Nonce)]


def fact_size(f: Fact) -> int:
    """Number of symbol occurrences: the predicate plus every term symbol."""
    return 1 + sum(1 for a in f.args for _ in iter_subterms(a))


def shape(f: Fact) -> str:
    """Text of ``f`` with every nonce replaced by ``?`` (renaming-invariant)."""
    def go(t: Term) -> str:
        if isinstance(t, Nonce):
            return "?"
        if isinstance(t, App):
            return f"{t.fn}({','.join(go(a) for a in t.args)})"
        return t.name
    if not f.args:
        return f.pred
    return f"{f.pred}({','.join(go(a) for a in f.args)})"


@dataclass(frozen=True)
class Alphabet:
    """Predicate and function/constant symbols with their arities."""

    predicates: frozenset = frozenset()
    functions: frozenset = frozenset()

    @property
    def J(self) -> int:
        return len(self.predicates)

    @property
    def E(self) -> int:
        return len(self.functions)

    def problems(self) -> list[str]:
        """Arity clashes and names used for two different kinds of symbol."""
        msgs = []
        for kind, table in (("predicate", self.predicates), ("function", self.functions)):
            seen: dict[str, int] = {}
            for name, arity in sorted(table):
                if name in seen:
                    msgs.append(f"{kind} {name} used with arities {seen[name]} and {arity}")
                seen[name] = arity
        clash = {n for n, _ in self.predicates} & {n for n, _ in self.functions}
        for name in sorted(clash):
            msgs.append(f"{name} used both as a predicate and as a function symbol")
        return msgs

    def check(self) -> None:
        msgs = self.problems()
        if msgs:
            raise ArityMismatch("; ".join(msgs))

    @classmethod
    def of_facts(cls, facts: Iterable[Fact]) -> Alphabet:
        preds, funs = set(), set()
        for f in facts:
            preds.add((f.pred, len(f.args)))
            for a in f.args:
                for s in iter_subterms(a):
                    if isinstance(s, Const):
                        funs.add((s.name, 0))
                    elif isinstance(s, App):
                        funs.add((s.fn, len(s.args)))
        return cls(frozenset(preds), frozenset(funs))


@dataclass(frozen=True)
class Constraint:
    """``left rel right + offset`` with ``rel`` one of ``>``, ``>=``, ``=``."""

    left: str
    rel: str
    right: str
    offset: int = 0

    def __post_init__(self) -> None:
        if self.rel not in (">", ">=", "="):
            raise ValueError(f"unknown relation {self.rel!r}")

    def __str__(self) -> str:
        if self.offset > 0:
            return f"{self.left} {self.rel} {self.right} + {self.offset}"
        if self.offset < 0:
            return f"{self.left} {self.rel} {self.right} - {-self.offset}"
        return f"{self.left} {self.rel} {self.right}"

    @property
    def variables(self) -> tuple[str, str]:
        return (self.left, self.right)


@dataclass(frozen=True)
class GroundConstraint:
    left: Fraction
    rel: str
    right: Fraction

    def holds(self) -> bool:
        if self.rel == ">":
            return self.left > self.right
        if self.rel == "=":
            return self.left == self.right
        return self.left >= self.right

    def __str__(self) -> str:
        return f"{self.left} {self.rel} {self.right}"


@dataclass(frozen=True)
class Substitution:
    terms: Mapping[str, Term] = field(default_factory=dict)
    times: Mapping[str, Fraction] = field(default_factory=dict)
    nonces: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.nonces and len(set(self.nonces.values())) != len(self.nonces):
            raise ValueError("nonce renaming must be injective")

    def compose(self, other: Substitution) -> Substitution:
        """The substitution that applies ``self`` first and then ``other``."""
        terms = {v: apply_substitution(t, other) for v, t in self.terms.items()}
        for v, t in other.terms.items():
            terms.setdefault(v, t)
        times = dict(other.times)
        times.update(self.times)
        nonces = {n: other.nonces.get(m, m) for n, m in self.nonces.items()}
        for n, m in other.nonces.items():
            if n not in self.nonces and n not in nonces.values():
                nonces.setdefault(n, m)
        return Substitution(terms, times, nonces)

    def summary(self) -> dict[str, str]:
        out = {v: str(t) for v, t in self.terms.items()}
        out.update({v: str(t) for v, t in self.times.items()})
        return dict(sorted(out.items()))


def apply_substitution(x, s: Substitution, ground: bool = False):
    """Instantiate a term, fact or constraint under ``s``.

    With ``ground=True`` a variable missing from ``s`` raises
    :class:`UnboundVariable`; otherwise it is left in place.  A constraint
    whose two time variables are both bound becomes a :class:`GroundConstraint`.
    """
    if isinstance(x, Var):
        if x.name in s.terms:
            return s.terms[x.name]
        if ground:
            raise UnboundVariable(x.name)
        return x
    if isinstance(x, Const):
        return x
    if isinstance(x, Nonce):
        return Nonce(s.nonces.get(x.name, x.name))
    if isinstance(x, App):
        return App(x.fn, tuple(apply_substitution(a, s, ground) for a in x.args))
    if isinstance(x, Fact):
        if not x.args:
            return x
        return Fact(x.pred, tuple(apply_substitution(a, s, ground) for a in x.args))
    if isinstance(x, Constraint):
        missing = [v for v in x.variables if v not in s.times]
        if missing:
            if ground:
                raise UnboundVariable(missing[0])
            return x
        return GroundConstraint(s.times[x.left], x.rel, s.times[x.right] + x.offset)
    raise TypeError(f"cannot substitute into {type(x).__name__}")


@dataclass(frozen=True)
class Match:
    """One way of embedding a pattern multiset: bindings plus the target
    occurrence used by each pattern (in pattern order)."""

    subst: Substitution
    occurrences: tuple[int, ...]


def _match_term(p: Term, t: Term, terms: dict, nonces: dict, rename: bool) -> bool:
    if isinstance(p, Var):
        bound = terms.get(p.name)
        if bound is None:
            terms[p.name] = t
            return True
        return bound == t
    if isinstance(p, Nonce):
        if not rename:
            return p == t
        if not isinstance(t, Nonce):
            return False
        image = nonces.get(p.name)
        if image is None:
            if t.name in nonces.values():
                return False
            nonces[p.name] = t.name
            return True
        return image == t.name
    if isinstance(p, App):
        if not isinstance(t, App) or t.fn != p.fn or len(t.args) != len(p.args):
            return False
        return all(_match_term(a, b, terms, nonces, rename) for a, b in zip(p.args, t.args))
    return p == t


def match_fact(pattern: Fact, target: Fact, terms: dict, nonces: dict, rename: bool = False) -> bool:
    """Extend ``terms``/``nonces`` in place so that ``pattern`` becomes ``target``.

    The dictionaries may be left partially extended on failure; callers copy.
    """
    if pattern.pred != target.pred or len(pattern.args) != len(target.args):
        return False
    return all(_match_term(a, b, terms, nonces, rename) for a, b in zip(pattern.args, target.args))


_MATCHERS: dict[tuple[int, bool], tuple] = {}
_PURE = object()  # marks matchers that never bind anything


def _matcher(pattern: Fact, rename: bool):
    """A specialised ``match_fact(pattern, ., terms, nonces, rename)``.

    Ground arguments become equality tests and bare variables direct
    bindings; anything else falls back to the general term matcher.
    """
    key = (id(pattern), rename)
    hit = _MATCHERS.get(key)
    if hit is not None and hit[0] is pattern:
        return hit[1], hit[2]
    ops = []
    for i, a in enumerate(pattern.args):
        if isinstance(a, Var):
            ops.append((0, i, a.name))
        elif not term_vars(a) and (not rename or not any(
                isinstance(x, Nonce) for x in iter_subterms(a))):
            ops.append((1, i, a))
        else:
            ops.append((2, i, a))
    pred, arity = pattern.pred, len(pattern.args)
    if not ops:
        def fn(target, terms, nonces):
            return target.pred == pred and not target.args
    elif all(op == 1 for op, _, _ in ops):
        text = pattern.text
        def fn(target, terms, nonces):
            return target.text == text
    else:
        def fn(target, terms, nonces):
            args = target.args
            if target.pred != pred or len(args) != arity:
                return False
            for op, i, a in ops:
                t = args[i]
                if op == 0:
                    bound = terms.get(a)
                    if bound is None:
                        terms[a] = t
                    elif bound != t:
                        return False
                elif op == 1:
                    if a != t:
                        return False
                elif not _match_term(a, t, terms, nonces, rename):
                    return False
            return True
    pure = all(op == 1 for op, _, _ in ops)
    _MATCHERS[key] = (pattern, fn, pure)
    return fn, pure


def match_multiset(
    patterns: Sequence[tuple[Fact, str]],
    target: Sequence,
    rename_nonces: bool = False,
    distinct: bool = False,
) -> list[Match]:
    """Every injective embedding of ``patterns`` into ``target``.

    ``target`` holds objects with ``fact`` and ``time`` attributes.  A time
    variable shared by two patterns forces equal timestamps.  Results come
    in pattern order, then target occurrence order.

    With ``distinct`` embeddings that differ only in which copy of a
    repeated target element they use are reported once; this relies on
    equal elements being adjacent in ``target``.
    """
    out: list[Match] = []
    n = len(patterns)
    tests = [_matcher(pf, rename_nonces) for pf, _ in patterns]
    tvars = [tv for _, tv in patterns]
    # candidate positions per pattern: same predicate and arity
    cands = []
    for pf, _ in patterns:
        arity = len(pf.args)
        cands.append([(j, tf) for j, tf in enumerate(target)
                      if tf.fact.pred == pf.pred and len(tf.fact.args) == arity])
        if not cands[-1]:
            return out

    def go(i: int, used: tuple[int, ...], terms: dict, times: dict, nonces: dict) -> None:
        if i == n:
            # no dict is mutated once a branch has been extended past it
            out.append(Match(Substitution(terms, times, nonces), used))
            return
        tvar = tvars[i]
        test, pure = tests[i]
        bound = times.get(tvar)
        for j, tf in cands[i]:
            if j in used:
                continue
            if distinct and j and (j - 1) not in used and (target[j - 1] is tf or target[j - 1] == tf):
                continue
            if bound is not None and bound != tf.time:
                continue
            if pure:
                if not test(tf.fact, terms, nonces):
                    continue
                t2, n2 = terms, nonces
            else:
                t2, n2 = dict(terms), dict(nonces)
                if not test(tf.fact, t2, n2):
                    continue
            tm2 = times if bound is not None else {**times, tvar: tf.time}
            go(i + 1, used + (j,), t2, tm2, n2)

    go(0, (), {}, {}, {})
    return out


def nonce_index(name: str) -> int:
    return int(name[1:])


class NoncePool:
    """Source of fresh nonce names ``n1, n2, ...``.

    In ``symbolic`` mode names are recycled from a fixed pool of ``capacity``
    names: a name is fresh when it is not live in the configuration being
    rewritten.  In ``concrete`` mode a counter mints names that were never
    handed out before.  Not thread-safe.
    """

    def __init__(self, capacity: int | None = None, mode: str = "symbolic"):
        if mode not in ("symbolic", "concrete"):
            raise ValueError(f"unknown nonce pool mode {mode!r}")
        self.capacity = capacity
        self.mode = mode
        self.counter = 0

    def fresh(self, live: Iterable[str] = ()) -> str:
        live = set(live)
        if self.mode == "concrete":
            self.counter += 1
            while f"n{self.counter}" in live:
                self.counter += 1
            return f"n{self.counter}"
        i = 1
        while f"n{i}" in live:
            i += 1
        if self.capacity is not None and i > self.capacity:
            raise PoolExhausted(
                f"all {self.capacity} nonce names are live; the fact-size bound is violated"
            )
        return f"n{i}"
