"""Exact dense-time semantics over rational timestamps.

Relations between two timestamps are summarised by an integer *region code*
(see :func:`region`): it records exactly which constraints ``t_i > t_j + N``
and ``t_i = t_j + N`` with ``|N| <= d`` hold.  Profiles, equivalence and
immediate successors are all built on it.
"""

from __future__ import annotations

import math
from bisect import insort
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count, permutations, product
from typing import Iterable, Iterator, Sequence

from .errors import (
    IllegalStep,
    InvalidConfiguration,
    NegativeEpsilon,
    UnboundVariable,
)
from .terms import (
    TIME,
    TIME_FACT,
    Alphabet,
    Constraint,
    Fact,
    NoncePool,
    Nonce,
    Substitution,
    Var,
    apply_substitution,
    fact_nonces,
    fact_size,
    fact_vars,
    match_fact,
    match_multiset,
    shape,
)


def as_time(x) -> Fraction:
    if isinstance(x, float):
        # decimal literal semantics: 0.4 means 2/5, not the nearest double
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True, slots=True)
class TimestampedFact:
    fact: Fact
    time: Fraction

    def __post_init__(self) -> None:
        if not isinstance(self.time, Fraction):
            object.__setattr__(self, "time", as_time(self.time))

    def __str__(self) -> str:
        return f"{self.fact}@{self.time}"


def _tf_key(tf: TimestampedFact):
    return (tf.time, tf.fact.text)


@dataclass(frozen=True)
class Configuration:
    """A multiset of ground timestamped facts with exactly one ``Time`` fact.

    Facts are kept sorted by (timestamp, text), so equality is multiset
    equality and iteration order is deterministic.
    """

    facts: tuple[TimestampedFact, ...]

    def __post_init__(self) -> None:
        facts = tuple(sorted(self.facts, key=_tf_key))
        object.__setattr__(self, "facts", facts)
        clocks = [tf for tf in facts if tf.fact.pred == TIME]
        if len(clocks) != 1:
            raise InvalidConfiguration(
                f"a configuration needs exactly one Time fact, found {len(clocks)}"
            )
        if clocks[0].fact.args:
            raise InvalidConfiguration("Time takes no arguments")
        for tf in facts:
            if tf.time < 0:
                raise InvalidConfiguration(f"negative timestamp in {tf}")
            if not tf.fact.ground:
                raise InvalidConfiguration(f"non-ground fact {tf.fact}")

    @classmethod
    def _trusted(cls, facts, presorted: bool = False) -> Configuration:
        """Build from facts already known to form a valid configuration."""
        c = object.__new__(cls)
        object.__setattr__(c, "facts", tuple(facts) if presorted else tuple(sorted(facts, key=_tf_key)))
        return c

    @classmethod
    def of(cls, *items) -> Configuration:
        """``Configuration.of((Fact('F'), '3.5'), (TIME_FACT, 1))`` or from
        :class:`TimestampedFact` values."""
        facts = []
        for it in items:
            if isinstance(it, TimestampedFact):
                facts.append(it)
            else:
                f, t = it
                if isinstance(t, str):
                    t = Fraction(t)
                facts.append(TimestampedFact(f, as_time(t)))
        return cls(tuple(facts))

    def __iter__(self) -> Iterator[TimestampedFact]:
        return iter(self.facts)

    def __len__(self) -> int:
        return len(self.facts)

    def __str__(self) -> str:
        return "{" + ", ".join(map(str, self.facts)) + "}"

    @property
    def time(self) -> Fraction:
        return self.facts[self.time_index].time

    @property
    def time_index(self) -> int:
        for i, tf in enumerate(self.facts):
            if tf.fact.pred == TIME:
                return i
        raise AssertionError("unreachable")

    @property
    def others(self) -> tuple[TimestampedFact, ...]:
        return tuple(tf for tf in self.facts if tf.fact.pred != TIME)

    def nonces(self) -> set[str]:
        return {n for tf in self.facts for n in fact_nonces(tf.fact)}

    def untimed(self) -> list[Fact]:
        return [tf.fact for tf in self.facts]

    def max_fact_size(self) -> int:
        return max(fact_size(tf.fact) for tf in self.facts)


@dataclass(frozen=True)
class Pattern:
    fact: Fact
    tvar: str

    def __str__(self) -> str:
        return f"{self.fact}@{self.tvar}"


@dataclass(frozen=True)
class Created:
    fact: Fact
    delay: int

    def __str__(self) -> str:
        return f"{self.fact}@(T+{self.delay})"


@dataclass(frozen=True)
class Rule:
    """Instantaneous rule.

    ``pre`` includes the ``Time`` pattern.  Pre-condition facts whose index
    is in ``consumed`` are removed; the others persist.  ``created`` facts are
    stamped with the current time plus their delay.
    """

    name: str
    pre: tuple[Pattern, ...]
    guard: tuple[Constraint, ...] = ()
    exists: tuple[str, ...] = ()
    created: tuple[Created, ...] = ()
    consumed: tuple[int, ...] = ()
    loc: tuple[int, int] = field(default=(0, 0), compare=False)

    def __post_init__(self) -> None:
        for attr in ("pre", "guard", "exists", "created"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        # identical pre items are interchangeable; consume the last copies
        consumed = set(self.consumed)
        norm = []
        groups: dict[Pattern, list[int]] = {}
        for i, p in enumerate(self.pre):
            groups.setdefault(p, []).append(i)
        for idxs in groups.values():
            k = sum(1 for i in idxs if i in consumed)
            norm.extend(idxs[len(idxs) - k:])
        object.__setattr__(self, "consumed", tuple(sorted(norm)))

    @property
    def time_var(self) -> str | None:
        for p in self.pre:
            if p.fact.pred == TIME:
                return p.tvar
        return None

    @property
    def persistent(self) -> tuple[Pattern, ...]:
        return tuple(p for i, p in enumerate(self.pre)
                     if i not in self.consumed and p.fact.pred != TIME)

    @property
    def balanced(self) -> bool:
        return len(self.consumed) == len(self.created)

    def facts(self) -> Iterator[Fact]:
        for p in self.pre:
            yield p.fact
        for c in self.created:
            yield c.fact


@dataclass(frozen=True)
class SpecPair:
    patterns: tuple[Pattern, ...]
    constraints: tuple[Constraint, ...] = ()
    loc: tuple[int, int] = field(default=(0, 0), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "patterns", tuple(self.patterns))
        object.__setattr__(self, "constraints", tuple(self.constraints))


@dataclass(frozen=True)
class PairSpec:
    """Critical or goal specification: a configuration matches when some pair
    embeds into it with all of the pair's constraints satisfied."""

    pairs: tuple[SpecPair, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", tuple(self.pairs))

    def __bool__(self) -> bool:
        return bool(self.pairs)

    def max_offset(self) -> int:
        return max((abs(c.offset) for p in self.pairs for c in p.constraints), default=0)


def problem_numbers(initial: Configuration, rules: Sequence[Rule] = (),
                    critical: PairSpec = PairSpec(), goal: PairSpec = PairSpec()) -> list[Fraction]:
    nums = [tf.time for tf in initial]
    for r in rules:
        nums += [Fraction(abs(c.offset)) for c in r.guard]
        nums += [Fraction(c.delay) for c in r.created]
    for spec in (critical, goal):
        nums += [Fraction(abs(c.offset)) for p in spec.pairs for c in p.constraints]
    return nums


def smallest_dmax(numbers: Iterable) -> int:
    """Smallest natural strictly greater than ``max(numbers) + 1``."""
    top = max((as_time(n) for n in numbers), default=Fraction(0))
    return math.floor(top + 1) + 1


def compute_dmax(initial: Configuration, rules: Sequence[Rule] = (),
                 critical: PairSpec = PairSpec(), goal: PairSpec = PairSpec(),
                 override: int | None = None) -> int:
    auto = smallest_dmax(problem_numbers(initial, rules, critical, goal))
    if override is None:
        return auto
    if override < auto:
        raise ValueError(f"dmax {override} is below the required bound {auto}")
    return override


@dataclass(frozen=True)
class Problem:
    initial: Configuration
    rules: tuple[Rule, ...] = ()
    critical: PairSpec = PairSpec()
    goal: PairSpec = PairSpec()
    dmax: int | None = None
    k: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.dmax is None:
            object.__setattr__(self, "dmax", compute_dmax(
                self.initial, self.rules, self.critical, self.goal))
        if self.k is None:
            object.__setattr__(self, "k", max(fact_size(f) for f in self.all_facts()))

    def all_facts(self) -> Iterator[Fact]:
        for tf in self.initial:
            yield tf.fact
        for r in self.rules:
            yield from r.facts()
        for spec in (self.critical, self.goal):
            for pair in spec.pairs:
                for p in pair.patterns:
                    yield p.fact

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet.of_facts(self.all_facts())

    @property
    def m(self) -> int:
        return len(self.initial)

    @property
    def balanced(self) -> bool:
        return all(r.balanced for r in self.rules)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


def eval_constraint(c: Constraint, binding, scale: int = 1) -> bool:
    """Truth of ``c`` under ``binding``; offsets are multiplied by ``scale``
    (for timestamps counted in units of ``1/scale``)."""
    try:
        left, right = binding[c.left], binding[c.right] + c.offset * scale
    except KeyError as e:
        raise UnboundVariable(e.args[0]) from None
    if c.rel == ">":
        return left > right
    if c.rel == "=":
        return left == right
    return left >= right


def tick(s: Configuration, epsilon) -> Configuration:
    eps = as_time(epsilon)
    if eps < 0:
        raise NegativeEpsilon(f"cannot tick by {eps}")
    if eps == 0:
        return s
    facts = list(s.facts)
    i = s.time_index
    facts[i] = TimestampedFact(TIME_FACT, facts[i].time + eps)
    return Configuration._trusted(facts)


def _guard_holds(rule: Rule, times) -> bool:
    return all(eval_constraint(c, times) for c in rule.guard)


_CREATED: dict[int, tuple] = {}


def _created(rule: Rule) -> list[tuple[Fact, int, bool]]:
    """Created patterns with a flag for those needing no substitution."""
    hit = _CREATED.get(id(rule))
    if hit is None or hit[0] is not rule:
        made = [(c.fact, c.delay, c.fact.ground and not fact_nonces(c.fact))
                for c in rule.created]
        hit = _CREATED[id(rule)] = (rule, made)
    return hit[1]


def _fire(rule: Rule, s: Configuration, subst: Substitution, used: Sequence[int]) -> Configuration:
    now = s.time
    gone = {used[i] for i in rule.consumed}
    kept = [tf for j, tf in enumerate(s.facts) if j not in gone]
    for fact, delay, fixed in _created(rule):
        f = fact if fixed else apply_substitution(fact, subst, ground=True)
        insort(kept, TimestampedFact(f, now + delay), key=_tf_key)
    # ground by construction: apply_substitution(ground=True) would have raised
    return Configuration._trusted(kept, presorted=True)


def applicable_instances(rule: Rule, s: Configuration, pool: NoncePool | None = None,
                         avoid: Iterable[str] = ()) -> list[tuple[Substitution, Configuration]]:
    """Every instance of ``rule`` enabled in ``s`` with its result.

    Existential variables receive nonce names that are not live in ``s``.
    Instances that differ only in which copy of a duplicated fact they used
    are reported once.  Names in ``avoid`` are never used as fresh nonces.
    """
    pats = [(p.fact, p.tvar) for p in rule.pre]
    out = []
    live = s.nonces() | set(avoid) if rule.exists else set()
    pool = pool or NoncePool()
    # distinct matches have distinct substitutions, so no further dedup
    for m in match_multiset(pats, s.facts, distinct=True):
        if not _guard_holds(rule, m.subst.times):
            continue
        terms = dict(m.subst.terms)
        chosen = set(live)
        for x in rule.exists:
            name = pool.fresh(chosen)
            chosen.add(name)
            terms[x] = Nonce(name)
        subst = Substitution(terms, m.subst.times)
        out.append((subst, _fire(rule, s, subst, m.occurrences)))
    return out


def apply_instance(rule: Rule, s: Configuration, subst: Substitution) -> Configuration:
    """Apply the instance of ``rule`` given by ``subst``; raise
    :class:`IllegalStep` if that instance is not enabled in ``s``."""
    need = set()
    for p in rule.pre:
        need |= fact_vars(p.fact)
    for c in rule.created:
        need |= fact_vars(c.fact)
    missing = sorted(v for v in need if v not in subst.terms)
    missing += sorted(p.tvar for p in rule.pre if p.tvar not in subst.times)
    if missing:
        raise IllegalStep(f"rule {rule.name}: substitution leaves {missing[0]} unbound")
    if subst.times[rule.time_var] != s.time:
        raise IllegalStep(f"rule {rule.name}: {rule.time_var} must equal the current time {s.time}")
    live = s.nonces()
    fresh = []
    for x in rule.exists:
        t = subst.terms[x]
        if not isinstance(t, Nonce) or t.name in live or t.name in fresh:
            raise IllegalStep(f"rule {rule.name}: {x} must be bound to a fresh nonce, got {t}")
        fresh.append(t.name)
    used: list[int] = []
    for p in rule.pre:
        want = TimestampedFact(apply_substitution(p.fact, subst, ground=True), subst.times[p.tvar])
        for j, tf in enumerate(s.facts):
            if j not in used and tf == want:
                used.append(j)
                break
        else:
            raise IllegalStep(f"rule {rule.name}: {want} is not available")
    if not _guard_holds(rule, subst.times):
        raise IllegalStep(f"rule {rule.name}: guard is false")
    return _fire(rule, s, subst, used)


# -- regions, profiles, equivalence ------------------------------------------------


def region(diff: Fraction, d: int) -> int:
    """Integer code of ``diff`` against the grid ``-d..d``.

    ``2n`` for ``diff == n``; ``2n+1`` for ``n < diff < n+1``; everything
    above ``d`` collapses to ``2d+1`` and everything below ``-d`` to ``-2d-1``.
    Two differences satisfy the same constraints with offsets ``|N| <= d``
    iff their codes are equal.
    """
    if diff > d:
        return 2 * d + 1
    if diff < -d:
        return -2 * d - 1
    fl = math.floor(diff)
    if fl == diff:
        return 2 * fl
    return 2 * fl + 1


def holds_in_region(code: int, rel: str, offset: int) -> bool:
    if rel == "=":
        return code == 2 * offset
    if rel == ">":
        return code > 2 * offset
    return code >= 2 * offset


def _profile_order(s: Configuration) -> list[int]:
    ti = s.time_index
    return [ti] + [i for i in range(len(s)) if i != ti]


@dataclass(frozen=True)
class ConstraintProfile:
    """Satisfied constraints between the fact occurrences of a configuration.

    Occurrences are ordered Time first, then the remaining facts in
    configuration order, so a configuration and any tick of it line up
    position by position.
    """

    facts: tuple[TimestampedFact, ...]
    d: int
    codes: tuple[tuple[int, ...], ...] = field(repr=False)

    def __eq__(self, other) -> bool:
        return (isinstance(other, ConstraintProfile) and self.d == other.d
                and self.codes == other.codes)

    def __hash__(self) -> int:
        return hash((self.d, self.codes))

    def holds(self, i: int, rel: str, j: int, offset: int) -> bool:
        return holds_in_region(self.codes[i][j], rel, offset)

    def constraints(self) -> set[tuple[str, str, str, int]]:
        """All satisfied constraints as ``(fact_i, rel, fact_j, N)`` over the
        facts' text (``Time`` is the clock)."""
        out = set()
        names = [str(tf.fact) for tf in self.facts]
        for i in range(len(self.facts)):
            for j in range(len(self.facts)):
                if i == j:
                    continue
                for n in range(-self.d, self.d + 1):
                    for rel in (">", ">=", "="):
                        if self.holds(i, rel, j, n):
                            out.add((names[i], rel, names[j], n))
        return out


def constraint_profile(s: Configuration, d: int) -> ConstraintProfile:
    order = _profile_order(s)
    facts = tuple(s.facts[i] for i in order)
    codes = tuple(tuple(region(a.time - b.time, d) for b in facts) for a in facts)
    return ConstraintProfile(facts, d, codes)


def _signature(s: Configuration, d: int):
    shapes = tuple(sorted(shape(tf.fact) for tf in s))
    codes = tuple(sorted(region(a.time - b.time, d) for a in s for b in s))
    return shapes, codes


def equivalent(s1: Configuration, s2: Configuration, dmax: int) -> bool:
    """Same untimed facts up to a nonce bijection, aligned so that every pair
    of occurrences satisfies the same constraints with offsets up to ``dmax``."""
    if len(s1) != len(s2):
        return False
    if _signature(s1, dmax) != _signature(s2, dmax):
        return False
    a, b = s1.facts, s2.facts
    n = len(a)
    assign: list[int] = []

    def go(i: int, used: set, fwd: dict, bwd: dict) -> bool:
        if i == n:
            return True
        for j in range(n):
            if j in used:
                continue
            if any(region(a[i].time - a[p].time, dmax) != region(b[j].time - b[q].time, dmax)
                   or region(a[p].time - a[i].time, dmax) != region(b[q].time - b[j].time, dmax)
                   for p, q in enumerate(assign)):
                continue
            f2, b2 = dict(fwd), dict(bwd)
            if not _nonce_align(a[i].fact, b[j].fact, f2, b2):
                continue
            assign.append(j)
            if go(i + 1, used | {j}, f2, b2):
                return True
            assign.pop()
        return False

    return go(0, set(), {}, {})


def equivalence_key(s: Configuration, dmax: int):
    """Hashable complete invariant of :func:`equivalent`.

    Region codes fix the timestamp order, so sorting by time lines up any two
    equivalent configurations up to permutations of equal-time facts of the
    same shape; those only matter through nonce names, and the least
    first-occurrence renaming over them is taken.
    """
    facts = sorted(s.facts, key=lambda tf: (tf.time, shape(tf.fact), tf.fact.text))
    codes = tuple(region(a.time - b.time, dmax) for a in facts for b in facts)
    groups: list[list[Fact]] = []
    last = None
    for tf in facts:
        k = (tf.time, shape(tf.fact))
        if k == last:
            groups[-1].append(tf.fact)
        else:
            groups.append([tf.fact])
        last = k
    choices = [list(dict.fromkeys(permutations(g))) if len(g) > 1 and fact_nonces(g[0]) else [tuple(g)]
               for g in groups]
    best = None
    for combo in product(*choices):
        names: dict[str, str] = {}
        for f in (f for part in combo for f in part):
            for n in fact_nonces(f):
                names.setdefault(n, f"n{len(names) + 1}")
        sub = Substitution(nonces=names)
        texts = tuple(apply_substitution(f, sub).text for part in combo for f in part)
        if best is None or texts < best:
            best = texts
    return codes, best


def _nonce_align(f: Fact, g: Fact, fwd: dict, bwd: dict) -> bool:
    if shape(f) != shape(g):
        return False
    for x, y in zip(fact_nonces(f), fact_nonces(g)):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    # constants and function symbols already agree through the shape
    return True


def spec_match(s: Configuration, spec: PairSpec):
    """First ``(pair, Match)`` under which ``s`` matches ``spec``, else None."""
    for pair in spec.pairs:
        pats = [(p.fact, p.tvar) for p in pair.patterns]
        for m in match_multiset(pats, s.facts, rename_nonces=True):
            if all(eval_constraint(c, m.subst.times) for c in pair.constraints):
                return pair, m
    return None


def matches_spec(s: Configuration, spec: PairSpec) -> bool:
    return spec_match(s, spec) is not None


def classify_facts(s: Configuration) -> list[tuple[TimestampedFact, str]]:
    """Label each non-Time fact as past, present or future relative to Time."""
    now = s.time
    out = []
    for tf in s.others:
        kind = "future" if tf.time > now else "past" if tf.time < now else "present"
        out.append((tf, kind))
    return out


# -- time advancement --------------------------------------------------------------


@dataclass(frozen=True)
class Successor:
    kind: str                            # "boundary" or "open"
    representative: Configuration | None
    epsilon: Fraction | None             # least positive profile-change delay


def profile_change_delay(s: Configuration, d: int) -> Fraction | None:
    """Least ``eps > 0`` at which Time becomes an integer distance ``n``
    (``|n| <= d``) from some other fact, or None if that never happens."""
    now = s.time
    best = None
    for tf in s.others:
        # smallest n in [-d, d] with tf.time + n > now
        n = math.floor(now - tf.time) + 1
        if n < -d:
            n = -d
        if n > d:
            continue
        eps = tf.time + n - now
        if best is None or eps < best:
            best = eps
    return best


def on_boundary(s: Configuration, d: int) -> bool:
    """True when Time satisfies some equality ``T = T_F + n`` with ``|n| <= d``."""
    now = s.time
    for tf in s.others:
        diff = now - tf.time
        if diff.denominator == 1 and abs(diff) <= d:
            return True
    return False


def immediate_successor_reps(s: Configuration, d: int) -> Successor:
    eps = profile_change_delay(s, d)
    if on_boundary(s, d):
        rep = tick(s, eps / 2 if eps is not None else 1)
        return Successor("boundary", rep, eps)
    if eps is None:
        return Successor("open", None, None)
    return Successor("open", tick(s, eps), eps)


def is_immediate_successor(s1: Configuration, s2: Configuration, d: int) -> bool:
    """Decide the immediate-successor relation exactly.

    Between two consecutive profile-change instants the profile is constant,
    so it is enough to inspect every change instant inside ``(0, eps)`` and
    one point of each open piece.
    """
    if [tf for tf in s1.others] != [tf for tf in s2.others]:
        return False
    eps = s2.time - s1.time
    if eps <= 0:
        return False
    p1, p2 = constraint_profile(s1, d), constraint_profile(s2, d)
    if p1 == p2:
        return False
    cuts = [Fraction(0)]
    for e in time_events(s1, change_only=True, d=d):
        if e >= eps:
            break
        cuts.append(e)
    cuts.append(eps)
    probes = cuts[1:-1] + [(x + y) / 2 for x, y in zip(cuts, cuts[1:])]
    return all(constraint_profile(tick(s1, e), d) in (p1, p2) for e in probes)


def time_events(s: Configuration, change_only: bool = False, d: int | None = None) -> Iterator[Fraction]:
    """Increasing positive delays at which Time meets a unit-circle position.

    By default these are the delays where the fractional part of Time equals
    zero or the fractional part of another fact.  With ``change_only`` only
    delays that change the profile w.r.t. ``d`` are produced.
    """
    now = s.time
    if change_only:
        marks = set()
        for tf in s.others:
            for n in range(-d, d + 1):
                e = tf.time + n - now
                if e > 0:
                    marks.add(e)
        yield from sorted(marks)
        return
    fracs = sorted({Fraction(0)} | {tf.time - math.floor(tf.time) for tf in s.others})
    base = math.floor(now)
    for w in count():
        for f in fracs:
            e = base + w + f - now
            if e > 0:
                yield e


def tick_positions(s: Configuration, steps: int) -> Fraction:
    """Delay that moves Time ``steps`` unit-circle positions forward.

    Positions alternate between *points* (Time's fractional part equals zero
    or some fact's) and the *open arcs* between them; arcs are entered at
    their midpoint.
    """
    if steps <= 0:
        return Fraction(0)
    now = s.time
    frac_now = now - math.floor(now)
    at_point = frac_now == 0 or any(
        tf.time - math.floor(tf.time) == frac_now for tf in s.others)
    events = time_events(s)
    prev = Fraction(0)
    pos = 0 if at_point else 1  # parity: 0 = at a point, 1 = inside an arc
    taken = 0
    while True:
        e = next(events)
        if pos == 0:
            # leave the point into the arc (prev, e)
            taken += 1
            if taken == steps:
                return (prev + e) / 2
        # reach the point e
        taken += 1
        if taken == steps:
            return e
        prev = e
        pos = 0


def steps_for_delay(s: Configuration, eps: Fraction) -> int:
    """Inverse of :func:`tick_positions`: positions crossed by a tick of ``eps``."""
    if eps <= 0:
        return 0
    now = s.time
    frac_now = now - math.floor(now)
    at_point = frac_now == 0 or any(
        tf.time - math.floor(tf.time) == frac_now for tf in s.others)
    steps = 0
    pos_is_point = at_point
    for e in time_events(s):
        if pos_is_point:
            steps += 1  # into the arc before e
        if eps < e:
            return steps
        steps += 1  # onto the point e
        if eps == e:
            return steps
        pos_is_point = True
    raise AssertionError("unreachable")
