"""Non-critical reachability over circle-configurations, witnesses, validation."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .circle import (
    CircleConfiguration,
    abstract,
    apply_symbolic,
    canonical,
    canonicalize,
    cc_matches_spec,
    next_circle,
)
from .errors import (
    BoundOverflow,
    IllegalStep,
    NonTerminatingExpansion,
    NotBalanced,
    OffsetExceedsDmax,
    ReplayMismatch,
    SearchBudgetExceeded,
    SizeBoundViolation,
    TraceSchemaError,
)
from .semantics import (
    Configuration,
    Problem,
    applicable_instances,
    apply_instance,
    matches_spec,
    steps_for_delay,
    tick,
    tick_positions,
)
from .terms import Substitution, fact_size

log = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"


def state_bound(J: int, E: int, m: int, k: int, dmax: int) -> int:
    """Number of distinct circle-configurations with ``m`` facts of size ``k``."""
    if m <= 0:
        return 1
    return J ** m * (E + 2 * m * k) ** (m * k) * m ** m * (dmax + 2) ** (m - 1)


def problem_bound(p: Problem) -> int:
    a = p.alphabet
    return state_bound(a.J, a.E, p.m, p.k, p.dmax)


@dataclass(frozen=True)
class SymbolicStep:
    kind: str  # "rule" or "next"
    result: CircleConfiguration
    key: str
    rule: str | None = None
    substitution: Substitution | None = None


@dataclass(frozen=True)
class SymbolicTrace:
    start: CircleConfiguration
    steps: tuple[SymbolicStep, ...] = ()

    @property
    def start_key(self) -> str:
        return canonicalize(self.start)

    def states(self) -> list[CircleConfiguration]:
        return [self.start] + [s.result for s in self.steps]


@dataclass
class Verdict:
    reachable: bool
    states_visited: int
    bound: int
    trace: SymbolicTrace | None = None
    mode: str = "visited"


def check_solvable(p: Problem) -> None:
    for r in p.rules:
        if not r.balanced:
            raise NotBalanced(f"rule {r.name} is not balanced; the symbolic solver"
                              " needs balanced rules")
    for spec in (p.critical, p.goal):
        if spec.max_offset() > p.dmax:
            raise OffsetExceedsDmax(f"offset {spec.max_offset()} exceeds dmax {p.dmax}")
    p.alphabet.check()


class _Graph:
    """Successor function over canonical circle-configurations."""

    def __init__(self, p: Problem):
        self.p = p
        self.capacity = 2 * p.m * p.k
        self.sizes: dict[str, int] = {}

    def successors(self, a: CircleConfiguration) -> list[tuple[SymbolicStep, CircleConfiguration]]:
        out = []
        seen = set()
        sizes = self.sizes
        for r in self.p.rules:
            for sub, b in apply_symbolic(r, a, self.capacity):
                for f, _, _ in b.entries:
                    size = sizes.get(f.text)
                    if size is None:
                        size = sizes[f.text] = fact_size(f)
                    if size > self.p.k:
                        raise SizeBoundViolation(
                            f"rule {r.name} creates {f}, larger than k={self.p.k}")
                key, b = canonical(b)
                if key in seen:
                    continue
                seen.add(key)
                out.append((SymbolicStep("rule", b, key, r.name, sub), b))
        key, b = canonical(next_circle(a))
        out.append((SymbolicStep("next", b, key), b))
        return out

    def critical(self, a: CircleConfiguration) -> bool:
        return bool(self.p.critical) and cc_matches_spec(a, self.p.critical)

    def goal(self, a: CircleConfiguration) -> bool:
        return bool(self.p.goal) and cc_matches_spec(a, self.p.goal)


def solve(p: Problem, mode: str = "visited", max_states: int | None = None,
          workers: int = 1, budget: int | None = None) -> Verdict:
    """Decide whether a goal is reachable from ``p.initial`` along a
    non-critical trace.

    ``visited`` runs a breadth-first search with a set of canonical keys and
    so returns a shortest symbolic trace.  ``depth`` is an iterative
    deepening search that keeps only the current path in memory.
    """
    check_solvable(p)
    if mode == "visited":
        return _solve_bfs(p, max_states, workers)
    if mode == "depth":
        return _solve_depth(p, budget)
    raise ValueError(f"unknown mode {mode!r}")


def _solve_bfs(p: Problem, max_states: int | None, workers: int) -> Verdict:
    g = _Graph(p)
    bound = problem_bound(p)
    key0, a0 = canonical(abstract(p.initial, p.dmax))
    parent: dict[str, tuple[str, SymbolicStep] | None] = {key0: None}
    level = [(key0, a0)]
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        while level:
            live = []
            for key, a in level:
                if g.critical(a):
                    continue
                if g.goal(a):
                    return Verdict(True, len(parent), bound,
                                   _rebuild_trace(parent, key, a0), "visited")
                live.append((key, a))
            if pool is not None:
                expanded = list(pool.map(lambda ka: g.successors(ka[1]), live))
            else:
                expanded = [g.successors(a) for _, a in live]
            nxt = []
            for (key, _), succ in zip(live, expanded):
                for step, b in succ:
                    if step.key in parent:
                        continue
                    parent[step.key] = (key, step)
                    nxt.append((step.key, b))
                    if max_states is not None and len(parent) > max_states:
                        raise SearchBudgetExceeded(
                            f"more than {max_states} states visited")
            level = nxt
    finally:
        if pool is not None:
            pool.shutdown()
    log.debug("explored %d states", len(parent))
    return Verdict(False, len(parent), bound, None, "visited")


def _rebuild_trace(parent, key, start) -> SymbolicTrace:
    steps = []
    while parent[key] is not None:
        prev, step = parent[key]
        steps.append(step)
        key = prev
    return SymbolicTrace(start, tuple(reversed(steps)))


def _solve_depth(p: Problem, budget: int | None) -> Verdict:
    g = _Graph(p)
    bound = problem_bound(p)
    key0, a0 = canonical(abstract(p.initial, p.dmax))
    budget = budget if budget is not None else 5_000_000
    expansions = 0
    longest = 1

    def dfs(a, path_keys: list[str], steps: list, limit: int):
        nonlocal expansions, longest
        longest = max(longest, len(path_keys))
        if g.critical(a):
            return None, False
        if g.goal(a):
            return list(steps), False
        if len(steps) >= limit:
            return None, True
        expansions += 1
        if expansions > budget:
            raise BoundOverflow(f"depth-bounded search exceeded {budget} expansions"
                                f" (state bound {bound})")
        cut = False
        for step, b in g.successors(a):
            if step.key in path_keys:
                continue
            path_keys.append(step.key)
            steps.append(step)
            found, c = dfs(b, path_keys, steps, limit)
            steps.pop()
            path_keys.pop()
            if found is not None:
                return found, False
            cut = cut or c
        return None, cut

    limit = 1
    while True:
        found, cut = dfs(a0, [key0], [], min(limit, bound))
        if found is not None:
            return Verdict(True, longest, bound, SymbolicTrace(a0, tuple(found)), "depth")
        if not cut or limit >= bound:
            return Verdict(False, longest, bound, None, "depth")
        limit *= 2


# -- concrete witnesses ------------------------------------------------------------


@dataclass(frozen=True)
class ConcreteStep:
    kind: str  # "rule" or "tick"
    rule: str | None = None
    substitution: Substitution | None = None
    epsilon: Fraction | None = None
    state: str | None = None  # canonical key of the circle-configuration after the step


@dataclass(frozen=True)
class ConcreteTrace:
    start: Configuration
    steps: tuple[ConcreteStep, ...] = ()

    def configurations(self, p: Problem) -> Iterator[Configuration]:
        s = self.start
        yield s
        for st in self.steps:
            s = replay_step(p, s, st)
            yield s


def replay_step(p: Problem, s: Configuration, st: ConcreteStep) -> Configuration:
    if st.kind == "tick":
        if st.epsilon is None or st.epsilon <= 0:
            raise IllegalStep(f"tick needs a positive epsilon, got {st.epsilon}")
        return tick(s, st.epsilon)
    try:
        rule = p.rule(st.rule)
    except KeyError:
        raise IllegalStep(f"unknown rule {st.rule}") from None
    if st.substitution is not None:
        return apply_instance(rule, s, st.substitution)
    if st.state is not None:
        for _, res in applicable_instances(rule, s):
            if canonicalize(abstract(res, p.dmax)) == st.state:
                return res
        raise IllegalStep(f"no instance of {st.rule} reaches {st.state}")
    found = applicable_instances(rule, s)
    if not found:
        raise IllegalStep(f"rule {st.rule} is not applicable")
    return found[0][1]


def concretize_trace(t: SymbolicTrace, p: Problem) -> ConcreteTrace:
    """Turn a symbolic trace into a replayable trace with exact delays.

    Each maximal run of ``n`` next steps becomes one tick that moves Time
    ``n`` unit-circle positions forward.
    """
    s = p.initial
    if canonicalize(abstract(s, p.dmax)) != t.start_key:
        raise ReplayMismatch("trace does not start at the initial configuration")
    out = []
    used = set(s.nonces())
    steps = list(t.steps)
    i = 0
    while i < len(steps):
        st = steps[i]
        if st.kind == "next":
            j = i
            while j < len(steps) and steps[j].kind == "next":
                j += 1
            eps = tick_positions(s, j - i)
            s = tick(s, eps)
            key = steps[j - 1].key
            if canonicalize(abstract(s, p.dmax)) != key:
                raise ReplayMismatch(f"tick by {eps} does not reach {key}")
            out.append(ConcreteStep("tick", epsilon=eps, state=key))
            i = j
            continue
        rule = p.rule(st.rule)
        for sub, res in applicable_instances(rule, s, avoid=used):
            if canonicalize(abstract(res, p.dmax)) == st.key:
                break
        else:
            raise ReplayMismatch(f"no instance of {st.rule} reaches {st.key}")
        used |= res.nonces()
        s = res
        out.append(ConcreteStep("rule", st.rule, sub, state=st.key))
        i += 1
    return ConcreteTrace(p.initial, tuple(out))


@dataclass
class Violation:
    step: int  # index of the offending step, -1 for the start
    kind: str  # "critical", "illegal" or "goal"
    message: str
    configuration: Configuration | None = None
    state: str | None = None


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    final: Configuration | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> Violation | None:
        return self.violations[0] if self.violations else None


def _tick_chain(s: Configuration, eps: Fraction, p: Problem, limit: int):
    """Yield ``(circle-configuration, concrete interpolant)`` for every class
    Time passes through while ticking ``s`` by ``eps``, the last one included."""
    target = canonicalize(abstract(tick(s, eps), p.dmax))
    a = abstract(s, p.dmax)
    seen = {canonicalize(a)}
    n = 0
    while True:
        a = next_circle(a)
        n += 1
        key = canonicalize(a)
        yield a, tick(s, tick_positions(s, n))
        if key == target:
            return
        if key in seen or n > limit:
            raise NonTerminatingExpansion(
                f"next chain from {s} does not reach the class of the tick by {eps}")
        seen.add(key)


def validate_concrete_trace(t: ConcreteTrace, p: Problem, check_goal: bool = True,
                            stop_at_first: bool = True) -> ValidationReport:
    """Check legality and non-criticality of ``t``.

    Every tick is split into its chain of immediate-successor classes, so a
    critical configuration skipped over by a long tick is still caught.
    """
    rep = ValidationReport()
    limit = max(problem_bound(p), 1)

    def bad(v: Violation) -> bool:
        rep.violations.append(v)
        return stop_at_first

    s = t.start
    if p.critical and matches_spec(s, p.critical):
        if bad(Violation(-1, "critical", f"start configuration {s} is critical", s,
                         canonicalize(abstract(s, p.dmax)))):
            return rep
    for i, st in enumerate(t.steps):
        try:
            nxt = replay_step(p, s, st)
        except IllegalStep as e:
            bad(Violation(i, "illegal", str(e), s))
            return rep
        if st.kind == "tick":
            for a, mid in _tick_chain(s, st.epsilon, p, limit):
                if p.critical and cc_matches_spec(a, p.critical):
                    if bad(Violation(i, "critical",
                                     f"tick by {st.epsilon} passes the critical class of {mid}",
                                     mid, canonicalize(a))):
                        return rep
                    break
        elif p.critical and matches_spec(nxt, p.critical):
            if bad(Violation(i, "critical", f"rule {st.rule} reaches critical {nxt}", nxt,
                             canonicalize(abstract(nxt, p.dmax)))):
                return rep
        s = nxt
    rep.final = s
    if check_goal and p.goal and not matches_spec(s, p.goal):
        bad(Violation(len(t.steps), "goal", f"final configuration {s} does not match the goal", s))
    return rep


# -- JSON ----------------------------------------------------------------------------


def _frac(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def symbolic_json(v: Verdict) -> dict:
    out = {"version": SCHEMA_VERSION, "reachable": v.reachable,
           "statesVisited": v.states_visited, "bound": str(v.bound), "trace": []}
    if v.trace is not None:
        out["start"] = v.trace.start_key
        for st in v.trace.steps:
            item = {"kind": st.kind}
            if st.rule is not None:
                item["rule"] = st.rule
                item["substitution"] = subst_json(st.substitution)
            item["state"] = st.key
            out["trace"].append(item)
    return out


def subst_json(sub: Substitution) -> dict:
    out = {v: str(t) for v, t in sub.terms.items()}
    out.update({v: _frac(t) for v, t in sub.times.items()})
    return dict(sorted(out.items()))


def concrete_json(t: ConcreteTrace) -> dict:
    steps = []
    for st in t.steps:
        item = {"kind": st.kind}
        if st.kind == "tick":
            item["epsilon"] = _frac(st.epsilon)
        else:
            item["rule"] = st.rule
            if st.substitution is not None:
                item["substitution"] = subst_json(st.substitution)
        if st.state is not None:
            item["state"] = st.state
        steps.append(item)
    return {"version": SCHEMA_VERSION,
            "start": [f"{tf.fact}@{_frac(tf.time)}" for tf in t.start], "trace": steps}


def report_json(r: ValidationReport) -> dict:
    out = {"valid": r.ok, "violations": []}
    for v in r.violations:
        item = {"step": v.step, "kind": v.kind, "message": v.message}
        if v.configuration is not None:
            item["configuration"] = str(v.configuration)
        if v.state is not None:
            item["state"] = v.state
        out["violations"].append(item)
    return out


def load_concrete_trace(data, p: Problem) -> ConcreteTrace:
    """Read a trace in the v1 schema.

    Accepts a verdict document (its ``witness`` member is used when present)
    or a bare trace document.  Replay starts from the problem's initial
    configuration unless the document carries an explicit ``start``.
    """
    from .lang import SpecError, parse_configuration, parse_term

    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as e:
            raise TraceSchemaError(f"not JSON: {e}") from None
    if not isinstance(data, dict):
        raise TraceSchemaError("trace document must be a JSON object")
    if isinstance(data.get("witness"), dict):
        data = data["witness"]
    if data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise TraceSchemaError(f"unsupported trace version {data.get('version')!r}")
    steps = data.get("trace")
    if not isinstance(steps, list):
        raise TraceSchemaError("missing 'trace' list")
    start = p.initial
    if isinstance(data.get("start"), list):
        try:
            start = parse_configuration("{" + ", ".join(data["start"]) + "}")
        except SpecError as e:
            raise TraceSchemaError(f"bad start configuration: {e}") from None
    out = []
    for i, item in enumerate(steps):
        if not isinstance(item, dict):
            raise TraceSchemaError(f"step {i} is not an object")
        kind = item.get("kind")
        if kind == "tick":
            try:
                eps = Fraction(item["epsilon"])
            except (KeyError, ValueError, TypeError, ZeroDivisionError):
                raise TraceSchemaError(f"step {i}: tick needs an 'epsilon' rational") from None
            out.append(ConcreteStep("tick", epsilon=eps, state=item.get("state")))
        elif kind == "rule":
            name = item.get("rule")
            if not isinstance(name, str):
                raise TraceSchemaError(f"step {i}: rule step needs a 'rule' name")
            sub = None
            if "substitution" in item:
                sub = _load_substitution(item["substitution"], p, name, i, parse_term)
            out.append(ConcreteStep("rule", name, sub, state=item.get("state")))
        elif kind == "next":
            raise TraceSchemaError(f"step {i}: 'next' steps are symbolic; validate needs"
                                   " a concrete trace (use check --witness)")
        else:
            raise TraceSchemaError(f"step {i}: unknown kind {kind!r}")
    return ConcreteTrace(start, tuple(out))


def _load_substitution(raw, p: Problem, rule_name: str, i: int, parse_term) -> Substitution:
    from .lang import SpecError

    if not isinstance(raw, dict):
        raise TraceSchemaError(f"step {i}: substitution must be an object")
    try:
        rule = p.rule(rule_name)
    except KeyError:
        return Substitution()  # replay reports the unknown rule
    tvars = {q.tvar for q in rule.pre}
    terms, times = {}, {}
    for k, v in raw.items():
        if not isinstance(v, str):
            raise TraceSchemaError(f"step {i}: binding of {k} must be a string")
        try:
            if k in tvars:
                times[k] = Fraction(v)
            else:
                terms[k] = parse_term(v)
        except (ValueError, ZeroDivisionError, SpecError):
            raise TraceSchemaError(f"step {i}: bad binding {k}={v!r}") from None
    return Substitution(terms, times)
