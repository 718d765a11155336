"""Circle-configurations: the finite symbolic view of a configuration.

A circle-configuration keeps, for every fact occurrence, the index of its
integer-part class (the delta part, with gaps between consecutive classes
truncated to ``inf`` above ``dmax``) and the index of its fractional-part
class on the unit circle (0 is the zero point, i.e. integer timestamps).

Occurrences are stored as ``(fact, d, u)`` triples rather than as two
separate partitions: with duplicated facts the two partitions alone do not
say which copy sits where.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations, product
from typing import NamedTuple

from .errors import InconsistentCircleConfiguration, NotBalanced, OffsetExceedsDmax
from .semantics import (
    Configuration,
    PairSpec,
    Rule,
    TimestampedFact,
    eval_constraint,
)
from .terms import (
    TIME,
    Fact,
    Nonce,
    NoncePool,
    Substitution,
    apply_substitution,
    fact_nonces,
    match_multiset,
    shape,
)

INF = math.inf
KEY_PREFIX = "cc1:"


def truncate(x, dmax: int):
    return x if x <= dmax else INF


def _entry_order(e):
    return (e[1], e[2], e[0].text)


@dataclass(frozen=True)
class CircleConfiguration:
    entries: tuple[tuple[Fact, int, int], ...]
    gaps: tuple = ()
    dmax: int = 0

    def __post_init__(self) -> None:
        entries = tuple(sorted(self.entries, key=_entry_order))
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "gaps", tuple(self.gaps))
        if sum(1 for f, _, _ in entries if f.pred == TIME) != 1:
            raise InconsistentCircleConfiguration("exactly one Time occurrence is required")
        ds = {d for _, d, _ in entries}
        if ds != set(range(len(ds))):
            raise InconsistentCircleConfiguration("delta classes must be non-empty and contiguous")
        us = {u for _, _, u in entries if u}
        if us != set(range(1, len(us) + 1)):
            raise InconsistentCircleConfiguration("unit-circle classes must be non-empty and contiguous")
        if len(self.gaps) != len(ds) - 1:
            raise InconsistentCircleConfiguration(
                f"{len(ds)} delta classes need {len(ds) - 1} gaps, got {len(self.gaps)}")
        for g in self.gaps:
            if not (g == INF or (isinstance(g, int) and 1 <= g <= self.dmax)):
                raise InconsistentCircleConfiguration(f"gap {g} outside 1..{self.dmax} or inf")

    # -- structure

    @property
    def n_delta(self) -> int:
        return len(self.gaps) + 1

    @property
    def n_circle(self) -> int:
        return max((u for _, _, u in self.entries), default=0)

    @property
    def time_entry(self) -> tuple[int, tuple[Fact, int, int]]:
        for i, e in enumerate(self.entries):
            if e[0].pred == TIME:
                return i, e
        raise AssertionError("unreachable")

    @property
    def m(self) -> int:
        return len(self.entries)

    def delta_classes(self) -> list[list[Fact]]:
        out = [[] for _ in range(self.n_delta)]
        for f, d, _ in self.entries:
            out[d].append(f)
        return out

    def circle_classes(self) -> list[list[Fact]]:
        """Zero point first, then the unit-circle classes clockwise."""
        out = [[] for _ in range(self.n_circle + 1)]
        for f, _, u in self.entries:
            out[u].append(f)
        return out

    def render(self) -> str:
        def cls(facts):
            return "{" + ",".join(sorted(f.text for f in facts)) + "}"
        parts = []
        for i, c in enumerate(self.delta_classes()):
            if i:
                g = self.gaps[i - 1]
                parts.append("inf" if g == INF else str(g))
            parts.append(cls(c))
        circle = self.circle_classes()
        us = [cls(circle[0]) + "_Z"] + [cls(c) for c in circle[1:]]
        return f"<{','.join(parts)}> / [{','.join(us)}]"

    __str__ = render

    @property
    def key(self) -> str:
        return canonicalize(self)


def _trusted(entries, gaps, dmax: int) -> CircleConfiguration:
    """Construct without the well-formedness checks, for internal results
    that are well-formed by construction."""
    a = object.__new__(CircleConfiguration)
    object.__setattr__(a, "entries", tuple(sorted(entries, key=_entry_order)))
    object.__setattr__(a, "gaps", tuple(gaps))
    object.__setattr__(a, "dmax", dmax)
    return a


def from_classes(delta, gaps, zero, circle, dmax: int) -> CircleConfiguration:
    """Build from the two partitions.

    ``delta`` and ``circle`` are lists of fact lists, ``zero`` the zero-point
    facts.  Copies of a repeated fact are paired in class order, which is the
    only reading when the partitions alone are given.
    """
    where_d: dict[Fact, list[int]] = {}
    for i, c in enumerate(delta):
        for f in c:
            where_d.setdefault(f, []).append(i)
    where_u: dict[Fact, list[int]] = {}
    for f in zero:
        where_u.setdefault(f, []).append(0)
    for j, c in enumerate(circle, start=1):
        for f in c:
            where_u.setdefault(f, []).append(j)
    if {f: len(v) for f, v in where_d.items()} != {f: len(v) for f, v in where_u.items()}:
        raise InconsistentCircleConfiguration("delta and unit-circle facts differ")
    entries = [(f, d, u) for f in where_d for d, u in zip(where_d[f], where_u[f])]
    gaps = tuple(INF if g in ("inf", INF) else int(g) for g in gaps)
    return CircleConfiguration(tuple(entries), gaps, dmax)


def abstract(s: Configuration, dmax: int) -> CircleConfiguration:
    # integer part and reduced fractional part as plain ints (fast to hash)
    parts = []
    floors = set()
    fracs = {}
    for tf in s.facts:
        t = tf.time
        n, d = t.numerator, t.denominator
        b, r = divmod(n, d)
        parts.append((tf.fact, b, r, d))
        floors.add(b)
        if r and (r, d) not in fracs:
            fracs[r, d] = t - b
    floors = sorted(floors)
    d_of = {b: i for i, b in enumerate(floors)}
    u_of = {rd: j for j, rd in enumerate(sorted(fracs, key=fracs.__getitem__), start=1)}
    entries = [(f, d_of[b], u_of[r, d] if r else 0) for f, b, r, d in parts]
    gaps = [truncate(b - a, dmax) for a, b in zip(floors, floors[1:])]
    return _trusted(entries, gaps, dmax)


def concretize(a: CircleConfiguration) -> Configuration:
    """Canonical representative: integer parts from the gaps (``inf`` read as
    ``dmax + 1``), fractional class ``j`` of ``K`` placed at ``j / (K + 1)``."""
    memo = a.__dict__.get("_concrete")
    if memo is not None:
        return memo
    base = [0]
    for g in a.gaps:
        base.append(base[-1] + (a.dmax + 1 if g == INF else g))
    k = a.n_circle
    steps = [Fraction(u, k + 1) for u in range(k + 1)]
    # entries are ordered by (d, u, text), which is timestamp order here
    s = Configuration._trusted([TimestampedFact(f, base[d] + steps[u]) for f, d, u in a.entries],
                               presorted=True)
    a.__dict__["_concrete"] = s
    return s


def _rebuild(entries, gaps, dmax) -> CircleConfiguration:
    """Renumber delta and circle indices after an edit that may leave holes."""
    ds = sorted({d for _, d, _ in entries})
    us = sorted({u for _, _, u in entries if u})
    dm = {d: i for i, d in enumerate(ds)}
    um = {u: j for j, u in enumerate(us, start=1)}
    um[0] = 0
    return _trusted([(f, dm[d], um[u]) for f, d, u in entries], gaps, dmax)


def next_circle(a: CircleConfiguration) -> CircleConfiguration:
    """Advance Time by one position on the unit circle.

    Time at the zero point, or sharing its class, moves into a fresh class
    just after it.  Time alone in a class joins the next class, or wraps to
    the zero point when it is the last one; only the wrap changes Time's
    integer part and hence the delta part.
    """
    ti, (tf, td, tu) = a.time_entry
    k = a.n_circle
    others = [e for i, e in enumerate(a.entries) if i != ti]
    alone_u = tu != 0 and not any(u == tu for _, _, u in others)

    if not alone_u:
        # a fresh singleton class right after Time's position
        moved = [(f, d, u + 1 if u > tu else u) for f, d, u in others]
        return _trusted(moved + [(tf, td, tu + 1)], a.gaps, a.dmax)
    if tu < k:
        return _rebuild(others + [(tf, td, tu + 1)], a.gaps, a.dmax)

    # wrap: Time's integer part grows by one
    dmax = a.dmax
    gaps = list(a.gaps)
    n = a.n_delta
    alone_d = not any(d == td for _, d, _ in others)
    ents = [(f, d * 2, u) for f, d, u in others]  # even slots: old classes
    if not alone_d:
        if td == n - 1:
            ents.append((tf, td * 2 + 1, 0))
            gaps.append(1)
        elif gaps[td] == 1:
            ents.append((tf, (td + 1) * 2, 0))
        else:
            ents.append((tf, td * 2 + 1, 0))
            g = gaps[td]
            gaps[td:td + 1] = [1, INF if g == INF else g - 1]
        return _rebuild(ents, tuple(gaps), dmax)

    if td > 0:
        gaps[td - 1] = truncate(gaps[td - 1] + 1, dmax)
    if td < n - 1:
        if gaps[td] == 1:
            # lands on the next class: the two classes merge
            ents.append((tf, (td + 1) * 2, 0))
            del gaps[td]
        else:
            ents.append((tf, td * 2, 0))
            if gaps[td] != INF:
                gaps[td] -= 1
    else:
        ents.append((tf, td * 2, 0))
    return _rebuild(ents, tuple(gaps), dmax)


class _Stamp(NamedTuple):
    """A fact with an integer timestamp in units of ``1 / scale``."""

    fact: Fact
    time: int


def _scaled(a: CircleConfiguration) -> tuple[list[_Stamp], int]:
    """The canonical representative with timestamps multiplied by ``K + 1``,
    which makes them integers; ordered like :func:`concretize`."""
    memo = a.__dict__.get("_scaled")
    if memo is not None:
        return memo
    q = a.n_circle + 1
    base = [0]
    for g in a.gaps:
        base.append(base[-1] + (a.dmax + 1 if g == INF else g) * q)
    out = ([_Stamp(f, base[d] + u) for f, d, u in a.entries], q)
    a.__dict__["_scaled"] = out
    return out


def _abstract_scaled(stamps, q: int, dmax: int) -> CircleConfiguration:
    floors = sorted({st.time // q for st in stamps})
    fracs = sorted({st.time % q for st in stamps} - {0})
    d_of = {b: i for i, b in enumerate(floors)}
    u_of = {r: j for j, r in enumerate(fracs, start=1)}
    u_of[0] = 0
    entries = [(st.fact, d_of[st.time // q], u_of[st.time % q]) for st in stamps]
    gaps = [truncate(b - a, dmax) for a, b in zip(floors, floors[1:])]
    return _trusted(entries, gaps, dmax)


def apply_symbolic(rule: Rule, a: CircleConfiguration, capacity: int | None = None
                   ) -> list[tuple[Substitution, CircleConfiguration]]:
    """Rule instances on ``a``, computed on its canonical representative.

    Equal to abstracting :func:`applicable_instances` on ``concretize(a)``;
    the work is done on integer timestamps (see :func:`_scaled`).
    """
    if not rule.balanced:
        raise NotBalanced(f"rule {rule.name} consumes {len(rule.consumed)} facts"
                          f" but creates {len(rule.created)}")
    stamps, q = _scaled(a)
    pool = NoncePool(capacity)
    pats = [(p.fact, p.tvar) for p in rule.pre]
    live = {n for st in stamps for n in fact_nonces(st.fact)} if rule.exists else set()
    now = next(st.time for st in stamps if st.fact.pred == TIME)
    out = []
    for m in match_multiset(pats, stamps, distinct=True):
        times = m.subst.times
        if not all(eval_constraint(c, times, q) for c in rule.guard):
            continue
        terms = dict(m.subst.terms)
        chosen = set(live)
        for x in rule.exists:
            name = pool.fresh(chosen)
            chosen.add(name)
            terms[x] = Nonce(name)
        sub = Substitution(terms, {v: Fraction(t, q) for v, t in times.items()})
        gone = {m.occurrences[i] for i in rule.consumed}
        res = [st for j, st in enumerate(stamps) if j not in gone]
        for c in rule.created:
            res.append(_Stamp(apply_substitution(c.fact, sub, ground=True), now + c.delay * q))
        out.append((sub, _abstract_scaled(res, q, a.dmax)))
    return out


def cc_matches_spec(a: CircleConfiguration, spec: PairSpec) -> bool:
    """Whether the configurations of ``a`` match ``spec`` (equal to
    ``matches_spec(concretize(a), spec)``)."""
    if spec.max_offset() > a.dmax:
        raise OffsetExceedsDmax(f"specification offset {spec.max_offset()} exceeds dmax {a.dmax}")
    stamps, q = _scaled(a)
    for pair in spec.pairs:
        pats = [(p.fact, p.tvar) for p in pair.patterns]
        for m in match_multiset(pats, stamps, rename_nonces=True):
            if all(eval_constraint(c, m.subst.times, q) for c in pair.constraints):
                return True
    return False


# -- canonical keys ----------------------------------------------------------------


def _fmt_gap(g) -> str:
    return "inf" if g == INF else str(g)


_FACT_INFO: dict[str, tuple[str, list[str], list[str]]] = {}


def _info(f: Fact) -> tuple[str, list[str], list[str]]:
    """``(shape, shape split at the nonce holes, nonce names)``, cached by text
    (nonce names have their own namespace, so text determines the fact)."""
    info = _FACT_INFO.get(f.text)
    if info is None:
        sh = shape(f)
        info = (sh, sh.split("?"), fact_nonces(f))
        _FACT_INFO[f.text] = info
    return info


def _serial(order) -> tuple[str, dict[str, str]]:
    """Serialization of ``order`` after renaming nonces by first occurrence."""
    names: dict[str, str] = {}
    items = []
    for f, d, u in order:
        _, parts, nonces = _info(f)
        if nonces:
            out = [parts[0]]
            for n, rest in zip(nonces, parts[1:]):
                new = names.get(n)
                if new is None:
                    new = names[n] = f"n{len(names) + 1}"
                out.append(new)
                out.append(rest)
            items.append(f"{''.join(out)}:{d}.{u}")
        else:
            items.append(f"{f.text}:{d}.{u}")
    return ";".join(items), names


def canonical(a: CircleConfiguration) -> tuple[str, CircleConfiguration]:
    """Canonical key of ``a`` and the nonce-renamed configuration it denotes.

    Occurrences are ordered by (delta class, circle class, shape with nonces
    blanked); within groups of equal shape every ordering is tried and the
    one giving the least serialization after first-occurrence renaming wins.
    """
    head = f"{KEY_PREFIX}{a.dmax}|{','.join(map(_fmt_gap, a.gaps))}|"
    # entries are already ordered by (delta, circle, text)
    raw = head + ";".join(f"{f.text}:{d}.{u}" for f, d, u in a.entries)
    if not any(_info(f)[2] for f, _, _ in a.entries):
        return raw, a
    hit = _CANONICAL.get(raw)
    if hit is None:
        if len(_CANONICAL) >= _CANONICAL_SIZE:
            _CANONICAL.clear()
        hit = _CANONICAL[raw] = _canonical_nonces(a, head)
    return hit


# the search generates most states several times; renaming is the costly part
_CANONICAL: dict[str, tuple[str, CircleConfiguration]] = {}
_CANONICAL_SIZE = 1 << 17


def _canonical_nonces(a: CircleConfiguration, head: str) -> tuple[str, CircleConfiguration]:
    ents = sorted(a.entries, key=lambda e: (e[1], e[2], _info(e[0])[0], e[0].text))
    groups: list[list] = []
    last = None
    for e in ents:
        k = (e[1], e[2], _info(e[0])[0])
        if k == last:
            groups[-1].append(e)
        else:
            groups.append([e])
            last = k
    choices = []
    for g in groups:
        if len(g) > 1 and _info(g[0][0])[2]:
            choices.append(list(dict.fromkeys(permutations(g))))
        else:
            choices.append([tuple(g)])
    best = None
    for combo in product(*choices):
        text, names = _serial([e for part in combo for e in part])
        if best is None or text < best[0]:
            best = (text, names)
    text, names = best
    if all(k == v for k, v in names.items()):
        return head + text, a
    sub = Substitution(nonces=names)
    renamed = _trusted([(apply_substitution(f, sub), d, u) for f, d, u in a.entries],
                       a.gaps, a.dmax)
    return head + text, renamed


def canonicalize(a: CircleConfiguration) -> str:
    return canonical(a)[0]


def from_key(key: str) -> CircleConfiguration:
    from .lang import parse_fact

    if not key.startswith(KEY_PREFIX):
        raise ValueError(f"not a circle-configuration key: {key!r}")
    dmax, gaps, body = key[len(KEY_PREFIX):].split("|", 2)
    gaps_t = tuple(INF if g == "inf" else int(g) for g in gaps.split(",") if g)
    entries = []
    for item in body.split(";"):
        text, pos = item.rsplit(":", 1)
        d, u = pos.split(".")
        entries.append((parse_fact(text), int(d), int(u)))
    return CircleConfiguration(tuple(entries), gaps_t, int(dmax))

