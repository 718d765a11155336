"""Random small problems and the symbolic-vs-concrete differential check."""

from __future__ import annotations

import os
import random
from dataclasses import dataclass

from .explicit import explicit_search
from .lang import parse
from .reach import concretize_trace, problem_bound, solve, validate_concrete_trace
from .semantics import Problem

STAMPS = ["0", "1/2", "1", "3/2"]


def seed_from_env(default: int = 0) -> int:
    return int(os.environ.get("TEMPORA_SEED", default))


def _fact(rng: random.Random, preds: dict, consts: list, vars_: list | None) -> str:
    name = rng.choice(sorted(preds))
    if preds[name] == 0:
        return name
    pool = list(consts) + (vars_ or [])
    return f"{name}({rng.choice(pool)})"


def _guard(rng: random.Random, tvars: list, n: int) -> list[str]:
    out = []
    for _ in range(n):
        a, b = rng.choice(tvars), rng.choice(tvars)
        if a == b:
            continue
        rel = rng.choice([">", ">=", "="])
        off = rng.choice([-1, 0, 1])
        tail = f" + {off}" if off > 0 else f" - {-off}" if off < 0 else ""
        out.append(f"{a} {rel} {b}{tail}")
    return out


def random_problem_text(rng: random.Random, tiny: bool = False) -> str:
    """A balanced problem with ``m <= 4``, fact size ``<= 2`` and ``dmax <= 3``.

    Timestamps lie in ``{0, 1/2, 1, 3/2}``, offsets in ``{-1, 0, 1}`` and
    delays in ``{0, 1}``, so the automatic dmax is at most 3.  ``tiny``
    problems use two facts and nullary predicates only.
    """
    if tiny:
        preds = {p: 0 for p in rng.sample(["P", "Q", "R"], rng.randint(1, 2))}
        consts: list[str] = []
        m = 2
    else:
        preds = {p: rng.randint(0, 1) for p in rng.sample(["P", "Q", "R"], rng.randint(1, 3))}
        consts = rng.sample(["a", "b"], rng.randint(1, 2))
        m = rng.randint(2, 4)

    init = ["Time@" + rng.choice(STAMPS)]
    init += [f"{_fact(rng, preds, consts, None)}@{rng.choice(STAMPS)}" for _ in range(m - 1)]
    lines = [f"init {{ {', '.join(init)} }}"]

    unary = [p for p, a in preds.items() if a == 1]
    for i in range(rng.randint(1, 3)):
        n_pre = rng.randint(1, min(2, m - 1))
        tvars = ["T"] + [f"T{j}" for j in range(1, n_pre + 1)]
        vars_ = ["X", "Y"][: rng.randint(0, 2)] if consts else []
        pre = [f"{_fact(rng, preds, consts, vars_)}@{tvars[j + 1]}" for j in range(n_pre)]
        bound_vars = {v for v in vars_ if any(f"({v})" in q for q in pre)}
        n_keep = rng.randint(0, n_pre - 1) if n_pre > 1 else 0
        keep = pre[:n_keep]
        n_new = n_pre - n_keep
        exists = ""
        created = []
        if unary and rng.random() < 0.25:
            exists = "exists N. "
            created.append(f"{rng.choice(unary)}(N)@(T+{rng.randint(0, 1)})")
        while len(created) < n_new:
            created.append(f"{_fact(rng, preds, consts, sorted(bound_vars))}@(T+{rng.randint(0, 1)})")
        guard = _guard(rng, tvars, rng.randint(0, 2))
        head = ", ".join(["Time@T"] + pre)
        if guard:
            head += " | " + ", ".join(guard)
        post = ", ".join(["Time@T"] + keep + created)
        lines.append(f"rule r{i}: {head} -o {exists}{post}")

    for kind, chance in (("critical", 0.7), ("goal", 1.0)):
        if rng.random() < chance:
            n = rng.randint(1, 2)
            tvars = ["T"] + [f"T{j}" for j in range(1, n + 1)]
            pats = ["Time@T"] + [f"{_fact(rng, preds, consts, ['X'] if consts else [])}@{tvars[j + 1]}"
                                 for j in range(n)]
            guard = _guard(rng, tvars, rng.randint(1, 2))
            body = ", ".join(pats) + (" | " + ", ".join(guard) if guard else "")
            lines.append(f"{kind} {{ {body} }}")
    return "\n".join(lines) + "\n"


def random_problem(rng: random.Random, tiny: bool = False) -> Problem:
    return parse(random_problem_text(rng, tiny))


def corpus(seed: int, count: int, tiny_share: float = 0.3) -> list[tuple[str, Problem]]:
    rng = random.Random(seed)
    out = []
    while len(out) < count:
        text = random_problem_text(rng, tiny=rng.random() < tiny_share)
        out.append((text, parse(text)))
    return out


@dataclass
class Outcome:
    text: str
    symbolic: bool
    concrete: bool
    states: int
    bound: int
    witness_ok: bool | None = None

    @property
    def agree(self) -> bool:
        return self.symbolic == self.concrete and self.witness_ok is not False


def differential(text: str, p: Problem) -> Outcome:
    v = solve(p)
    c = explicit_search(p)
    ok = None
    if v.reachable:
        ok = validate_concrete_trace(concretize_trace(v.trace, p), p).ok
    return Outcome(text, v.reachable, c.reachable, v.states_visited, problem_bound(p), ok)
