"""Reference search over concrete configurations.

This does not use circle-configurations at all: states are rational
configurations, time only advances to immediate-successor representatives,
and states are deduplicated up to :func:`equivalent` (through its complete
invariant :func:`equivalence_key`).  It is the oracle the
symbolic solver is tested against.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .errors import SearchBudgetExceeded
from .semantics import (
    Configuration,
    Problem,
    applicable_instances,
    equivalence_key,
    immediate_successor_reps,
    matches_spec,
)


@dataclass
class ExplicitResult:
    reachable: bool
    states: int
    path: list[tuple[str, Configuration]] | None = None
    complete: bool = True  # False when the depth cap cut the search short


class _Seen:
    """Set of configurations up to equivalence."""

    def __init__(self, dmax: int):
        self.dmax = dmax
        self.keys: set = set()

    @property
    def size(self) -> int:
        return len(self.keys)

    def add(self, s: Configuration) -> bool:
        key = equivalence_key(s, self.dmax)
        if key in self.keys:
            return False
        self.keys.add(key)
        return True


def explicit_search(p: Problem, max_depth: int | None = None,
                    max_states: int | None = 200_000) -> ExplicitResult:
    """Breadth-first non-critical reachability on concrete configurations.

    Works for unbalanced problems too, but then it may not terminate unless
    ``max_depth`` is given; a cut-off search reports ``complete=False``.
    """
    seen = _Seen(p.dmax)
    seen.add(p.initial)
    queue = deque([(p.initial, 0, None)])
    complete = True
    while queue:
        s, depth, trail = queue.popleft()
        if p.critical and matches_spec(s, p.critical):
            continue
        if p.goal and matches_spec(s, p.goal):
            return ExplicitResult(True, seen.size, _unwind(trail, s))
        if max_depth is not None and depth >= max_depth:
            complete = False
            continue
        succ = []
        for r in p.rules:
            for _, t in applicable_instances(r, s):
                succ.append((r.name, t))
        rep = immediate_successor_reps(s, p.dmax).representative
        if rep is not None:
            succ.append(("tick", rep))
        for label, t in succ:
            if seen.add(t):
                if max_states is not None and seen.size > max_states:
                    raise SearchBudgetExceeded(f"more than {max_states} concrete states")
                queue.append((t, depth + 1, (trail, label, s)))
    return ExplicitResult(False, seen.size, None, complete)


def _unwind(trail, last: Configuration) -> list[tuple[str, Configuration]]:
    out = []
    node, cur = trail, last
    while node is not None:
        prev, label, src = node
        out.append((label, cur))
        node, cur = prev, src
    out.reverse()
    return out
