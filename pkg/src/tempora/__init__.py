"""Timed multiset rewriting: exact semantics and non-critical reachability."""

__version__ = "0.1.0"

from .circle import (
    CircleConfiguration,
    abstract,
    apply_symbolic,
    canonicalize,
    cc_matches_spec,
    concretize,
    from_key,
    next_circle,
)
from .explicit import explicit_search
from .lang import parse, parse_configuration, serialize
from .reach import (
    concretize_trace,
    solve,
    state_bound,
    validate_concrete_trace,
)
from .semantics import (
    Configuration,
    Problem,
    Rule,
    applicable_instances,
    compute_dmax,
    equivalent,
    immediate_successor_reps,
    matches_spec,
    tick,
)
from .terms import Fact, Substitution, apply_substitution, fact_size, match_multiset

__all__ = [
    "CircleConfiguration", "Configuration", "Fact", "Problem", "Rule", "Substitution",
    "abstract", "applicable_instances", "apply_substitution", "apply_symbolic",
    "canonicalize", "cc_matches_spec", "compute_dmax", "concretize", "concretize_trace",
    "equivalent", "explicit_search", "fact_size", "from_key", "immediate_successor_reps",
    "match_multiset", "matches_spec", "next_circle", "parse", "parse_configuration",
    "serialize", "solve", "state_bound", "tick", "validate_concrete_trace",
]
