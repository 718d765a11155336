"""Command-line interface: ``tempora check|abstract|bound|validate``.

Exit codes: 0 reachable / valid, 1 unreachable / invalid, 2 usage, parse or
validation error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

from . import __version__
from .circle import abstract, canonicalize
from .errors import TemporaError, TraceSchemaError
from .explicit import explicit_search
from .lang import SpecError, load, parse_configuration
from .reach import (
    concrete_json,
    concretize_trace,
    load_concrete_trace,
    problem_bound,
    report_json,
    solve,
    state_bound,
    symbolic_json,
    validate_concrete_trace,
)
from .semantics import problem_numbers, smallest_dmax

EXIT_OK, EXIT_NO, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(args, command: str, code: int, payload: dict, text: str, started: float) -> int:
    if args.json:
        report = {"command": command, "exitCode": code}
        if args.timing:
            report["durationMillis"] = int((time.perf_counter() - started) * 1000)
        report["payload"] = payload
        print(json.dumps(report, indent=2))
    else:
        print(text)
        if args.timing:
            print(f"time: {int((time.perf_counter() - started) * 1000)} ms")
    return code


def _load_problem(path: str, allow_unbalanced: bool = False):
    try:
        src = load(path, allow_unbalanced=allow_unbalanced)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    for d in src.diagnostics:
        print(f"{path}:{d}", file=sys.stderr)
    if src.problem is None:
        raise UsageError(f"{path}: specification has errors")
    return src.problem


def _override_dmax(p, dmax: int | None):
    if dmax is None:
        return p
    auto = smallest_dmax(problem_numbers(p.initial, p.rules, p.critical, p.goal))
    if dmax < auto:
        raise UsageError(f"--dmax {dmax} is below the required bound {auto}")
    return dataclasses.replace(p, dmax=dmax)


def cmd_check(args) -> int:
    started = time.perf_counter()
    p = _override_dmax(_load_problem(args.spec, allow_unbalanced=True), args.dmax)
    if not p.balanced or args.concrete_depth is not None:
        if args.concrete_depth is None:
            raise UsageError("the symbolic solver needs balanced rules; use"
                             " --concrete-depth N for a bounded (incomplete) concrete search")
        res = explicit_search(p, max_depth=args.concrete_depth, max_states=args.max_states)
        payload = {"reachable": res.reachable, "complete": res.complete,
                   "statesVisited": res.states, "depth": args.concrete_depth}
        verdict = "reachable" if res.reachable else (
            "unreachable" if res.complete else "not reached within the depth bound (incomplete)")
        lines = [verdict, f"states visited: {res.states}"]
        if res.path:
            lines += [f"  {label}: {s}" for label, s in res.path]
        return _emit(args, "check", EXIT_OK if res.reachable else EXIT_NO, payload,
                     "\n".join(lines), started)

    v = solve(p, mode=args.mode, max_states=args.max_states, workers=args.workers,
              budget=args.budget)
    payload = symbolic_json(v)
    lines = ["reachable" if v.reachable else "unreachable",
             f"states visited: {v.states_visited}", f"state bound: {v.bound}"]
    code = EXIT_OK if v.reachable else EXIT_NO
    if v.trace is not None:
        lines.append(f"start: {v.trace.start}")
        for st in v.trace.steps:
            label = f"rule {st.rule}" if st.kind == "rule" else "next"
            lines.append(f"  {label}: {st.result}")
    if args.witness and v.trace is not None:
        ct = concretize_trace(v.trace, p)
        rep = validate_concrete_trace(ct, p)
        payload["witness"] = concrete_json(ct)
        payload["validation"] = report_json(rep)
        lines.append(f"witness: {ct.start}")
        for st in ct.steps:
            if st.kind == "tick":
                lines.append(f"  tick {st.epsilon}")
            else:
                lines.append(f"  rule {st.rule} {_fmt_subst(st.substitution)}")
        lines.append("witness valid" if rep.ok else f"witness INVALID: {rep.first.message}")
        if not rep.ok:
            code = EXIT_NO
    return _emit(args, "check", code, payload, "\n".join(lines), started)


def _fmt_subst(sub) -> str:
    if sub is None:
        return ""
    items = [f"{k}={v}" for k, v in sub.summary().items()]
    return "{" + ", ".join(items) + "}"


def cmd_abstract(args) -> int:
    started = time.perf_counter()
    target = args.target
    if Path(target).is_file():
        p = _override_dmax(_load_problem(target, allow_unbalanced=True), args.dmax)
        s, dmax = p.initial, p.dmax
    else:
        try:
            s = parse_configuration(target)
        except SpecError as e:
            raise UsageError(f"cannot parse configuration: {e}") from None
        auto = smallest_dmax(tf.time for tf in s)
        dmax = args.dmax if args.dmax is not None else auto
    a = abstract(s, dmax)
    payload = {"dmax": dmax, "circle": a.render(), "key": canonicalize(a)}
    return _emit(args, "abstract", EXIT_OK, payload, a.render(), started)


def cmd_bound(args) -> int:
    started = time.perf_counter()
    vals = {"J": args.J, "E": args.E, "m": args.m, "k": args.k, "dmax": args.dmax}
    if args.spec is not None:
        p = _override_dmax(_load_problem(args.spec, allow_unbalanced=True), None)
        a = p.alphabet
        base = {"J": a.J, "E": a.E, "m": p.m, "k": p.k, "dmax": p.dmax}
        vals = {k: base[k] if v is None else v for k, v in vals.items()}
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise UsageError(f"bound needs a spec or explicit values for {', '.join(missing)}")
    if any(v < 0 for v in vals.values()):
        raise UsageError("bound parameters must be non-negative")
    L = state_bound(vals["J"], vals["E"], vals["m"], vals["k"], vals["dmax"])
    payload = {**vals, "L": str(L)}
    text = " ".join(f"{k}={v}" for k, v in vals.items()) + f"\nL={L}"
    return _emit(args, "bound", EXIT_OK, payload, text, started)


def cmd_validate(args) -> int:
    started = time.perf_counter()
    p = _load_problem(args.spec, allow_unbalanced=True)
    try:
        raw = Path(args.trace).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {args.trace}: {e.strerror}") from None
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise UsageError(f"{args.trace}: not JSON: {e}") from None
    if isinstance(data, dict) and isinstance(data.get("payload"), dict):
        data = data["payload"]
    try:
        t = load_concrete_trace(data, p)
    except TraceSchemaError as e:
        raise UsageError(f"{args.trace}: {e}") from None
    rep = validate_concrete_trace(t, p, check_goal=not args.no_goal)
    payload = report_json(rep)
    if rep.ok:
        text = "valid"
    else:
        v = rep.first
        text = f"invalid: step {v.step}: {v.message}"
    return _emit(args, "validate", EXIT_OK if rep.ok else EXIT_NO, payload, text, started)


def cmd_fuzz(args) -> int:
    from .fuzz import corpus, differential, seed_from_env

    started = time.perf_counter()
    seed = seed_from_env()
    bad = []
    for text, p in corpus(seed, args.count):
        o = differential(text, p)
        if not o.agree or o.states > o.bound:
            bad.append(o)
            print(f"disagreement: symbolic={o.symbolic} concrete={o.concrete}"
                  f" witness={o.witness_ok}\n{text}", file=sys.stderr)
    payload = {"seed": seed, "count": args.count, "disagreements": len(bad)}
    text = f"seed {seed}: {args.count} problems, {len(bad)} disagreements"
    return _emit(args, "fuzz", EXIT_NO if bad else EXIT_OK, payload, text, started)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempora",
        description="Non-critical reachability for timed multiset rewriting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable report")
    common.add_argument("--timing", action="store_true",
                        help="report wall-clock time (makes JSON output run-dependent)")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("check", parents=[common], help="decide reachability for a .tmsr file")
    p.add_argument("spec")
    p.add_argument("--mode", choices=["visited", "depth"], default="visited")
    p.add_argument("--dmax", type=int, help="override dmax (must not be below the automatic value)")
    p.add_argument("--witness", action="store_true",
                   help="also emit a concrete witness trace and validate it")
    p.add_argument("--max-states", type=int, help="abort after this many states")
    p.add_argument("--workers", type=int, default=1, help="threads expanding the frontier")
    p.add_argument("--budget", type=int, help="expansion budget for --mode depth")
    p.add_argument("--concrete-depth", type=int, metavar="N",
                   help="bounded concrete search instead of the symbolic solver"
                        " (incomplete; allows unbalanced rules)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("abstract", parents=[common],
                       help="print the circle-configuration of a configuration")
    p.add_argument("target", help="a .tmsr file (its init) or a literal like '{Time@0, F@1.5}'")
    p.add_argument("--dmax", type=int)
    p.set_defaults(func=cmd_abstract)

    p = sub.add_parser("bound", parents=[common], help="print the state-count bound")
    p.add_argument("spec", nargs="?")
    for name in ("J", "E", "m", "k", "dmax"):
        p.add_argument(f"--{name}", type=int, dest=name)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("validate", parents=[common], help="check a concrete trace file")
    p.add_argument("spec")
    p.add_argument("trace")
    p.add_argument("--no-goal", action="store_true", help="do not require the goal at the end")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fuzz", parents=[common], help=argparse.SUPPRESS)
    p.add_argument("--count", type=int, default=100)
    p.set_defaults(func=cmd_fuzz)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except TemporaError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
