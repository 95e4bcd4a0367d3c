"""Command-line front end.

Exit statuses: 0 verdict true (or success), 1 verdict false, 2 usage,
parse or validation error, 3 resource limit exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from . import qsctl as q
from .cbs import Evaluator, Witness
from .charsets import char_sets, identity_violations
from .guards import GuardError
from .model import ModelError, validate_system
from .modelfile import ModelSyntaxError, fixture_names, fixture_text, load_model
from .oracle import UnsupportedFormula, label
from .rg import DEFAULT_STATE_LIMIT, RGraph, ResourceLimitError, compose, export_dot, export_json, to_rg_at

EXIT_TRUE, EXIT_FALSE, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _build(model: str, state_limit: int, rg_at: bool = True):
    try:
        system = load_model(model)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    diags = validate_system(system)
    if diags:
        raise UsageError("validation failed:\n" + "\n".join(f"  {d}" for d in diags))
    rg = compose(system, state_limit=state_limit)
    return system, (to_rg_at(rg) if rg_at else rg)


def _arc_guard(rg: RGraph, u: int, v: int) -> Optional[str]:
    for arc in rg.out_arcs[u]:
        if arc.dst == v:
            return str(arc.guard)
    return None


def witness_dict(rg: RGraph, w: Witness) -> dict:
    path = list(w.path)
    steps = list(zip(path, path[1:]))
    if w.loop_start is not None:
        steps.append((path[-1], path[w.loop_start]))
    out = {
        "formula": q.to_text(w.formula),
        "kind": "lasso" if w.is_lasso else ("path" if len(path) > 1 else "state"),
        "states": [rg.names[s] for s in path],
        "guards": [_arc_guard(rg, u, v) for u, v in steps],
        "loop_start": w.loop_start,
        "cause": witness_dict(rg, w.cause) if w.cause is not None else None,
    }
    if w.binding is not None:
        out["binding"] = {w.binding[0]: rg.names[w.binding[1]]}
    return out


def _read_formula(text: str) -> str:
    if text.startswith("@"):
        return Path(text[1:]).read_text().strip()
    return text


def cmd_compose(args) -> int:
    _, rg = _build(args.model, args.state_limit, rg_at=args.rg_at)
    if args.dot:
        Path(args.dot).write_text(export_dot(rg))
    if args.json:
        Path(args.json).write_text(export_json(rg))
    kind = "RG@" if args.rg_at else "RG"
    print(f"{kind}: {len(rg.states)} states, {len(rg.arcs)} arcs, "
          f"{sum(rg.terminal)} terminal")
    return EXIT_TRUE


def cmd_check(args) -> int:
    system, rg = _build(args.model, args.state_limit)
    env: dict[str, int] = {}
    for item in args.bind or ():
        name, _, state = item.partition("=")
        if not name or not state:
            raise UsageError(f"--bind expects NAME=STATE, got {item!r}")
        try:
            env[name] = rg.state_id(state)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
    text = _read_formula(args.formula)
    f = q.parse_formula(text, bound=env)
    diags = q.bind_check(f, rg=rg, system=system, bound=env)
    if diags:
        raise UsageError("formula does not bind-check:\n" + "\n".join(f"  {d}" for d in diags))
    try:
        anchor = rg.initial if args.anchor is None else rg.state_id(args.anchor)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None

    started = time.perf_counter()
    ev = Evaluator(rg, memo=not args.no_memo)
    result = ev.check(f, anchor, env)
    elapsed = time.perf_counter() - started

    report = {
        "formula": q.to_text(f),
        "anchor": rg.names[anchor],
        "verdict": result.verdict,
        "witness": None,
        "stats": None,
    }
    if args.witness and result.witness is not None:
        report["witness"] = witness_dict(rg, result.witness)
    if args.stats:
        st = result.stats
        report["stats"] = {
            "graph_states": len(rg.states),
            "graph_arcs": len(rg.arcs),
            "cbs_runs": st.cbs_runs,
            "spheres_built": st.spheres_built,
            "states_visited": st.states_visited,
            "arcs_followed": st.arcs_followed,
            "inner_evaluations": st.inner_evaluations,
            "memo_hits": st.memo_hits,
        }
        if args.timing:
            report["stats"]["seconds"] = round(elapsed, 6)
    if args.oracle:
        f_oracle = f
        for name, sid in env.items():
            f_oracle = q.substitute(f_oracle, name, rg.names[sid])
        try:
            lab = label(rg, f_oracle)
        except UnsupportedFormula as exc:
            raise UsageError(f"--oracle unsupported: {exc}") from None
        expected = anchor in lab[f_oracle]
        report["oracle"] = {"verdict": expected, "agrees": expected == result.verdict}
    print(_dump(report))
    if args.exit_zero:
        return EXIT_TRUE
    return EXIT_TRUE if result.verdict else EXIT_FALSE


def cmd_charsets(args) -> int:
    _, rg = _build(args.model, args.state_limit)
    try:
        s = rg.state_id(args.state)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    cs = char_sets(rg, s)

    def names(ids):
        return sorted(rg.names[i] for i in ids)

    violations = identity_violations(cs)
    print(_dump({
        "state": rg.names[s],
        "fut": names(cs.fut),
        "pas": names(cs.pas),
        "cyc": names(cs.cyc),
        "end": names(cs.end_),
        "beg": names(cs.beg),
        "identities_ok": not violations,
        "violations": violations,
    }))
    return EXIT_TRUE if not violations else EXIT_FALSE


def cmd_fixtures(args) -> int:
    if args.name:
        if args.name not in fixture_names():
            raise UsageError(f"no bundled fixture named {args.name!r}")
        sys.stdout.write(fixture_text(args.name))
    else:
        print("\n".join(fixture_names()))
    return EXIT_TRUE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cbscheck",
        description="Compose CSM automata and check QsCTL formulas by sphere expansion.")
    p.add_argument("--state-limit", type=int, default=DEFAULT_STATE_LIMIT,
                   help="abort composition beyond this many global states")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compose", help="build the reachability graph")
    c.add_argument("model", help="model file, or the name of a bundled fixture")
    c.add_argument("--dot", metavar="PATH", help="write DOT text here")
    c.add_argument("--json", metavar="PATH", help="write a JSON dump here")
    c.add_argument("--rg-at", action="store_true",
                   help="drop ears of non-terminal states before export")
    c.set_defaults(func=cmd_compose)

    k = sub.add_parser("check", help="evaluate a formula")
    k.add_argument("model")
    k.add_argument("formula", help="formula text, or @FILE to read it from a file")
    k.add_argument("--anchor", metavar="STATE", help="evaluate here instead of the initial state")
    k.add_argument("--bind", metavar="VAR=STATE", action="append",
                   help="bind a state variable used free in the formula")
    k.add_argument("--oracle", action="store_true",
                   help="also run the fixed-point labeling and report agreement")
    k.add_argument("--witness", action="store_true", help="include the counterexample")
    k.add_argument("--stats", action="store_true", help="include traversal statistics")
    k.add_argument("--timing", action="store_true", help="add wall-clock time to the stats")
    k.add_argument("--no-memo", action="store_true", help="disable sub-formula caching")
    k.add_argument("--exit-zero", action="store_true",
                   help="exit 0 whatever the verdict")
    k.set_defaults(func=cmd_check)

    s = sub.add_parser("charsets", help="characteristic sets of a global state")
    s.add_argument("model")
    s.add_argument("state")
    s.set_defaults(func=cmd_charsets)

    f = sub.add_parser("fixtures", help="list bundled fixtures or print one")
    f.add_argument("name", nargs="?")
    f.set_defaults(func=cmd_fixtures)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (UsageError, ModelError, ModelSyntaxError, q.FormulaSyntaxError,
            GuardError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
