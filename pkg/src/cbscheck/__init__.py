"""Explicit-state checking of QsCTL formulas over systems of CSM automata.

Typical use::

    from cbscheck import load_model, compose, to_rg_at, parse_formula, check

    rg = to_rg_at(compose(load_model("clientserver_v1")))
    result = check(rg, parse_formula("AG (in sig(call) -> AF resp)"))
"""

from .cbs import CbsOutcome, CbsSpec, Evaluator, Witness, check, extract_witness, run_cbs
from .charsets import CharSets, char_sets, future, past
from .guards import parse_guard
from .model import Arc, Automaton, System, signals_of, validate_system
from .modelfile import load_model, parse_model
from .oracle import label
from .qsctl import bind_check, parse_formula, to_text
from .rg import RGraph, compose, export_dot, export_json, to_rg_at

__all__ = [
    "Arc", "Automaton", "System", "signals_of", "validate_system",
    "load_model", "parse_model", "parse_guard",
    "RGraph", "compose", "to_rg_at", "export_dot", "export_json",
    "CharSets", "char_sets", "future", "past",
    "parse_formula", "to_text", "bind_check",
    "CbsSpec", "CbsOutcome", "run_cbs", "extract_witness", "Evaluator", "Witness", "check",
    "label",
]
